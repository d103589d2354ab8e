#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace perclim {

// Canonical representative of a rooted-isomorphism class.
struct RootedTree {
  // parent[0] = -1 (the root); parent[i] < i for i >= 1.
  std::vector<int> parent;
  // automorphism count as a rooted tree: product over branches of their aut
  // counts, times j! for each maximal group of j isomorphic branches
  std::uint64_t aut = 1;
  // AHU code: "(" + concatenation of sorted child codes + ")"; two rooted
  // trees are isomorphic iff their codes match
  std::string code;

  std::size_t size() const { return parent.size(); }
  std::vector<std::pair<int, int>> edges() const;
};

inline constexpr int kMaxTreeVertices = 12;  // A000081 growth; 12 -> 4766 classes

// One representative per rooted-isomorphism class on k vertices, in a fixed
// deterministic order. Cached; throws for k < 1 or k > 12.
const std::vector<RootedTree>& enumerate_rooted_trees(int k);

}  // namespace perclim
