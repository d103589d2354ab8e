#include "perclim/rooted_tree.hpp"

#include <algorithm>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace perclim {

std::vector<std::pair<int, int>> RootedTree::edges() const {
  std::vector<std::pair<int, int>> es;
  for (std::size_t v = 1; v < parent.size(); ++v) es.emplace_back(parent[v], static_cast<int>(v));
  return es;
}

namespace {

// Trees are generated by size: a tree on k vertices is a root plus a multiset
// of branches with sizes summing to k-1. Multisets are enumerated as
// nonincreasing sequences under the (size, index) order, so each class
// appears exactly once.

std::uint64_t factorial(std::size_t j) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= j; ++i) f *= i;
  return f;
}

RootedTree assemble(const std::vector<const RootedTree*>& branches) {
  // sort branch codes for the canonical encoding and a deterministic layout
  std::vector<const RootedTree*> sorted = branches;
  std::sort(sorted.begin(), sorted.end(),
            [](const RootedTree* a, const RootedTree* b) { return a->code < b->code; });
  RootedTree t;
  t.parent.push_back(-1);
  t.code = "(";
  std::uint64_t aut = 1;
  std::size_t group_len = 0;
  for (std::size_t bi = 0; bi < sorted.size(); ++bi) {
    const RootedTree& br = *sorted[bi];
    const int base = static_cast<int>(t.parent.size());
    t.parent.push_back(0);  // branch root hangs off the global root
    for (std::size_t v = 1; v < br.parent.size(); ++v) t.parent.push_back(base + br.parent[v]);
    t.code += br.code;
    aut *= br.aut;
    // maximal runs of identical codes contribute j!
    ++group_len;
    if (bi + 1 == sorted.size() || sorted[bi + 1]->code != br.code) {
      aut *= factorial(group_len);
      group_len = 0;
    }
  }
  t.code += ")";
  t.aut = aut;
  return t;
}

class TreeCatalog {
 public:
  const std::vector<RootedTree>& of_size(int k) {
    std::lock_guard<std::mutex> lock(mu_);
    while (static_cast<int>(by_size_.size()) <= k) grow();
    return by_size_[static_cast<std::size_t>(k)];
  }

 private:
  void grow() {
    const int k = static_cast<int>(by_size_.size());
    std::vector<RootedTree> trees;
    if (k == 1) {
      trees.push_back(RootedTree{{-1}, 1, "()"});
    } else if (k >= 2) {
      std::vector<const RootedTree*> branches;
      compose(k - 1, k - 1, std::numeric_limits<std::size_t>::max(), branches, trees);
    }
    by_size_.push_back(std::move(trees));
  }

  // Append branches with total size `remaining`, each item at most
  // (max_size, max_index) in the (size, index) order, nonincreasing.
  void compose(int remaining, int max_size, std::size_t max_index,
               std::vector<const RootedTree*>& branches, std::vector<RootedTree>& out) {
    if (remaining == 0) {
      out.push_back(assemble(branches));
      return;
    }
    for (int s = std::min(remaining, max_size); s >= 1; --s) {
      const std::vector<RootedTree>& pool = by_size_[static_cast<std::size_t>(s)];
      std::size_t hi = (s == max_size) ? std::min(max_index, pool.size() - 1) : pool.size() - 1;
      for (std::size_t idx = 0; idx <= hi; ++idx) {
        branches.push_back(&pool[hi - idx]);  // descending index within equal size
        compose(remaining - s, s, hi - idx, branches, out);
        branches.pop_back();
      }
    }
  }

  std::mutex mu_;
  std::vector<std::vector<RootedTree>> by_size_{{}};  // index 0 unused
};

}  // namespace

const std::vector<RootedTree>& enumerate_rooted_trees(int k) {
  if (k < 1) throw std::invalid_argument("enumerate_rooted_trees: k must be >= 1");
  if (k > kMaxTreeVertices) {
    throw std::invalid_argument("enumerate_rooted_trees: k > " +
                                std::to_string(kMaxTreeVertices) +
                                " (class count grows too fast)");
  }
  static TreeCatalog catalog;
  return catalog.of_size(k);
}

}  // namespace perclim
