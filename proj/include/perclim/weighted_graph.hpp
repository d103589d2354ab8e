#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perclim/step_kernel.hpp"

namespace perclim {

// Symmetric nonnegative edge-weight matrix with zero diagonal. Two storage
// backings with identical observable behavior:
//
//   dense  the n x n matrix held explicitly (loaded graphs, small tests);
//   block  vertices carry block labels and weights come from an m x m value
//          matrix (generated families), so memory stays O(n + m^2) and the
//          percolation experiments can run at n ~ 1e5.
//
// All operations produce the same results on both backings (the per-pair
// random stream in the percolation sampler is bit-identical); this is
// equivalence-tested on densified copies.
class WeightedGraph {
 public:
  enum class Backing { dense, block };

  static WeightedGraph from_dense(std::size_t n, std::vector<double> beta);
  static WeightedGraph from_blocks(std::size_t n, std::vector<std::uint32_t> block_of,
                                   std::size_t block_count, std::vector<double> block_values,
                                   std::vector<double> types = {});

  std::size_t size() const { return n_; }
  Backing backing() const { return backing_; }
  double beta_max() const { return beta_max_; }

  double beta(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (backing_ == Backing::dense) return dense_[i * n_ + j];
    return block_values_[block_of_[i] * m_ + block_of_[j]];
  }

  // dense backing
  const std::vector<double>& dense_values() const { return dense_; }
  std::span<const double> dense_row(std::size_t i) const {
    return {dense_.data() + i * n_, n_};
  }

  // block backing
  std::size_t block_count() const { return m_; }
  const std::vector<std::uint32_t>& block_of() const { return block_of_; }
  const std::vector<double>& block_values() const { return block_values_; }
  const std::vector<std::int64_t>& block_sizes() const { return block_sizes_; }
  bool blocks_contiguous() const { return contiguous_; }
  // Sampled type coordinates (sample_dense only), for diagnostics.
  const std::vector<double>& types() const { return types_; }

  // Dense copy of a block-backed graph (guarded against huge n).
  WeightedGraph densified() const;

 private:
  WeightedGraph() = default;

  std::size_t n_ = 0;
  Backing backing_ = Backing::dense;
  std::vector<double> dense_;
  std::size_t m_ = 0;
  std::vector<std::uint32_t> block_of_;
  std::vector<double> block_values_;
  std::vector<std::int64_t> block_sizes_;
  std::vector<double> types_;
  bool contiguous_ = false;
  double beta_max_ = 0.0;
};

// All off-diagonal weights 1.
WeightedGraph complete_graph(std::size_t n);

// Deterministic graph converging to W: beta_ij = W((i+1/2)/n, (j+1/2)/n),
// diagonal zeroed. Midpoint sampling avoids block-boundary artifacts.
WeightedGraph blowup(const StepKernel& kernel, std::size_t n);

// Random graph H(n, W): types X_i iid uniform, beta_ij = W(X_i, X_j).
WeightedGraph sample_dense(const StepKernel& kernel, std::size_t n, std::uint64_t seed);

double weighted_degree(const WeightedGraph& g, std::size_t v);
std::vector<double> weighted_degrees(const WeightedGraph& g);

// y = beta * x. O(n^2) on the dense backing, O(n + m^2) on the block one.
void adjacency_matvec(const WeightedGraph& g, const double* x, double* y);

// Largest adjacency eigenvalue via power iteration (relative tolerance 1e-10,
// at most 1e5 iterations); throws ConvergenceError on failure.
double top_eigenvalue(const WeightedGraph& g);

// e(A, B) = sum_{v in A} sum_{w in B} beta_vw; A and B may overlap.
double cut_weight(const WeightedGraph& g, std::span<const std::size_t> a,
                  std::span<const std::size_t> b);

struct AbCutResult {
  std::optional<std::vector<std::size_t>> witness;
  bool exact = true;  // exhaustive search (n <= 24); otherwise heuristic
};

// Looks for X with a*n <= |X| <= (1-a)*n and e(X, X^c) <= b*n^2. Exhaustive
// for n <= 24; spectral bisection plus local moves above (a none-found answer
// is then only heuristic).
AbCutResult find_ab_cut(const WeightedGraph& g, double a, double b);

// The n-equal-block step kernel with values beta (zero diagonal retained).
StepKernel empirical_graphon(const WeightedGraph& g);

// Text format: first line "n", then "i j beta_ij" per line (0-based, upper
// triangle only; omitted pairs are weight 0).
WeightedGraph load_graph_text(const std::string& path);
void save_graph_text(const WeightedGraph& g, const std::string& path);

// Generator config JSON:
//   {"kind": "complete"|"blowup"|"sample_dense", "n": .., "kernel": <StepKernel>, "seed": ..}
struct GeneratorSpec {
  enum class Kind { complete, blowup, sample_dense };
  Kind kind = Kind::complete;
  std::size_t n = 0;
  std::optional<StepKernel> kernel;
  std::uint64_t seed = 0;
};

GeneratorSpec generator_from_json(const std::string& text);
WeightedGraph generate(const GeneratorSpec& spec);

}  // namespace perclim
