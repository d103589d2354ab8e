#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace perclim {

// A function of the type coordinate, constant on each block of a StepKernel.
struct BlockFunction {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

// Piecewise-constant symmetric kernel on [0,1]^2: m blocks with positive
// measures summing to 1, and an m x m symmetric value matrix. Values may be
// signed (differences of kernels); operations that require nonnegativity
// check the flag. Immutable after construction.
class StepKernel {
 public:
  // values is row-major m x m and must be exactly symmetric.
  StepKernel(std::vector<double> block_measures, std::vector<double> values);

  static StepKernel constant(double c);
  static StepKernel from_rows(std::vector<double> block_measures,
                              const std::vector<std::vector<double>>& rows);

  std::size_t block_count() const { return m_; }
  double measure(std::size_t i) const { return measures_[i]; }
  const std::vector<double>& measures() const { return measures_; }
  double value(std::size_t i, std::size_t j) const { return values_[i * m_ + j]; }
  const std::vector<double>& values() const { return values_; }

  bool nonnegative() const { return nonnegative_; }
  double sup_norm() const { return sup_norm_; }

  // Block containing x under the half-open convention [a,b); the last block
  // is closed. x must lie in [0,1].
  std::size_t block_at(double x) const;
  // Cumulative block boundaries, boundary(0) = 0 through boundary(m) = 1.
  double boundary(std::size_t i) const { return boundaries_[i]; }

 private:
  std::size_t m_;
  std::vector<double> measures_;
  std::vector<double> values_;
  std::vector<double> boundaries_;
  bool nonnegative_;
  double sup_norm_;
};

// Point evaluation W(x, y).
double eval(const StepKernel& kernel, double x, double y);

// Expected offspring count per block: lambda_i = sum_j mu_j * V_ij.
BlockFunction degree_function(const StepKernel& kernel);

// Integral operator application: (T_W f)_i = sum_j mu_j * V_ij * f_j.
BlockFunction apply_T(const StepKernel& kernel, const BlockFunction& f);

// L2 operator norm of T_W, via power iteration on the symmetrized matrix
// sqrt(mu_i mu_j) V_ij (relative tolerance 1e-10, at most 1e5 iterations).
// Throws ConvergenceError if the iteration does not settle.
double operator_norm(const StepKernel& kernel);

// True iff the block support graph (edge i-j, including i = j, when
// V_ij > 0) connects all blocks into one component.
bool is_irreducible(const StepKernel& kernel);

// Connected components of the block support graph (sorted block indices).
std::vector<std::vector<std::size_t>> support_components(const StepKernel& kernel);

struct CutNormResult {
  double value = 0.0;
  bool exact = true;  // false: alternating-maximization lower bound
};

// Cut norm sup_{A,B} |int_{A x B} K|. Exact by subset enumeration for
// m <= 20 blocks; above that, alternating maximization with 32 restarts
// (a lower bound, flagged exact = false).
CutNormResult cut_norm_detail(const StepKernel& kernel);
double cut_norm(const StepKernel& kernel);

struct CutDistanceResult {
  double value = 0.0;
  bool exact = true;        // exhaustive permutation search with exact cut norms
  bool upper_bound = true;  // false only when the inner cut norm was heuristic
  std::size_t refined_blocks = 0;
};

// Cut distance via common refinement to an equal-measure grid, minimizing the
// cut norm of the difference over block permutations. Exhaustive for at most
// 8 refined blocks, simulated annealing above. Throws std::invalid_argument
// when the block structures admit no common equal grid of at most 64 blocks
// (boundary tolerance 1e-9).
CutDistanceResult cut_distance(const StepKernel& w1, const StepKernel& w2);

// Kernel with all values multiplied by c >= 0.
StepKernel scale(const StepKernel& kernel, double c);

// Pointwise difference of two kernels on a common refinement (signed result).
StepKernel difference(const StepKernel& w1, const StepKernel& w2);

// Both kernels refined to the same equal-measure grid of L blocks (smallest
// L <= max_blocks compatible with both boundary sets within 1e-9).
std::pair<StepKernel, StepKernel> refine_to_common_grid(const StepKernel& w1,
                                                        const StepKernel& w2,
                                                        std::size_t max_blocks = 64);

// Average the kernel onto L equal-measure blocks (exact integral averaging).
StepKernel coarsen_equal(const StepKernel& kernel, std::size_t target_blocks);

// JSON schema: {"block_measures": [..], "values": [[..], ..]}.
// Rejects asymmetry beyond 1e-12 instead of symmetrizing silently.
StepKernel kernel_from_json(const std::string& text);
StepKernel load_kernel_file(const std::string& path);
std::string kernel_to_json(const StepKernel& kernel);

}  // namespace perclim
