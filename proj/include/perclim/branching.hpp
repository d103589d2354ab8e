#pragma once

#include <cstdint>
#include <vector>

#include "perclim/rooted_tree.hpp"
#include "perclim/step_kernel.hpp"

namespace perclim {

// Multi-type Poisson branching process driven by a step kernel: a particle
// of block i begets Poisson(mu_j * V_ij) children of block j, independently.

struct BranchingOutcome {
  std::int64_t total = 1;  // particles across all generations (clamped at cap)
  bool escaped = false;    // hit the cap; survival proxy
};

// Root block drawn with probability mu_i (the first engine draw), then
// generation-by-generation expansion; halts with escaped = true once the
// particle count reaches cap.
BranchingOutcome simulate(const StepKernel& kernel, std::uint64_t seed, std::int64_t cap);

// Same process started from a fixed root block.
BranchingOutcome simulate_from(const StepKernel& kernel, std::size_t root_block,
                               std::uint64_t seed, std::int64_t cap);

struct SurvivalResult {
  double rho = 0.0;        // integral of rho_fn against the block measures
  BlockFunction rho_fn;    // per-block survival probabilities
  int iterations = 0;
};

// Largest solution of rho_i = 1 - exp(-sum_j mu_j V_ij rho_j), found by
// iterating down from the all-ones function (the map is monotone and the
// iteration converges to the largest fixed point). Stops when the sup-norm
// change drops below tol; throws ConvergenceError past max_iter.
SurvivalResult survival_probability(const StepKernel& kernel, double tol = 1e-12,
                                    int max_iter = 1000000);

// P(the branching tree is isomorphic to T as a rooted tree):
// (1/aut(T)) * sum over block assignments of
//   prod_i mu_{b_i} e^{-lambda_{b_i}} * prod_{edges} V[b_i][b_j].
// Exact sum over m^k assignments; throws when m^k > 1e8.
double tree_probability(const StepKernel& kernel, const RootedTree& tree);

// P(total progeny = k): sum of tree_probability over the k-vertex classes.
double point_mass(const StepKernel& kernel, int k);

struct TailEstimate {
  double estimate = 0.0;
  double stderr_of_estimate = 0.0;
};

// Monte Carlo estimate of P(total >= k) over reps runs (replica r uses seed
// derive_seed(seed, r)); binomial standard error.
TailEstimate tail_probability_mc(const StepKernel& kernel, std::int64_t k, int reps,
                                 std::uint64_t seed);

// "k,value,stderr" tables. Point masses are exact (stderr 0); tail rows are
// Monte Carlo estimates with binomial standard errors.
std::string point_mass_table_csv(const StepKernel& kernel, int max_k);
std::string tail_table_csv(const StepKernel& kernel, const std::vector<std::int64_t>& ks,
                           int reps, std::uint64_t seed);

struct LowerBoundReport {
  double rho = 0.0;
  double op_norm = 0.0;
  double sup_norm = 0.0;
  double bound = 0.0;    // (op_norm - 1) / sup_norm
  double margin = 0.0;   // rho - bound
  bool pass = false;     // margin >= -1e-9
};

// Checks rho(W) >= (|T_W| - 1)/sup|W| for irreducible supercritical kernels;
// throws for reducible or subcritical input.
LowerBoundReport check_lower_bound(const StepKernel& kernel);

}  // namespace perclim
