#include "perclim/branching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "perclim/errors.hpp"
#include "perclim/format.hpp"
#include "perclim/rng.hpp"

namespace perclim {

namespace {

// Generation counts evolve as a multitype chain; children of the c_i
// particles of block i in block j are drawn in one Poisson(c_i * mu_j V_ij)
// step (Poisson additivity), which leaves the total-progeny law unchanged.
BranchingOutcome run_generations(const StepKernel& kernel, std::size_t root_block,
                                 rng::SplitMix64& gen, std::int64_t cap) {
  const std::size_t m = kernel.block_count();
  std::vector<double> mean(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      mean[i * m + j] = kernel.measure(j) * kernel.value(i, j);

  std::vector<std::int64_t> current(m, 0), next(m, 0);
  current[root_block] = 1;
  std::int64_t total = 1;
  if (total >= cap) return {cap, true};
  std::int64_t alive = 1;
  while (alive > 0) {
    std::fill(next.begin(), next.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
      if (current[i] == 0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        const double lambda = static_cast<double>(current[i]) * mean[i * m + j];
        if (lambda <= 0.0) continue;
        const auto children = static_cast<std::int64_t>(rng::poisson(gen, lambda));
        next[j] += children;
        total += children;
        if (total >= cap) return {cap, true};
      }
    }
    current.swap(next);
    alive = 0;
    for (std::int64_t c : current) alive += c;
  }
  return {total, false};
}

}  // namespace

BranchingOutcome simulate(const StepKernel& kernel, std::uint64_t seed, std::int64_t cap) {
  if (!kernel.nonnegative()) throw std::domain_error("simulate: kernel must be nonnegative");
  if (cap < 1) throw std::invalid_argument("simulate: cap must be >= 1");
  rng::SplitMix64 gen(seed);
  const std::size_t root = kernel.block_at(gen.next_double());
  return run_generations(kernel, root, gen, cap);
}

BranchingOutcome simulate_from(const StepKernel& kernel, std::size_t root_block,
                               std::uint64_t seed, std::int64_t cap) {
  if (!kernel.nonnegative()) throw std::domain_error("simulate_from: kernel must be nonnegative");
  if (cap < 1) throw std::invalid_argument("simulate_from: cap must be >= 1");
  if (root_block >= kernel.block_count()) {
    throw std::invalid_argument("simulate_from: block index out of range");
  }
  rng::SplitMix64 gen(seed);
  return run_generations(kernel, root_block, gen, cap);
}

SurvivalResult survival_probability(const StepKernel& kernel, double tol, int max_iter) {
  if (!kernel.nonnegative()) {
    throw std::domain_error("survival_probability: kernel must be nonnegative");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("survival_probability: tol must be > 0");
  const std::size_t m = kernel.block_count();
  // at or below criticality the largest fixed point is identically zero;
  // the iteration would approach it only sublinearly at |T_W| = 1
  if (operator_norm(kernel) <= 1.0) {
    return {0.0, BlockFunction{std::vector<double>(m, 0.0)}, 0};
  }
  std::vector<double> rho(m, 1.0), next(m, 0.0);
  int it = 0;
  for (; it < max_iter; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += kernel.measure(j) * kernel.value(i, j) * rho[j];
      next[i] = -std::expm1(-acc);
      change = std::max(change, std::abs(next[i] - rho[i]));
    }
    rho.swap(next);
    if (change < tol) break;
  }
  double integral = 0.0;
  for (std::size_t i = 0; i < m; ++i) integral += kernel.measure(i) * rho[i];
  if (it >= max_iter) {
    throw ConvergenceError("survival_probability: fixed point not reached in " +
                               std::to_string(max_iter) + " iterations",
                           integral);
  }
  return {integral, BlockFunction{std::move(rho)}, it + 1};
}

double tree_probability(const StepKernel& kernel, const RootedTree& tree) {
  if (!kernel.nonnegative()) throw std::domain_error("tree_probability: kernel must be nonnegative");
  const std::size_t m = kernel.block_count();
  const std::size_t k = tree.size();
  double assignments = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    assignments *= static_cast<double>(m);
    if (assignments > 1e8) {
      throw std::invalid_argument(
          "tree_probability: m^k > 1e8; use a Monte Carlo estimate instead");
    }
  }
  const BlockFunction lambda = degree_function(kernel);
  std::vector<double> weight(m);  // mu_b * exp(-lambda_b)
  for (std::size_t b = 0; b < m; ++b) weight[b] = kernel.measure(b) * std::exp(-lambda[b]);

  // parent[i] < i, so vertices are assigned in index order with each new
  // vertex touching only its parent's block
  std::vector<std::size_t> blocks(k, 0);
  double sum = 0.0;
  auto recurse = [&](auto&& self, std::size_t v, double partial) -> void {
    if (partial == 0.0) return;
    if (v == k) {
      sum += partial;
      return;
    }
    for (std::size_t b = 0; b < m; ++b) {
      blocks[v] = b;
      double factor = weight[b];
      if (v > 0) factor *= kernel.value(blocks[static_cast<std::size_t>(tree.parent[v])], b);
      self(self, v + 1, partial * factor);
    }
  };
  recurse(recurse, 0, 1.0);
  return sum / static_cast<double>(tree.aut);
}

double point_mass(const StepKernel& kernel, int k) {
  double sum = 0.0;
  for (const RootedTree& t : enumerate_rooted_trees(k)) sum += tree_probability(kernel, t);
  return sum;
}

TailEstimate tail_probability_mc(const StepKernel& kernel, std::int64_t k, int reps,
                                 std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("tail_probability_mc: reps must be >= 1");
  if (k < 1) throw std::invalid_argument("tail_probability_mc: k must be >= 1");
  std::int64_t hits = 0;
  for (int r = 0; r < reps; ++r) {
    // cap = k: the run stops as soon as the tail event is decided
    BranchingOutcome out = simulate(kernel, rng::derive_seed(seed, static_cast<std::uint64_t>(r)), k);
    if (out.total >= k) ++hits;
  }
  const double est = static_cast<double>(hits) / static_cast<double>(reps);
  return {est, std::sqrt(est * (1.0 - est) / static_cast<double>(reps))};
}

std::string point_mass_table_csv(const StepKernel& kernel, int max_k) {
  std::ostringstream os;
  os << "k,value,stderr\n";
  for (int k = 1; k <= max_k; ++k) {
    os << k << "," << format_double(point_mass(kernel, k)) << ",0\n";
  }
  return os.str();
}

std::string tail_table_csv(const StepKernel& kernel, const std::vector<std::int64_t>& ks,
                           int reps, std::uint64_t seed) {
  std::ostringstream os;
  os << "k,value,stderr\n";
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const TailEstimate est = tail_probability_mc(kernel, ks[i], reps, rng::derive_seed(seed, i));
    os << ks[i] << "," << format_double(est.estimate) << ","
       << format_double(est.stderr_of_estimate) << "\n";
  }
  return os.str();
}

LowerBoundReport check_lower_bound(const StepKernel& kernel) {
  if (!is_irreducible(kernel)) {
    throw std::invalid_argument("check_lower_bound: kernel must be irreducible");
  }
  LowerBoundReport report;
  report.op_norm = operator_norm(kernel);
  if (report.op_norm <= 1.0) {
    throw std::invalid_argument("check_lower_bound: kernel must be supercritical (|T_W| > 1)");
  }
  report.sup_norm = kernel.sup_norm();
  report.rho = survival_probability(kernel).rho;
  report.bound = (report.op_norm - 1.0) / report.sup_norm;
  report.margin = report.rho - report.bound;
  report.pass = report.margin >= -1e-9;
  return report;
}

}  // namespace perclim
