#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "perclim/step_kernel.hpp"
#include "perclim/weighted_graph.hpp"

namespace perclim {

enum class SampleMode { bernoulli, poisson };

// One realization of the random subgraph G(p), together with everything
// needed to reproduce it.
struct PercolationSample {
  std::size_t n = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // i < j
  double p = 0.0;
  SampleMode mode = SampleMode::bernoulli;
  std::uint64_t seed = 0;
};

struct ComponentStats {
  std::size_t n = 0;
  std::vector<std::int64_t> sizes;                   // descending
  std::map<std::int64_t, std::int64_t> nk;           // k -> vertices in size-k components
  std::map<std::int64_t, std::int64_t> nontree_nk;   // same, components with a cycle only

  std::int64_t c1() const { return sizes.empty() ? 0 : sizes.front(); }
  // 0 when the sample is connected
  std::int64_t c2() const { return sizes.size() < 2 ? 0 : sizes[1]; }
};

// Keep pair i<j with probability min{p beta_ij, 1} (bernoulli) or
// 1 - exp(-p beta_ij) (poisson). Edge decisions consume the counter-based
// stream in row-major upper-triangle order: pair (i,j) uses stream index
// t = i(n-1) - i(i-1)/2 + (j-i-1), so identical seeds give identical samples
// regardless of graph backing or SIMD variant.
PercolationSample sample(const WeightedGraph& g, double p, SampleMode mode, std::uint64_t seed);

// G(n, cW): draw n uniform types, then join each pair with probability
// c W(X_i, X_j)/n. Implemented by per-block-pair geometric skipping, so the
// cost is O(n + edges); distributionally identical to
// sample(sample_dense(W, n, .), c/n, bernoulli), not bit-identical.
// Requires c * sup|W| <= n.
PercolationSample sample_gnw(const StepKernel& kernel, std::size_t n, double c,
                             std::uint64_t seed);

// Exact connected components via union-find (path compression + union by
// size).
ComponentStats components(const PercolationSample& s);

// Number of vertices in components of size at least k.
std::int64_t n_geq_k(const ComponentStats& stats, std::int64_t k);

// Sprinkling coupling: returns (base, combined) where base ~ sample(g,(1-delta)p),
// combined ~ sample(g, p) and base's edges are a subset of combined's. Each
// nonedge of base is added with the exact conditional probability
// s = delta p beta / (1 - (1-delta) p beta). Requires p * beta_max <= 1.
std::pair<PercolationSample, PercolationSample> two_phase_sample(const WeightedGraph& g,
                                                                 double p, double delta,
                                                                 std::uint64_t seed);

inline constexpr int kReplicateMaxK = 20;

struct ReplicateRow {
  int rep = 0;
  std::uint64_t seed = 0;
  std::int64_t c1 = 0;
  std::int64_t c2 = 0;
  std::array<std::int64_t, kReplicateMaxK> nk{};  // N_1 .. N_20
};

struct SummaryStat {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ReplicateTable {
  std::size_t n = 0;
  int reps = 0;
  std::uint64_t base_seed = 0;
  std::vector<ReplicateRow> rows;
  SummaryStat c1_over_n;
  SummaryStat c2;
  std::array<SummaryStat, kReplicateMaxK> nk;

  // header "rep,seed,C1,C2,N1,...,N20"
  std::string to_csv() const;
  std::string summary_json() const;
};

// Replica r runs sample + components with seed derive_seed(base_seed, r).
ReplicateTable replicate(const WeightedGraph& g, double p, SampleMode mode, int reps,
                         std::uint64_t base_seed);
// Same over the G(n, cW) model (types redrawn each replica).
ReplicateTable replicate_gnw(const StepKernel& kernel, std::size_t n, double c, int reps,
                             std::uint64_t base_seed);

}  // namespace perclim
