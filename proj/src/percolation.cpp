#include "perclim/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "perclim/format.hpp"
#include "perclim/rng.hpp"
#include "perclim/simd.hpp"
#include "perclim/union_find.hpp"

namespace perclim {

namespace {

constexpr std::uint64_t kAcceptAll = 1ULL << 63;

// Row scanner over the upper-triangle pair stream. QFun maps an edge weight
// to the acceptance probability; thresholds are precomputed per block where
// the backing allows, and accept-all runs short-circuit the hashing (the
// outcome is the same for every stream value).
template <class QFun>
class RowSampler {
 public:
  RowSampler(const WeightedGraph& g, std::uint64_t seed, QFun qfun)
      : g_(g), n_(g.size()), seed_(seed), qfun_(qfun) {
    if (g_.backing() == WeightedGraph::Backing::block) {
      const std::size_t m = g_.block_count();
      block_thresholds_.resize(m);
      if (g_.blocks_contiguous()) {
        block_start_.assign(m + 1, n_);
        block_start_[0] = 0;
        for (std::size_t v = n_; v-- > 0;) block_start_[g_.block_of()[v]] = v;
        // empty blocks inherit the next block's start
        for (std::size_t b = m; b-- > 0;)
          if (block_start_[b] > block_start_[b + 1]) block_start_[b] = block_start_[b + 1];
      }
    }
    thr_scratch_.resize(n_);
    hit_scratch_.resize(n_);
  }

  // Offsets o of accepted pairs (i, i+1+o); t_row is the stream index of the
  // first pair in the row.
  void row(std::size_t i, std::uint64_t t_row, std::vector<std::uint32_t>& out) {
    out.clear();
    const std::size_t len = n_ - 1 - i;
    if (len == 0) return;
    const auto& kt = simd::active();
    if (g_.backing() == WeightedGraph::Backing::dense) {
      const double* row = g_.dense_values().data() + i * n_;
      for (std::size_t o = 0; o < len; ++o) {
        thr_scratch_[o] = rng::bernoulli_threshold(qfun_(row[i + 1 + o]));
      }
      const std::size_t hits =
          kt.hits_varying(seed_, t_row, len, thr_scratch_.data(), hit_scratch_.data());
      out.assign(hit_scratch_.begin(), hit_scratch_.begin() + static_cast<std::ptrdiff_t>(hits));
      return;
    }
    const std::size_t m = g_.block_count();
    const std::uint32_t bi = g_.block_of()[i];
    for (std::size_t b = 0; b < m; ++b) {
      block_thresholds_[b] = rng::bernoulli_threshold(qfun_(g_.block_values()[bi * m + b]));
    }
    if (!block_start_.empty()) {
      // contiguous blocks: constant-threshold runs
      for (std::size_t b = 0; b < m; ++b) {
        const std::size_t js = std::max(block_start_[b], i + 1);
        const std::size_t je = block_start_[b + 1];
        if (js >= je) continue;
        const std::uint64_t thr = block_thresholds_[b];
        const std::size_t o0 = js - (i + 1);
        const std::size_t run = je - js;
        if (thr == 0) continue;
        if (thr == kAcceptAll) {
          for (std::size_t o = 0; o < run; ++o)
            out.push_back(static_cast<std::uint32_t>(o0 + o));
          continue;
        }
        const std::size_t hits =
            kt.hits_const(seed_, t_row + o0, run, thr, hit_scratch_.data());
        for (std::size_t h = 0; h < hits; ++h)
          out.push_back(static_cast<std::uint32_t>(o0 + hit_scratch_[h]));
      }
      return;
    }
    for (std::size_t o = 0; o < len; ++o) {
      thr_scratch_[o] = block_thresholds_[g_.block_of()[i + 1 + o]];
    }
    const std::size_t hits =
        kt.hits_varying(seed_, t_row, len, thr_scratch_.data(), hit_scratch_.data());
    out.assign(hit_scratch_.begin(), hit_scratch_.begin() + static_cast<std::ptrdiff_t>(hits));
  }

 private:
  const WeightedGraph& g_;
  std::size_t n_;
  std::uint64_t seed_;
  QFun qfun_;
  std::vector<std::uint64_t> block_thresholds_;
  std::vector<std::size_t> block_start_;
  std::vector<std::uint64_t> thr_scratch_;
  std::vector<std::uint32_t> hit_scratch_;
};

template <class QFun>
std::vector<std::pair<std::uint32_t, std::uint32_t>> scan_all_rows(const WeightedGraph& g,
                                                                   std::uint64_t seed,
                                                                   QFun qfun) {
  const std::size_t n = g.size();
  RowSampler sampler(g, seed, qfun);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<std::uint32_t> hits;
  std::uint64_t t_row = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    sampler.row(i, t_row, hits);
    for (std::uint32_t o : hits) {
      edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1 + o));
    }
    t_row += n - 1 - i;
  }
  return edges;
}

}  // namespace

PercolationSample sample(const WeightedGraph& g, double p, SampleMode mode,
                         std::uint64_t seed) {
  if (!(p >= 0.0)) throw std::invalid_argument("sample: p must be >= 0");
  PercolationSample s;
  s.n = g.size();
  s.p = p;
  s.mode = mode;
  s.seed = seed;
  if (mode == SampleMode::bernoulli) {
    s.edges = scan_all_rows(g, seed, [p](double beta) { return p * beta; });
  } else {
    s.edges = scan_all_rows(g, seed, [p](double beta) { return -std::expm1(-p * beta); });
  }
  return s;
}

namespace {

// Unrank pair index within one block: pos -> (r, s), r < s < count, ordered
// row-major.
std::pair<std::size_t, std::size_t> unrank_triangular(std::uint64_t pos, std::uint64_t count) {
  const double c = static_cast<double>(count);
  double guess = std::floor((2.0 * c - 1.0 - std::sqrt((2.0 * c - 1.0) * (2.0 * c - 1.0) -
                                                       8.0 * static_cast<double>(pos))) /
                            2.0);
  auto base = [count](std::uint64_t r) { return r * count - r * (r + 1) / 2; };
  auto r = static_cast<std::uint64_t>(std::max(guess, 0.0));
  while (r + 1 < count && base(r + 1) <= pos) ++r;
  while (r > 0 && base(r) > pos) --r;
  const std::uint64_t s = pos - base(r) + r + 1;
  return {static_cast<std::size_t>(r), static_cast<std::size_t>(s)};
}

}  // namespace

PercolationSample sample_gnw(const StepKernel& kernel, std::size_t n, double c,
                             std::uint64_t seed) {
  if (!kernel.nonnegative()) throw std::domain_error("sample_gnw: kernel must be nonnegative");
  if (!(c >= 0.0)) throw std::invalid_argument("sample_gnw: c must be >= 0");
  if (c * kernel.sup_norm() > static_cast<double>(n)) {
    throw std::invalid_argument("sample_gnw: c * sup|W| exceeds n (edge probability above 1)");
  }
  PercolationSample s;
  s.n = n;
  s.p = c / static_cast<double>(n);
  s.mode = SampleMode::bernoulli;
  s.seed = seed;

  rng::SplitMix64 gen(seed);
  const std::size_t m = kernel.block_count();
  std::vector<std::vector<std::uint32_t>> members(m);
  for (std::size_t v = 0; v < n; ++v) {
    members[kernel.block_at(gen.next_double())].push_back(static_cast<std::uint32_t>(v));
  }

  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      const double q = c * kernel.value(a, b) / static_cast<double>(n);
      if (q <= 0.0) continue;
      const std::uint64_t na = members[a].size();
      const std::uint64_t nb = members[b].size();
      const std::uint64_t pairs = (a == b) ? na * (na - 1) / 2 : na * nb;
      if (pairs == 0) continue;
      auto emit = [&](std::uint64_t pos) {
        std::uint32_t u, v;
        if (a == b) {
          auto [r, t] = unrank_triangular(pos, na);
          u = members[a][r];
          v = members[a][t];
        } else {
          u = members[a][pos / nb];
          v = members[b][pos % nb];
        }
        if (u > v) std::swap(u, v);
        s.edges.emplace_back(u, v);
      };
      if (q >= 1.0) {
        for (std::uint64_t pos = 0; pos < pairs; ++pos) emit(pos);
        continue;
      }
      const double log1mq = std::log1p(-q);
      std::uint64_t pos = 0;  // next candidate pair index
      while (true) {
        const double u = gen.next_double();
        const double jump = std::floor(std::log1p(-u) / log1mq);  // failures before a success
        if (jump >= static_cast<double>(pairs)) break;            // also guards the cast
        pos += static_cast<std::uint64_t>(jump);
        if (pos >= pairs) break;
        emit(pos);
        ++pos;
      }
    }
  }
  std::sort(s.edges.begin(), s.edges.end());
  return s;
}

ComponentStats components(const PercolationSample& s) {
  UnionFind uf(s.n);
  for (const auto& [u, v] : s.edges) {
    if (u == v || u >= s.n || v >= s.n) throw std::invalid_argument("components: bad edge");
    uf.unite(u, v);
  }
  std::vector<std::int64_t> edge_count(s.n, 0);
  for (const auto& [u, v] : s.edges) ++edge_count[uf.find(u)];

  ComponentStats stats;
  stats.n = s.n;
  for (std::size_t v = 0; v < s.n; ++v) {
    if (uf.find(v) != v) continue;
    const auto size = static_cast<std::int64_t>(uf.component_size(v));
    stats.sizes.push_back(size);
    stats.nk[size] += size;
    if (edge_count[v] >= size) stats.nontree_nk[size] += size;  // connected + extra edge
  }
  std::sort(stats.sizes.begin(), stats.sizes.end(), std::greater<>());
  return stats;
}

std::int64_t n_geq_k(const ComponentStats& stats, std::int64_t k) {
  if (k < 1) throw std::invalid_argument("n_geq_k: k must be >= 1");
  std::int64_t acc = 0;
  for (auto it = stats.nk.lower_bound(k); it != stats.nk.end(); ++it) acc += it->second;
  return acc;
}

std::pair<PercolationSample, PercolationSample> two_phase_sample(const WeightedGraph& g,
                                                                 double p, double delta,
                                                                 std::uint64_t seed) {
  if (!(p >= 0.0)) throw std::invalid_argument("two_phase_sample: p must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("two_phase_sample: delta must be in (0,1)");
  }
  if (p * g.beta_max() > 1.0) {
    throw std::invalid_argument(
        "two_phase_sample: p * beta_max > 1 would clamp and break the coupling");
  }
  const std::size_t n = g.size();
  const double p_base = (1.0 - delta) * p;
  const std::uint64_t seed_base = rng::derive_seed(seed, 0);
  const std::uint64_t seed_sprinkle = rng::derive_seed(seed, 1);

  PercolationSample base;
  base.n = n;
  base.p = p_base;
  base.mode = SampleMode::bernoulli;
  base.seed = seed;
  PercolationSample combined = base;
  combined.p = p;

  auto q_base = [p_base](double beta) { return p_base * beta; };
  auto q_sprinkle = [p, p_base, delta](double beta) {
    const double denom = 1.0 - p_base * beta;
    return denom > 0.0 ? delta * p * beta / denom : 1.0;
  };
  RowSampler base_sampler(g, seed_base, q_base);
  RowSampler sprinkle_sampler(g, seed_sprinkle, q_sprinkle);

  std::vector<std::uint32_t> base_hits, sprinkle_hits, merged;
  std::uint64_t t_row = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    base_sampler.row(i, t_row, base_hits);
    sprinkle_sampler.row(i, t_row, sprinkle_hits);
    merged.resize(base_hits.size() + sprinkle_hits.size());
    merged.erase(std::set_union(base_hits.begin(), base_hits.end(), sprinkle_hits.begin(),
                                sprinkle_hits.end(), merged.begin()),
                 merged.end());
    for (std::uint32_t o : base_hits) {
      base.edges.emplace_back(static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(i + 1 + o));
    }
    for (std::uint32_t o : merged) {
      combined.edges.emplace_back(static_cast<std::uint32_t>(i),
                                  static_cast<std::uint32_t>(i + 1 + o));
    }
    t_row += n - 1 - i;
  }
  return {std::move(base), std::move(combined)};
}

namespace {

SummaryStat summarize(const std::vector<double>& xs) {
  SummaryStat st;
  if (xs.empty()) return st;
  st.min = st.max = xs[0];
  double sum = 0.0;
  for (double x : xs) {
    sum += x;
    st.min = std::min(st.min, x);
    st.max = std::max(st.max, x);
  }
  st.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - st.mean) * (x - st.mean);
    st.stderr_of_mean =
        std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return st;
}

template <class RunOne>
ReplicateTable replicate_impl(std::size_t n, int reps, std::uint64_t base_seed, RunOne run_one) {
  if (reps < 1) throw std::invalid_argument("replicate: reps must be >= 1");
  ReplicateTable table;
  table.n = n;
  table.reps = reps;
  table.base_seed = base_seed;
  std::vector<double> c1n, c2;
  std::array<std::vector<double>, kReplicateMaxK> nks;
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t seed_r = rng::derive_seed(base_seed, static_cast<std::uint64_t>(r));
    ComponentStats stats = run_one(seed_r);
    ReplicateRow row;
    row.rep = r;
    row.seed = seed_r;
    row.c1 = stats.c1();
    row.c2 = stats.c2();
    for (int k = 1; k <= kReplicateMaxK; ++k) {
      auto it = stats.nk.find(k);
      row.nk[static_cast<std::size_t>(k - 1)] = it == stats.nk.end() ? 0 : it->second;
    }
    c1n.push_back(static_cast<double>(row.c1) / static_cast<double>(n));
    c2.push_back(static_cast<double>(row.c2));
    for (int k = 0; k < kReplicateMaxK; ++k) {
      nks[static_cast<std::size_t>(k)].push_back(
          static_cast<double>(row.nk[static_cast<std::size_t>(k)]));
    }
    table.rows.push_back(row);
  }
  table.c1_over_n = summarize(c1n);
  table.c2 = summarize(c2);
  for (int k = 0; k < kReplicateMaxK; ++k) {
    table.nk[static_cast<std::size_t>(k)] = summarize(nks[static_cast<std::size_t>(k)]);
  }
  return table;
}

std::string stat_fields(const SummaryStat& st) {
  return "\"mean\":" + format_double(st.mean) + ",\"stderr\":" + format_double(st.stderr_of_mean) +
         ",\"min\":" + format_double(st.min) + ",\"max\":" + format_double(st.max);
}

}  // namespace

std::string ReplicateTable::to_csv() const {
  std::ostringstream os;
  os << "rep,seed,C1,C2";
  for (int k = 1; k <= kReplicateMaxK; ++k) os << ",N" << k;
  os << "\n";
  for (const ReplicateRow& row : rows) {
    os << row.rep << "," << format_u64(row.seed) << "," << row.c1 << "," << row.c2;
    for (std::int64_t v : row.nk) os << "," << v;
    os << "\n";
  }
  return os.str();
}

std::string ReplicateTable::summary_json() const {
  std::ostringstream os;
  os << "{\"n\":" << n << ",\"reps\":" << reps << ",\"base_seed\":" << format_u64(base_seed)
     << ",\"c1_over_n\":{" << stat_fields(c1_over_n) << "},\"c2\":{" << stat_fields(c2)
     << "},\"nk\":[";
  for (int k = 0; k < kReplicateMaxK; ++k) {
    if (k) os << ",";
    os << "{\"k\":" << (k + 1) << "," << stat_fields(nk[static_cast<std::size_t>(k)]) << "}";
  }
  os << "]}";
  return os.str();
}

ReplicateTable replicate(const WeightedGraph& g, double p, SampleMode mode, int reps,
                         std::uint64_t base_seed) {
  return replicate_impl(g.size(), reps, base_seed, [&](std::uint64_t seed_r) {
    return components(sample(g, p, mode, seed_r));
  });
}

ReplicateTable replicate_gnw(const StepKernel& kernel, std::size_t n, double c, int reps,
                             std::uint64_t base_seed) {
  return replicate_impl(n, reps, base_seed, [&](std::uint64_t seed_r) {
    return components(sample_gnw(kernel, n, c, seed_r));
  });
}

}  // namespace perclim
