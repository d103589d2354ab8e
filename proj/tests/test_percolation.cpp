#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "oracles.hpp"
#include "perclim/percolation.hpp"
#include "perclim/rng.hpp"
#include "perclim/simd.hpp"

using namespace perclim;

namespace {

StepKernel two_blocks(double m1, std::vector<std::vector<double>> rows) {
  return StepKernel::from_rows({m1, 1.0 - m1}, rows);
}

// component sizes by BFS, independent of the union-find path
std::vector<std::int64_t> sizes_bfs(const PercolationSample& s) {
  std::vector<std::vector<std::uint32_t>> adj(s.n);
  for (auto [u, v] : s.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<char> seen(s.n, 0);
  std::vector<std::int64_t> sizes;
  for (std::size_t start = 0; start < s.n; ++start) {
    if (seen[start]) continue;
    std::int64_t size = 0;
    std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(start)};
    seen[start] = 1;
    while (!stack.empty()) {
      const std::uint32_t v = stack.back();
      stack.pop_back();
      ++size;
      for (std::uint32_t w : adj[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    sizes.push_back(size);
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

}  // namespace

TEST_CASE("sample edge cases") {
  const WeightedGraph g = complete_graph(30);
  CHECK(sample(g, 0.0, SampleMode::bernoulli, 7).edges.empty());

  // clamped probability: every edge present
  const PercolationSample full = sample(g, 2.0, SampleMode::bernoulli, 7);
  CHECK(full.edges.size() == 30 * 29 / 2);

  CHECK_THROWS_AS(sample(g, -0.5, SampleMode::bernoulli, 0), std::invalid_argument);
}

TEST_CASE("samples have no loops or duplicates and are seed-deterministic") {
  const StepKernel w = two_blocks(0.4, {{2.0, 0.5}, {0.5, 1.0}});
  const WeightedGraph g = blowup(w, 80);
  const PercolationSample s = sample(g, 0.3, SampleMode::bernoulli, 99);
  std::set<std::pair<std::uint32_t, std::uint32_t>> dedup(s.edges.begin(), s.edges.end());
  CHECK(dedup.size() == s.edges.size());
  for (auto [u, v] : s.edges) {
    CHECK(u < v);
    CHECK(v < 80);
  }
  const PercolationSample again = sample(g, 0.3, SampleMode::bernoulli, 99);
  CHECK(again.edges == s.edges);
  const PercolationSample other = sample(g, 0.3, SampleMode::bernoulli, 100);
  CHECK(other.edges != s.edges);
}

TEST_CASE("block and dense backings produce bit-identical samples") {
  const StepKernel w = two_blocks(0.35, {{1.8, 0.2}, {0.2, 0.9}});
  const WeightedGraph block = blowup(w, 70);
  const WeightedGraph dense = block.densified();
  for (std::uint64_t seed : {1ULL, 2ULL, 77ULL}) {
    for (SampleMode mode : {SampleMode::bernoulli, SampleMode::poisson}) {
      CHECK(sample(block, 0.4, mode, seed).edges == sample(dense, 0.4, mode, seed).edges);
    }
  }
  // non-contiguous block labels (sampled types) against the dense copy
  const WeightedGraph sampled = sample_dense(w, 70, 5);
  const WeightedGraph sdense = sampled.densified();
  CHECK(sample(sampled, 0.4, SampleMode::bernoulli, 3).edges ==
        sample(sdense, 0.4, SampleMode::bernoulli, 3).edges);
}

TEST_CASE("samples are identical across SIMD variants") {
  const StepKernel w = two_blocks(0.5, {{1.5, 0.5}, {0.5, 1.0}});
  const WeightedGraph g = blowup(w, 64);
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> results;
  for (const std::string& name : simd::available()) {
    REQUIRE(simd::select(name));
    results.push_back(sample(g, 0.5, SampleMode::bernoulli, 11).edges);
  }
  simd::select("auto");
  for (std::size_t i = 1; i < results.size(); ++i) CHECK(results[i] == results[0]);
}

TEST_CASE("bernoulli edge counts match the binomial oracle") {
  const std::size_t n = 400;
  const double c = 2.0;
  const WeightedGraph g = complete_graph(n);
  const double q = c / static_cast<double>(n);
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  double total = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    total += static_cast<double>(
        sample(g, q, SampleMode::bernoulli, rng::derive_seed(4242, static_cast<std::uint64_t>(r)))
            .edges.size());
  }
  const double mean = total / reps;
  const double expected = pairs * q;  // = c(n-1)/2
  const double sigma_mean = std::sqrt(pairs * q * (1 - q) / reps);
  CHECK(std::abs(mean - expected) <= 3.0 * sigma_mean);
}

TEST_CASE("poisson mode uses 1 - exp(-p beta)") {
  const std::size_t n = 300;
  const WeightedGraph g = blowup(StepKernel::constant(2.0), n);
  const double p = 0.6;  // p*beta = 1.2, bernoulli would clamp to 1
  const double q = -std::expm1(-1.2);
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  double total = 0.0;
  const int reps = 60;
  for (int r = 0; r < reps; ++r) {
    total += static_cast<double>(
        sample(g, p, SampleMode::poisson, rng::derive_seed(17, static_cast<std::uint64_t>(r)))
            .edges.size());
  }
  const double mean = total / reps;
  const double sigma_mean = std::sqrt(pairs * q * (1 - q) / reps);
  CHECK(std::abs(mean - pairs * q) <= 3.0 * sigma_mean);
}

TEST_CASE("components census") {
  PercolationSample s;
  s.n = 5;
  const ComponentStats empty = components(s);
  CHECK(empty.sizes == std::vector<std::int64_t>{1, 1, 1, 1, 1});
  CHECK(empty.nk.at(1) == 5);
  CHECK(empty.c1() == 1);
  CHECK(empty.c2() == 1);

  PercolationSample path;
  path.n = 4;
  path.edges = {{0, 1}, {1, 2}, {2, 3}};
  const ComponentStats p = components(path);
  CHECK(p.c1() == 4);
  CHECK(p.c2() == 0);  // connected sample

  PercolationSample mixed;
  mixed.n = 6;
  mixed.edges = {{0, 1}, {1, 2}, {3, 4}};
  const ComponentStats m = components(mixed);
  CHECK(m.sizes == std::vector<std::int64_t>{3, 2, 1});
  CHECK(m.nk.at(3) == 3);
  CHECK(m.nk.at(2) == 2);
  CHECK(m.nk.at(1) == 1);

  SUBCASE("n_geq_k") {
    CHECK(n_geq_k(m, 1) == 6);
    CHECK(n_geq_k(m, 2) == 5);
    CHECK(n_geq_k(m, 3) == 3);
    CHECK(n_geq_k(m, 4) == 0);
    CHECK_THROWS_AS(n_geq_k(m, 0), std::invalid_argument);
  }

  SUBCASE("non-tree components are flagged") {
    PercolationSample cyc;
    cyc.n = 7;
    cyc.edges = {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}};  // triangle + path3 + isolated
    const ComponentStats st = components(cyc);
    CHECK(st.nontree_nk.at(3) == 3);
    CHECK(st.nontree_nk.size() == 1);
  }
}

TEST_CASE("component sizes agree with BFS on random samples") {
  const StepKernel w = two_blocks(0.5, {{2.5, 0.5}, {0.5, 1.5}});
  const WeightedGraph g = blowup(w, 120);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PercolationSample s = sample(g, 1.2 / 120.0, SampleMode::bernoulli, seed);
    const ComponentStats stats = components(s);
    CHECK(stats.sizes == sizes_bfs(s));
    std::int64_t total = 0;
    for (auto sz : stats.sizes) total += sz;
    CHECK(total == 120);
    std::int64_t nk_total = 0;
    for (const auto& [k, nk] : stats.nk) nk_total += nk;
    CHECK(nk_total == 120);
  }
}

TEST_CASE("sample_gnw") {
  CHECK(sample_gnw(StepKernel::constant(0.0), 50, 1.0, 3).edges.empty());
  CHECK_THROWS_AS(sample_gnw(StepKernel::constant(2.0), 10, 6.0, 1), std::invalid_argument);

  // no loops/duplicates, deterministic
  const StepKernel w = two_blocks(0.3, {{3.0, 1.0}, {1.0, 1.0}});
  const PercolationSample s = sample_gnw(w, 500, 2.0, 44);
  std::set<std::pair<std::uint32_t, std::uint32_t>> dedup(s.edges.begin(), s.edges.end());
  CHECK(dedup.size() == s.edges.size());
  for (auto [u, v] : s.edges) {
    CHECK(u < v);
    CHECK(v < 500);
  }
  CHECK(sample_gnw(w, 500, 2.0, 44).edges == s.edges);

  SUBCASE("edge count mean matches the per-block-pair rate") {
    // E(edges) = (c/n) * E(sum over pairs of W(X_i, X_j)) = c(n-1)/(2) * t(edge, W)
    const std::size_t n = 400;
    const double c = 1.5;
    double tw = 0.0;
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b) tw += w.measure(a) * w.measure(b) * w.value(a, b);
    const double expected = c * static_cast<double>(n - 1) / 2.0 * tw;
    const int reps = 150;
    double total = 0.0, totalsq = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double e = static_cast<double>(
          sample_gnw(w, n, c, rng::derive_seed(7, static_cast<std::uint64_t>(r))).edges.size());
      total += e;
      totalsq += e * e;
    }
    const double mean = total / reps;
    const double var = totalsq / reps - mean * mean;
    CHECK(std::abs(mean - expected) <= 3.0 * std::sqrt(var / reps));
  }

  SUBCASE("distributional match with the dense-path sampler") {
    // same mean largest component over seeds, tested at a supercritical c
    const std::size_t n = 300;
    const double c = 2.0;
    const int reps = 120;
    double mean_gnw = 0.0, mean_fixed = 0.0, var_gnw = 0.0, var_fixed = 0.0;
    std::vector<double> xs, ys;
    for (int r = 0; r < reps; ++r) {
      const std::uint64_t seed = rng::derive_seed(1000, static_cast<std::uint64_t>(r));
      xs.push_back(static_cast<double>(components(sample_gnw(w, n, c, seed)).c1()));
      const WeightedGraph g = sample_dense(w, n, rng::derive_seed(2000, static_cast<std::uint64_t>(r)));
      ys.push_back(static_cast<double>(
          components(sample(g, c / static_cast<double>(n), SampleMode::bernoulli, seed)).c1()));
    }
    for (double x : xs) mean_gnw += x;
    for (double y : ys) mean_fixed += y;
    mean_gnw /= reps;
    mean_fixed /= reps;
    for (double x : xs) var_gnw += (x - mean_gnw) * (x - mean_gnw);
    for (double y : ys) var_fixed += (y - mean_fixed) * (y - mean_fixed);
    const double se = std::sqrt((var_gnw + var_fixed) / (reps * (reps - 1.0)));
    CHECK(std::abs(mean_gnw - mean_fixed) <= 3.5 * se);
  }
}

TEST_CASE("two_phase_sample") {
  const StepKernel w = two_blocks(0.5, {{1.0, 0.4}, {0.4, 0.8}});
  const WeightedGraph g = blowup(w, 60);
  CHECK_THROWS_AS(two_phase_sample(g, 1.5, 0.3, 1), std::invalid_argument);
  CHECK_THROWS_AS(two_phase_sample(g, 0.5, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(two_phase_sample(g, 0.5, 1.0, 1), std::invalid_argument);

  SUBCASE("base is always contained in combined, with monotone tails") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto [base, combined] = two_phase_sample(g, 0.6, 0.3, seed);
      std::set<std::pair<std::uint32_t, std::uint32_t>> cset(combined.edges.begin(),
                                                             combined.edges.end());
      for (auto e : base.edges) CHECK(cset.count(e) == 1);
      const ComponentStats sb = components(base);
      const ComponentStats sc = components(combined);
      CHECK(sc.c1() >= sb.c1());
      for (std::int64_t k = 1; k <= 10; ++k) CHECK(n_geq_k(sc, k) >= n_geq_k(sb, k));
    }
  }

  SUBCASE("small delta rarely sprinkles") {
    const auto [base, combined] = two_phase_sample(g, 0.6, 1e-7, 12);
    CHECK(combined.edges.size() - base.edges.size() <= 1);
  }

  SUBCASE("combined marginal matches the one-shot sampler per pair") {
    // small graph, many seeds, exact Bernoulli oracle per pair
    const WeightedGraph small = blowup(w, 10);
    const double p = 0.9;  // p*beta in {0.9, 0.36, 0.72}
    const double delta = 0.4;
    const int reps = 10000;
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> freq;
    for (int r = 0; r < reps; ++r) {
      const auto [base, combined] =
          two_phase_sample(small, p, delta, rng::derive_seed(31337, static_cast<std::uint64_t>(r)));
      for (auto e : combined.edges) ++freq[e];
    }
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = i + 1; j < 10; ++j) {
        const double q = std::min(p * small.beta(i, j), 1.0);
        const double got =
            static_cast<double>(freq[{static_cast<std::uint32_t>(i),
                                      static_cast<std::uint32_t>(j)}]) /
            reps;
        const double sigma = std::sqrt(q * (1 - q) / reps);
        CHECK(std::abs(got - q) <= 3.5 * sigma);
      }
    }
  }
}

TEST_CASE("replicate") {
  const WeightedGraph g = complete_graph(200);
  const ReplicateTable t1 = replicate(g, 2.0 / 200.0, SampleMode::bernoulli, 5, 99);
  const ReplicateTable t2 = replicate(g, 2.0 / 200.0, SampleMode::bernoulli, 5, 99);
  CHECK(t1.to_csv() == t2.to_csv());
  CHECK(t1.summary_json() == t2.summary_json());
  CHECK(t1.rows.size() == 5);

  // single rep reproduces a direct run
  const ReplicateTable single = replicate(g, 2.0 / 200.0, SampleMode::bernoulli, 1, 42);
  const ComponentStats direct =
      components(sample(g, 2.0 / 200.0, SampleMode::bernoulli, rng::derive_seed(42, 0)));
  CHECK(single.rows[0].c1 == direct.c1());
  CHECK(single.rows[0].c2 == direct.c2());
  CHECK(single.c1_over_n.stderr_of_mean == 0.0);

  CHECK_THROWS_AS(replicate(g, 0.1, SampleMode::bernoulli, 0, 1), std::invalid_argument);

  SUBCASE("csv header shape") {
    const std::string csv = t1.to_csv();
    CHECK(csv.substr(0, 15) == "rep,seed,C1,C2,");
    CHECK(csv.find(",N20") != std::string::npos);
  }
}

TEST_CASE("exchangeability: relabeled graph with fresh seeds gives the same C1 histogram") {
  const StepKernel w = two_blocks(0.4, {{2.0, 0.6}, {0.6, 1.2}});
  const WeightedGraph g = blowup(w, 60);
  // relabel vertices by a fixed rotation
  std::vector<double> beta(60 * 60, 0.0);
  const WeightedGraph gd = g.densified();
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 0; j < 60; ++j)
      beta[((i + 13) % 60) * 60 + ((j + 13) % 60)] = gd.beta(i, j);
  const WeightedGraph relabeled = WeightedGraph::from_dense(60, std::move(beta));

  const int reps = 4000;
  const double p = 1.3 / 60.0;
  std::map<std::int64_t, int> h1, h2;
  for (int r = 0; r < reps; ++r) {
    ++h1[components(sample(g, p, SampleMode::bernoulli,
                           rng::derive_seed(5, static_cast<std::uint64_t>(r))))
             .c1()];
    ++h2[components(sample(relabeled, p, SampleMode::bernoulli,
                           rng::derive_seed(6, static_cast<std::uint64_t>(r))))
             .c1()];
  }
  // chi-square over pooled bins with expected counts >= 10
  std::map<std::int64_t, std::pair<int, int>> bins;
  for (const auto& [k, c] : h1) bins[std::min<std::int64_t>(k, 30)].first += c;
  for (const auto& [k, c] : h2) bins[std::min<std::int64_t>(k, 30)].second += c;
  double chi2 = 0.0;
  int dof = -1;
  int small1 = 0, small2 = 0;
  for (const auto& [k, counts] : bins) {
    const int total = counts.first + counts.second;
    if (total < 20) {
      small1 += counts.first;
      small2 += counts.second;
      continue;
    }
    const double e = total / 2.0;
    chi2 += (counts.first - e) * (counts.first - e) / e +
            (counts.second - e) * (counts.second - e) / e;
    ++dof;
  }
  if (small1 + small2 >= 20) {
    const double e = (small1 + small2) / 2.0;
    chi2 += (small1 - e) * (small1 - e) / e + (small2 - e) * (small2 - e) / e;
    ++dof;
  }
  CHECK(chi2 < oracles::chi2_quantile(dof, 0.01));
}
