#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "oracles.hpp"
#include "perclim/homdensity.hpp"
#include "perclim/rng.hpp"
#include "perclim/weighted_graph.hpp"

using namespace perclim;

namespace {

StepKernel two_blocks(double m1, std::vector<std::vector<double>> rows) {
  return StepKernel::from_rows({m1, 1.0 - m1}, rows);
}

WeightedGraph random_dense(rng::SplitMix64& gen, std::size_t n, double vmax) {
  std::vector<double> beta(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      beta[i * n + j] = beta[j * n + i] = gen.next_double() * vmax;
    }
  return WeightedGraph::from_dense(n, std::move(beta));
}

}  // namespace

TEST_CASE("dense constructor validates") {
  CHECK_THROWS_AS(WeightedGraph::from_dense(2, {0, 1, 2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph::from_dense(2, {1, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph::from_dense(2, {0, -1, -1, 0}), std::invalid_argument);
  const WeightedGraph g = WeightedGraph::from_dense(2, {0, 3, 3, 0});
  CHECK(g.beta_max() == 3.0);
  CHECK(g.beta(0, 1) == 3.0);
  CHECK(g.beta(0, 0) == 0.0);
}

TEST_CASE("complete graph") {
  const WeightedGraph g = complete_graph(5);
  CHECK(g.size() == 5);
  for (std::size_t v = 0; v < 5; ++v) CHECK(weighted_degree(g, v) == doctest::Approx(4.0));
  CHECK(top_eigenvalue(g) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(complete_graph(2).beta(0, 1) == 1.0);
  CHECK(top_eigenvalue(complete_graph(2)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(complete_graph(1).beta_max() == 0.0);
  CHECK_THROWS_AS(complete_graph(0), std::invalid_argument);
}

TEST_CASE("blowup") {
  // constant kernel gives the complete graph
  const WeightedGraph b = blowup(StepKernel::constant(1.0), 6);
  const WeightedGraph k6 = complete_graph(6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(b.beta(i, j) == k6.beta(i, j));

  // block-diagonal kernel: zero cross-block weights
  const WeightedGraph two = blowup(two_blocks(0.5, {{1, 0}, {0, 1}}), 8);
  CHECK(two.beta(0, 3) == 1.0);
  CHECK(two.beta(0, 4) == 0.0);
  CHECK(two.beta(4, 7) == 1.0);

  // generators invariants: symmetric, zero diagonal, entries within sup norm
  rng::SplitMix64 gen(5);
  const StepKernel w = two_blocks(0.25, {{3, 1}, {1, 2}});
  const WeightedGraph g = blowup(w, 37);
  for (std::size_t i = 0; i < 37; ++i) {
    CHECK(g.beta(i, i) == 0.0);
    for (std::size_t j = 0; j < 37; ++j) {
      CHECK(g.beta(i, j) == g.beta(j, i));
      CHECK(g.beta(i, j) <= w.sup_norm());
    }
  }
}

TEST_CASE("blowup converges to the kernel in triangle density") {
  const StepKernel w = two_blocks(0.5, {{0.9, 0.3}, {0.3, 0.5}});
  const double target = t_kernel(pattern_triangle(), w);
  const double got = t_graph(pattern_triangle(), blowup(w, 300));
  CHECK(std::abs(got - target) < 0.02);
}

TEST_CASE("sample_dense") {
  const WeightedGraph c = sample_dense(StepKernel::constant(0.7), 10, 3);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j) CHECK(c.beta(i, j) == 0.7);

  CHECK(sample_dense(StepKernel::constant(0.0), 5, 1).beta_max() == 0.0);

  // type fractions concentrate around the block measures
  const StepKernel w = two_blocks(0.3, {{1, 1}, {1, 1}});
  const std::size_t n = 4000;
  const WeightedGraph g = sample_dense(w, n, 12345);
  std::size_t in_first = 0;
  for (std::uint32_t b : g.block_of()) {
    if (b == 0) ++in_first;
  }
  const double frac = static_cast<double>(in_first) / static_cast<double>(n);
  const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(n));
  CHECK(std::abs(frac - 0.3) <= 3.0 * sigma);
  CHECK(g.types().size() == n);

  // same seed, same graph
  const WeightedGraph g2 = sample_dense(w, n, 12345);
  CHECK(g.block_of() == g2.block_of());
}

TEST_CASE("weighted degree and the handshake identity") {
  CHECK(weighted_degree(complete_graph(5), 2) == doctest::Approx(4.0));
  CHECK(weighted_degree(blowup(StepKernel::constant(0.0), 4), 0) == 0.0);
  CHECK_THROWS_AS(weighted_degree(complete_graph(3), 3), std::invalid_argument);

  rng::SplitMix64 gen(17);
  const WeightedGraph g = random_dense(gen, 12, 2.0);
  double total = 0.0, edges2 = 0.0;
  for (std::size_t v = 0; v < 12; ++v) total += weighted_degree(g, v);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) edges2 += g.beta(i, j);
  CHECK(total == doctest::Approx(edges2).epsilon(1e-12));
}

TEST_CASE("top eigenvalue") {
  CHECK(top_eigenvalue(complete_graph(40)) == doctest::Approx(39.0).epsilon(1e-9));

  // Perron bounds on random graphs, both backings
  rng::SplitMix64 gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const WeightedGraph g = random_dense(gen, 15, 1.5);
    const std::vector<double> d = weighted_degrees(g);
    double avg = 0.0, mx = 0.0;
    for (double x : d) {
      avg += x;
      mx = std::max(mx, x);
    }
    avg /= 15.0;
    const double lam = top_eigenvalue(g);
    CHECK(lam >= avg - 1e-9);
    CHECK(lam <= mx + 1e-9);
  }

  // blowup spectra approach n * |T_W|
  const StepKernel w = two_blocks(0.5, {{3, 1}, {1, 1}});
  const double lam = top_eigenvalue(blowup(w, 500));
  CHECK(std::abs(lam / 500.0 - operator_norm(w)) < 0.02);

  // block and dense backings agree
  const WeightedGraph b = blowup(w, 60);
  CHECK(top_eigenvalue(b) == doctest::Approx(top_eigenvalue(b.densified())).epsilon(1e-8));
}

TEST_CASE("cut weight") {
  const WeightedGraph k3 = complete_graph(3);
  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(cut_weight(k3, all, all) == doctest::Approx(6.0));
  const WeightedGraph k4 = complete_graph(4);
  const std::vector<std::size_t> left{0, 1}, right{2, 3};
  CHECK(cut_weight(k4, left, right) == doctest::Approx(4.0));
  CHECK(cut_weight(k4, right, left) == doctest::Approx(4.0));
}

TEST_CASE("find_ab_cut exact regime") {
  // block-diagonal blowup: one block is a perfect witness
  const WeightedGraph split = blowup(two_blocks(0.5, {{1, 0}, {0, 1}}), 20);
  const AbCutResult found = find_ab_cut(split, 0.4, 0.001);
  REQUIRE(found.exact);
  REQUIRE(found.witness.has_value());
  const auto& x = *found.witness;
  CHECK(x.size() >= 8);
  CHECK(x.size() <= 12);
  std::vector<std::size_t> rest;
  for (std::size_t v = 0; v < 20; ++v) {
    if (std::find(x.begin(), x.end(), v) == x.end()) rest.push_back(v);
  }
  CHECK(cut_weight(split, x, rest) <= 0.001 * 400.0);

  // complete graph: minimum balanced cut is 8*12 = 96 > 0.4
  const AbCutResult none = find_ab_cut(complete_graph(20), 0.4, 0.001);
  CHECK(none.exact);
  CHECK_FALSE(none.witness.has_value());

  CHECK_THROWS_AS(find_ab_cut(complete_graph(4), 0.7, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(find_ab_cut(complete_graph(4), 0.4, 0.0), std::invalid_argument);
}

TEST_CASE("find_ab_cut heuristic regime") {
  // above n = 24: a clear two-community structure must still be found
  const WeightedGraph split = blowup(two_blocks(0.5, {{1, 0.001}, {0.001, 1}}), 60);
  const AbCutResult found = find_ab_cut(split, 0.4, 0.01);
  CHECK_FALSE(found.exact);
  REQUIRE(found.witness.has_value());
  const auto& x = *found.witness;
  CHECK(x.size() >= 24);
  CHECK(x.size() <= 36);
  std::vector<std::size_t> rest;
  for (std::size_t v = 0; v < 60; ++v) {
    if (std::find(x.begin(), x.end(), v) == x.end()) rest.push_back(v);
  }
  CHECK(cut_weight(split, x, rest) <= 0.01 * 3600.0);
}

TEST_CASE("empirical graphon") {
  const StepKernel e2 = empirical_graphon(complete_graph(2));
  CHECK(e2.block_count() == 2);
  CHECK(e2.value(0, 1) == 1.0);
  CHECK(e2.value(0, 0) == 0.0);

  CHECK(cut_norm(empirical_graphon(blowup(StepKernel::constant(0.0), 4))) == 0.0);

  rng::SplitMix64 gen(31);
  for (int trial = 0; trial < 5; ++trial) {
    const WeightedGraph g = random_dense(gen, 9, 2.0);
    const double lhs = operator_norm(empirical_graphon(g));
    CHECK(std::abs(lhs - top_eigenvalue(g) / 9.0) < 1e-8);
  }

  // empirical graphon then blowup at the same n reproduces beta exactly
  const WeightedGraph g = random_dense(gen, 11, 1.0);
  const WeightedGraph back = blowup(empirical_graphon(g), 11);
  for (std::size_t i = 0; i < 11; ++i)
    for (std::size_t j = 0; j < 11; ++j) CHECK(back.beta(i, j) == g.beta(i, j));
}

TEST_CASE("graph text IO round trip") {
  rng::SplitMix64 gen(47);
  const WeightedGraph g = random_dense(gen, 8, 1.0);
  const std::string path = "/tmp/perclim_test_graph.txt";
  save_graph_text(g, path);
  const WeightedGraph back = load_graph_text(path);
  REQUIRE(back.size() == 8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(back.beta(i, j) == g.beta(i, j));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_graph_text("/tmp/perclim_no_such_file.txt"), std::runtime_error);

  SUBCASE("a sparse graph loads with the low-density warning path") {
    const std::string sparse = "/tmp/perclim_sparse_graph.txt";
    {
      std::ofstream out(sparse);
      out << "500\n0 1 1.0\n2 3 1.0\n";
    }
    const WeightedGraph s = load_graph_text(sparse);  // warns on stderr
    CHECK(s.size() == 500);
    CHECK(s.beta(0, 1) == 1.0);
    std::filesystem::remove(sparse);
  }
}

TEST_CASE("generator config JSON") {
  const GeneratorSpec complete = generator_from_json("{\"kind\":\"complete\",\"n\":7}");
  CHECK(generate(complete).size() == 7);

  const GeneratorSpec blow = generator_from_json(
      "{\"kind\":\"blowup\",\"n\":10,\"kernel\":{\"block_measures\":[0.5,0.5],"
      "\"values\":[[1,0],[0,1]]}}");
  const WeightedGraph g = generate(blow);
  CHECK(g.size() == 10);
  CHECK(g.beta(0, 9) == 0.0);

  const GeneratorSpec sampled = generator_from_json(
      "{\"kind\":\"sample_dense\",\"n\":10,\"seed\":9,\"kernel\":{\"block_measures\":[1.0],"
      "\"values\":[[0.5]]}}");
  CHECK(generate(sampled).beta(2, 3) == 0.5);

  CHECK_THROWS_AS(generator_from_json("{\"kind\":\"blowup\",\"n\":4}"), std::invalid_argument);
  CHECK_THROWS_AS(generator_from_json("{\"kind\":\"mystery\",\"n\":4}"), std::invalid_argument);
}
