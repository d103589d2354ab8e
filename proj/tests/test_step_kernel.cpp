#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "perclim/errors.hpp"
#include "perclim/rng.hpp"
#include "perclim/step_kernel.hpp"

using namespace perclim;

namespace {

StepKernel two_blocks(double m1, std::vector<std::vector<double>> rows) {
  return StepKernel::from_rows({m1, 1.0 - m1}, rows);
}

StepKernel random_kernel(rng::SplitMix64& gen, std::size_t m, double vmax,
                         double zero_fraction = 0.0) {
  std::vector<double> measures(m);
  double sum = 0.0;
  for (auto& mu : measures) {
    mu = 0.1 + gen.next_double();
    sum += mu;
  }
  for (auto& mu : measures) mu /= sum;
  // renormalize exactly
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) acc += measures[i];
  measures[m - 1] = 1.0 - acc;
  std::vector<double> values(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      const double v = gen.next_double() < zero_fraction ? 0.0 : gen.next_double() * vmax;
      values[i * m + j] = v;
      values[j * m + i] = v;
    }
  return StepKernel(std::move(measures), std::move(values));
}

}  // namespace

TEST_CASE("constructor enforces the type invariants") {
  CHECK_THROWS_AS(StepKernel({0.5, 0.6}, {1, 0, 0, 1}), std::invalid_argument);  // sum != 1
  CHECK_THROWS_AS(StepKernel({1.5, -0.5}, {1, 0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(StepKernel({0.5, 0.5}, {1, 2, 3, 1}), std::invalid_argument);  // asymmetric
  CHECK_THROWS_AS(StepKernel({}, {}), std::invalid_argument);
  const StepKernel w = two_blocks(0.5, {{1, -2}, {-2, 1}});
  CHECK_FALSE(w.nonnegative());
  CHECK(w.sup_norm() == 2.0);
  CHECK(StepKernel::constant(3.0).sup_norm() == 3.0);
}

TEST_CASE("eval uses half-open blocks, last block closed") {
  const StepKernel c = StepKernel::constant(0.7);
  CHECK(eval(c, 0.0, 0.0) == 0.7);
  CHECK(eval(c, 1.0, 0.3) == 0.7);

  const StepKernel w = two_blocks(0.5, {{1, 0}, {0, 1}});
  CHECK(eval(w, 0.25, 0.75) == 0.0);
  CHECK(eval(w, 0.5, 0.75) == 1.0);  // 0.5 lies in the second block
  CHECK(eval(w, 1.0, 1.0) == 1.0);
  CHECK(eval(w, 0.0, 0.0) == 1.0);
  CHECK_THROWS_AS(eval(w, -0.1, 0.5), std::domain_error);
  CHECK_THROWS_AS(eval(w, 0.5, 1.1), std::domain_error);

  rng::SplitMix64 gen(2024);
  const StepKernel r = random_kernel(gen, 5, 3.0);
  for (int t = 0; t < 200; ++t) {
    const double x = gen.next_double(), y = gen.next_double();
    CHECK(eval(r, x, y) == eval(r, y, x));
  }
}

TEST_CASE("degree_function") {
  const BlockFunction l1 = degree_function(StepKernel::constant(2.5));
  CHECK(l1[0] == doctest::Approx(2.5).epsilon(1e-14));

  const BlockFunction l2 = degree_function(two_blocks(0.5, {{0, 2}, {2, 0}}));
  CHECK(l2[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l2[1] == doctest::Approx(1.0).epsilon(1e-14));

  // hand computation: lambda_i = sum_j mu_j V_ij
  const BlockFunction l3 = degree_function(two_blocks(0.25, {{4, 0}, {0, 4}}));
  CHECK(l3[0] == doctest::Approx(0.25 * 4).epsilon(1e-14));
  CHECK(l3[1] == doctest::Approx(0.75 * 4).epsilon(1e-14));

  CHECK_THROWS_AS(degree_function(two_blocks(0.5, {{1, -1}, {-1, 1}})), std::domain_error);
}

TEST_CASE("apply_T basics and linearity") {
  const StepKernel w = StepKernel::constant(1.3);
  const BlockFunction ones{{1.0}};
  CHECK(apply_T(w, ones)[0] == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(apply_T(StepKernel::constant(0.0), ones)[0] == 0.0);

  rng::SplitMix64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const StepKernel r = random_kernel(gen, 4, 2.0);
    const BlockFunction ones4{std::vector<double>(4, 1.0)};
    const BlockFunction lam = degree_function(r);
    const BlockFunction tw = apply_T(r, ones4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(tw[i] == doctest::Approx(lam[i]).epsilon(1e-13));

    BlockFunction f{{gen.next_double(), gen.next_double(), gen.next_double(), gen.next_double()}};
    BlockFunction g{{gen.next_double(), gen.next_double(), gen.next_double(), gen.next_double()}};
    const double alpha = 2.0 * gen.next_double() - 1.0;
    BlockFunction combo{std::vector<double>(4)};
    for (std::size_t i = 0; i < 4; ++i) combo[i] = alpha * f[i] + g[i];
    const BlockFunction lhs = apply_T(r, combo);
    const BlockFunction tf = apply_T(r, f);
    const BlockFunction tg = apply_T(r, g);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(lhs[i] - (alpha * tf[i] + tg[i])) < 1e-12);
    }
  }
  CHECK_THROWS_AS(apply_T(StepKernel::constant(1.0), BlockFunction{{1.0, 2.0}}),
                  std::invalid_argument);
}

TEST_CASE("operator_norm against the 2x2 characteristic polynomial") {
  CHECK(operator_norm(StepKernel::constant(2.0)) == doctest::Approx(2.0).epsilon(1e-10));

  // equal blocks [[a,b],[b,a]]: eigenvalues of 0.5*[[a,b],[b,a]] are (a±b)/2
  for (auto [a, b] : std::vector<std::pair<double, double>>{{3, 1}, {1, 0}, {2, 2}, {0.4, 1.7}}) {
    const auto [hi, lo] = oracles::eig2x2(a / 2, b / 2, b / 2, a / 2);
    const double expected = std::max(std::abs(hi), std::abs(lo));
    CHECK(operator_norm(two_blocks(0.5, {{a, b}, {b, a}})) ==
          doctest::Approx(expected).epsilon(1e-9));
  }

  // bipartite-type kernel: spectrum is +/- 1, norm 1
  CHECK(operator_norm(two_blocks(0.5, {{0, 2}, {2, 0}})) == doctest::Approx(1.0).epsilon(1e-9));

  // general 2-block oracle including unequal measures
  rng::SplitMix64 gen(99);
  for (int trial = 0; trial < 25; ++trial) {
    const StepKernel w = random_kernel(gen, 2, 4.0);
    const double m0 = w.measure(0), m1 = w.measure(1);
    const auto [hi, lo] = oracles::eig2x2(m0 * w.value(0, 0), std::sqrt(m0 * m1) * w.value(0, 1),
                                          std::sqrt(m0 * m1) * w.value(1, 0), m1 * w.value(1, 1));
    const double expected = std::max(std::abs(hi), std::abs(lo));
    CHECK(operator_norm(w) == doctest::Approx(expected).epsilon(1e-8));
  }

  SUBCASE("homogeneity and sup-norm bound") {
    rng::SplitMix64 g2(123);
    for (int trial = 0; trial < 20; ++trial) {
      const StepKernel w = random_kernel(g2, 5, 3.0);
      const double norm = operator_norm(w);
      CHECK(norm <= w.sup_norm() + 1e-12);
      CHECK(operator_norm(scale(w, 2.0)) == doctest::Approx(2.0 * norm).epsilon(1e-8));
    }
  }

  CHECK_THROWS_AS(operator_norm(two_blocks(0.5, {{1, -1}, {-1, 1}})), std::domain_error);
}

TEST_CASE("irreducibility matches the subset brute force") {
  CHECK_FALSE(is_irreducible(two_blocks(0.5, {{1, 0}, {0, 1}})));
  CHECK(is_irreducible(two_blocks(0.5, {{1, 1}, {1, 1}})));
  CHECK(is_irreducible(two_blocks(0.5, {{0, 1}, {1, 0}})));
  CHECK(is_irreducible(StepKernel::constant(1.0)));

  rng::SplitMix64 gen(41);
  int reducible_seen = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 2 + gen.next_below(5);
    const StepKernel w = random_kernel(gen, m, 2.0, 0.65);
    const bool brute = oracles::irreducible_bruteforce(w);
    CHECK(is_irreducible(w) == brute);
    if (!brute) ++reducible_seen;
  }
  CHECK(reducible_seen > 3);  // the sweep actually exercises both outcomes

  // larger block counts, up to the 2^m subset sweep at m = 16
  for (std::size_t m : {std::size_t{12}, std::size_t{16}}) {
    for (int trial = 0; trial < 4; ++trial) {
      const StepKernel w = random_kernel(gen, m, 1.0, 0.82);
      CHECK(is_irreducible(w) == oracles::irreducible_bruteforce(w));
    }
  }
}

TEST_CASE("support_components partitions the blocks") {
  const StepKernel w = StepKernel::from_rows(
      {0.25, 0.25, 0.5}, {{1.0, 0.0, 0.0}, {0.0, 2.0, 1.0}, {0.0, 1.0, 0.0}});
  const auto comps = support_components(w);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<std::size_t>{0});
  CHECK(comps[1] == std::vector<std::size_t>{1, 2});
}

TEST_CASE("cut_norm exact regime") {
  // nonnegative kernel: A = B = everything
  rng::SplitMix64 gen(4242);
  for (int trial = 0; trial < 15; ++trial) {
    const StepKernel w = random_kernel(gen, 4, 2.0);
    double full = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) full += w.measure(i) * w.measure(j) * w.value(i, j);
    const CutNormResult res = cut_norm_detail(w);
    CHECK(res.exact);
    CHECK(res.value == doctest::Approx(full).epsilon(1e-12));
  }

  CHECK(cut_norm(StepKernel::constant(0.0)) == 0.0);
  CHECK(cut_norm(two_blocks(0.5, {{1, -1}, {-1, 1}})) == doctest::Approx(0.25).epsilon(1e-12));

  SUBCASE("signed kernels against the (A,B) brute force") {
    rng::SplitMix64 g2(555);
    for (int trial = 0; trial < 25; ++trial) {
      const std::size_t m = 2 + g2.next_below(4);
      StepKernel a = random_kernel(g2, m, 2.0);
      // random signed kernel via value-level difference on a shared grid
      std::vector<double> values = a.values();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
          const double v = values[i * m + j] - g2.next_double() * 2.0;
          values[i * m + j] = v;
          values[j * m + i] = v;
        }
      const StepKernel signed_kernel(a.measures(), values);
      CHECK(cut_norm(signed_kernel) ==
            doctest::Approx(oracles::cut_norm_bruteforce(signed_kernel)).epsilon(1e-12));
    }
  }

  SUBCASE("norm axioms on a shared grid") {
    rng::SplitMix64 g3(77);
    for (int trial = 0; trial < 15; ++trial) {
      StepKernel a = random_kernel(g3, 3, 1.5);
      StepKernel b = random_kernel(g3, 3, 1.5);
      StepKernel c = random_kernel(g3, 3, 1.5);
      // move b and c onto a's measures so sums are defined blockwise
      StepKernel b2(a.measures(), b.values());
      StepKernel c2(a.measures(), c.values());
      std::vector<double> ab(9), bc(9), ac(9);
      for (std::size_t i = 0; i < 9; ++i) {
        ab[i] = a.values()[i] - b2.values()[i];
        bc[i] = b2.values()[i] - c2.values()[i];
        ac[i] = a.values()[i] - c2.values()[i];
      }
      const double nab = cut_norm(StepKernel(a.measures(), ab));
      const double nbc = cut_norm(StepKernel(a.measures(), bc));
      const double nac = cut_norm(StepKernel(a.measures(), ac));
      CHECK(nac <= nab + nbc + 1e-12);
      CHECK(nab >= 0.0);
    }
  }

  SUBCASE("zero only for the zero kernel") {
    const StepKernel w = two_blocks(0.3, {{0.0, 0.2}, {0.2, 0.0}});
    CHECK(cut_norm(w) > 0.0);
  }
}

TEST_CASE("cut_norm heuristic regime is a lower bound and flagged") {
  rng::SplitMix64 gen(31);
  const StepKernel big = random_kernel(gen, 24, 1.0);
  const CutNormResult res = cut_norm_detail(big);
  CHECK_FALSE(res.exact);
  // nonnegative kernel: the heuristic must still find the full-mass optimum
  double full = 0.0;
  for (std::size_t i = 0; i < 24; ++i)
    for (std::size_t j = 0; j < 24; ++j) full += big.measure(i) * big.measure(j) * big.value(i, j);
  CHECK(res.value == doctest::Approx(full).epsilon(1e-10));
}

TEST_CASE("cut_distance") {
  const StepKernel w = two_blocks(0.25, {{2, 0.5}, {0.5, 1}});
  CHECK(cut_distance(w, w).value == doctest::Approx(0.0).epsilon(1e-12));

  // block permutation is distance zero
  const StepKernel wp = two_blocks(0.75, {{1, 0.5}, {0.5, 2}});
  const CutDistanceResult d = cut_distance(w, wp);
  CHECK(d.exact);
  CHECK(d.value == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(cut_distance(StepKernel::constant(0.8), StepKernel::constant(0.3)).value ==
        doctest::Approx(0.5).epsilon(1e-12));

  CHECK(cut_distance(w, StepKernel::constant(1.0)).value <=
        cut_norm(difference(w, StepKernel::constant(1.0))) + 1e-12);

  SUBCASE("incommensurable grids are rejected") {
    const double irr = 1.0 / std::sqrt(2.0);
    const StepKernel bad = two_blocks(irr, {{1, 0}, {0, 1}});
    CHECK_THROWS_AS(cut_distance(bad, two_blocks(0.25, {{1, 0}, {0, 1}})), std::invalid_argument);
  }

  SUBCASE("heuristic regime stays above the true distance witness") {
    // 12 equal blocks: exhaustive search is out, annealing must still find a
    // permutation matching a relabeled copy reasonably well
    rng::SplitMix64 gen(8);
    std::vector<double> measures(12, 1.0 / 12.0);
    std::vector<double> values(144);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = i; j < 12; ++j) {
        values[i * 12 + j] = values[j * 12 + i] = gen.next_double();
      }
    const StepKernel a(measures, values);
    // relabel blocks by a rotation
    std::vector<double> rotated(144);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j)
        rotated[i * 12 + j] = values[((i + 5) % 12) * 12 + ((j + 5) % 12)];
    const StepKernel b(measures, rotated);
    const CutDistanceResult res = cut_distance(a, b);
    CHECK_FALSE(res.exact);
    CHECK(res.upper_bound);  // inner norms exact at 12 blocks
    CHECK(res.value >= 0.0);
    CHECK(res.value < 0.02);  // annealing should recover (almost) the rotation
  }
}

TEST_CASE("scale") {
  const StepKernel w = two_blocks(0.5, {{2, 1}, {1, 0}});
  const StepKernel same = scale(w, 1.0);
  CHECK(same.values() == w.values());
  CHECK(cut_norm(scale(w, 0.0)) == 0.0);
  CHECK(operator_norm(scale(w, 2.0)) == doctest::Approx(2.0 * operator_norm(w)).epsilon(1e-9));
  CHECK_THROWS_AS(scale(w, -1.0), std::invalid_argument);
}

TEST_CASE("refinement and coarsening") {
  const StepKernel w1 = two_blocks(0.25, {{3, 1}, {1, 2}});
  const StepKernel w2 = two_blocks(0.5, {{1, 0}, {0, 1}});
  const auto [r1, r2] = refine_to_common_grid(w1, w2);
  CHECK(r1.block_count() == 4);
  CHECK(r2.block_count() == 4);
  // refined kernels evaluate identically
  rng::SplitMix64 gen(3);
  for (int t = 0; t < 100; ++t) {
    const double x = gen.next_double(), y = gen.next_double();
    CHECK(eval(r1, x, y) == doctest::Approx(eval(w1, x, y)).epsilon(1e-14));
    CHECK(eval(r2, x, y) == doctest::Approx(eval(w2, x, y)).epsilon(1e-14));
  }

  // averaging a 4-block refinement back to 2 blocks restores the original
  const StepKernel back = coarsen_equal(r2, 2);
  CHECK(back.value(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(back.value(0, 1) == doctest::Approx(0.0).epsilon(1e-12));

  // coarsening preserves the total mass (A = B = [0,1] integral)
  const StepKernel fine = two_blocks(0.3, {{2, 0.5}, {0.5, 1}});
  const StepKernel coarse = coarsen_equal(fine, 2);
  double mass_fine = 0.0, mass_coarse = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      mass_fine += fine.measure(i) * fine.measure(j) * fine.value(i, j);
      mass_coarse += coarse.measure(i) * coarse.measure(j) * coarse.value(i, j);
    }
  CHECK(mass_coarse == doctest::Approx(mass_fine).epsilon(1e-12));
}

TEST_CASE("kernel JSON round trip and validation") {
  const StepKernel w = two_blocks(0.25, {{3, 1}, {1, 2}});
  const StepKernel back = kernel_from_json(kernel_to_json(w));
  CHECK(back.block_count() == 2);
  CHECK(back.measure(0) == w.measure(0));
  CHECK(back.values() == w.values());

  CHECK_THROWS_AS(kernel_from_json("{\"values\": [[1]]}"), std::invalid_argument);
  CHECK_THROWS_AS(kernel_from_json("not json"), std::invalid_argument);
  // asymmetry beyond 1e-12 is rejected, not silently symmetrized
  CHECK_THROWS_AS(
      kernel_from_json(
          "{\"block_measures\":[0.5,0.5],\"values\":[[1.0,0.5],[0.500001,1.0]]}"),
      std::invalid_argument);
  // asymmetry within 1e-12 loads as an exactly symmetric kernel
  const StepKernel tiny = kernel_from_json(
      "{\"block_measures\":[0.5,0.5],\"values\":[[1.0,0.5],[0.5000000000001,1.0]]}");
  CHECK(tiny.value(0, 1) == tiny.value(1, 0));
}
