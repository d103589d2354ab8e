#include "perclim/step_kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "perclim/errors.hpp"
#include "perclim/power_iteration.hpp"
#include "perclim/rng.hpp"
#include "perclim/union_find.hpp"

namespace perclim {

namespace {

constexpr double kMeasureSumTol = 1e-12;
constexpr double kBoundaryTol = 1e-9;
constexpr std::size_t kCutNormExactMaxBlocks = 20;
constexpr std::size_t kCutDistanceExactMaxBlocks = 8;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

StepKernel::StepKernel(std::vector<double> block_measures, std::vector<double> values)
    : m_(block_measures.size()),
      measures_(std::move(block_measures)),
      values_(std::move(values)) {
  if (m_ == 0) throw std::invalid_argument("StepKernel: need at least one block");
  if (values_.size() != m_ * m_) {
    throw std::invalid_argument("StepKernel: values must be m x m");
  }
  double sum = 0.0;
  for (double mu : measures_) {
    if (!(mu > 0.0)) throw std::invalid_argument("StepKernel: block measures must be positive");
    sum += mu;
  }
  if (std::abs(sum - 1.0) > kMeasureSumTol) {
    throw std::invalid_argument("StepKernel: block measures must sum to 1, got " + fmt(sum));
  }
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = i + 1; j < m_; ++j) {
      if (values_[i * m_ + j] != values_[j * m_ + i]) {
        throw std::invalid_argument("StepKernel: values matrix must be symmetric");
      }
    }
  }
  nonnegative_ = true;
  sup_norm_ = 0.0;
  for (double v : values_) {
    if (v < 0.0) nonnegative_ = false;
    sup_norm_ = std::max(sup_norm_, std::abs(v));
  }
  boundaries_.resize(m_ + 1);
  boundaries_[0] = 0.0;
  for (std::size_t i = 0; i < m_; ++i) boundaries_[i + 1] = boundaries_[i] + measures_[i];
  boundaries_[m_] = 1.0;
}

StepKernel StepKernel::constant(double c) { return StepKernel({1.0}, {c}); }

StepKernel StepKernel::from_rows(std::vector<double> block_measures,
                                 const std::vector<std::vector<double>>& rows) {
  const std::size_t m = block_measures.size();
  if (rows.size() != m) throw std::invalid_argument("StepKernel: row count mismatch");
  std::vector<double> values(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].size() != m) throw std::invalid_argument("StepKernel: row length mismatch");
    for (std::size_t j = 0; j < m; ++j) values[i * m + j] = rows[i][j];
  }
  // mirror the upper triangle so the stored matrix is exactly symmetric
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      if (std::abs(values[i * m + j] - values[j * m + i]) > 1e-12) {
        throw std::invalid_argument("StepKernel: rows are not symmetric");
      }
      values[j * m + i] = values[i * m + j];
    }
  return StepKernel(std::move(block_measures), std::move(values));
}

std::size_t StepKernel::block_at(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("StepKernel: point outside [0,1]");
  auto it = std::upper_bound(boundaries_.begin() + 1, boundaries_.end(), x);
  std::size_t idx = static_cast<std::size_t>(it - (boundaries_.begin() + 1));
  return std::min(idx, m_ - 1);  // x = 1 falls into the last (closed) block
}

double eval(const StepKernel& kernel, double x, double y) {
  return kernel.value(kernel.block_at(x), kernel.block_at(y));
}

BlockFunction degree_function(const StepKernel& kernel) {
  if (!kernel.nonnegative()) throw std::domain_error("degree_function: kernel must be nonnegative");
  const std::size_t m = kernel.block_count();
  BlockFunction out{std::vector<double>(m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += kernel.measure(j) * kernel.value(i, j);
    out[i] = acc;
  }
  return out;
}

BlockFunction apply_T(const StepKernel& kernel, const BlockFunction& f) {
  const std::size_t m = kernel.block_count();
  if (f.size() != m) throw std::invalid_argument("apply_T: block count mismatch");
  BlockFunction out{std::vector<double>(m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += kernel.measure(j) * kernel.value(i, j) * f[j];
    out[i] = acc;
  }
  return out;
}

double operator_norm(const StepKernel& kernel) {
  if (!kernel.nonnegative()) throw std::domain_error("operator_norm: kernel must be nonnegative");
  const std::size_t m = kernel.block_count();
  std::vector<double> sym(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      sym[i * m + j] = std::sqrt(kernel.measure(i) * kernel.measure(j)) * kernel.value(i, j);
  auto matvec = [&](const double* x, double* y) {
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += sym[i * m + j] * x[j];
      y[i] = acc;
    }
  };
  PowerIterationResult res = power_iteration(m, matvec, 1e-10, 100000);
  if (!res.converged) {
    throw ConvergenceError("operator_norm: power iteration did not converge", res.value);
  }
  return res.value;
}

std::vector<std::vector<std::size_t>> support_components(const StepKernel& kernel) {
  if (!kernel.nonnegative()) throw std::domain_error("support_components: kernel must be nonnegative");
  const std::size_t m = kernel.block_count();
  UnionFind uf(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (kernel.value(i, j) > 0.0) uf.unite(i, j);
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::size_t> root_to_comp(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t r = uf.find(i);
    if (root_to_comp[r] == m) {
      root_to_comp[r] = comps.size();
      comps.emplace_back();
    }
    comps[root_to_comp[r]].push_back(i);
  }
  return comps;
}

bool is_irreducible(const StepKernel& kernel) {
  return support_components(kernel).size() == 1;
}

namespace {

// Exact cut norm over block subsets: enumerate A by Gray code, pick B
// greedily per column sign. a_ij = mu_i mu_j V_ij.
double cut_norm_exact(const std::vector<double>& a, std::size_t m) {
  std::vector<double> col(m, 0.0);  // column sums over the current A
  double pos = 0.0, neg = 0.0, best = 0.0;
  std::vector<char> in(m, 0);
  const std::uint64_t states = 1ULL << m;
  for (std::uint64_t t = 1; t < states; ++t) {
    const std::size_t bit = static_cast<std::size_t>(std::countr_zero(t));
    const double dir = in[bit] ? -1.0 : 1.0;
    in[bit] ^= 1;
    const double* row = a.data() + bit * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double old = col[j];
      const double neu = old + dir * row[j];
      col[j] = neu;
      pos += std::max(neu, 0.0) - std::max(old, 0.0);
      neg += std::max(-neu, 0.0) - std::max(-old, 0.0);
    }
    best = std::max(best, std::max(pos, neg));
  }
  return best;
}

// Alternating maximization from random starts; a lower bound on the cut norm.
double cut_norm_heuristic(const std::vector<double>& a, std::size_t m, int restarts,
                          std::uint64_t seed) {
  rng::SplitMix64 gen(seed);
  double best = 0.0;
  std::vector<char> b_side(m), a_side(m);
  std::vector<double> row_sum(m), col_sum(m);
  for (int r = 0; r < restarts; ++r) {
    for (std::size_t j = 0; j < m; ++j) b_side[j] = static_cast<char>(gen.next() & 1);
    double value = 0.0;
    for (int pass = 0; pass < 64; ++pass) {
      // best A given B, for both signs of the objective
      std::fill(row_sum.begin(), row_sum.end(), 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j)
          if (b_side[j]) acc += a[i * m + j];
        row_sum[i] = acc;
      }
      double plus = 0.0, minus = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        plus += std::max(row_sum[i], 0.0);
        minus += std::max(-row_sum[i], 0.0);
      }
      const bool positive = plus >= minus;
      for (std::size_t i = 0; i < m; ++i)
        a_side[i] = static_cast<char>(positive ? row_sum[i] > 0.0 : row_sum[i] < 0.0);
      // best B given A with the same sign
      std::fill(col_sum.begin(), col_sum.end(), 0.0);
      for (std::size_t i = 0; i < m; ++i)
        if (a_side[i])
          for (std::size_t j = 0; j < m; ++j) col_sum[j] += a[i * m + j];
      double next = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        b_side[j] = static_cast<char>(positive ? col_sum[j] > 0.0 : col_sum[j] < 0.0);
        if (b_side[j]) next += positive ? col_sum[j] : -col_sum[j];
      }
      if (next <= value + 1e-15) {
        value = std::max(value, next);
        break;
      }
      value = next;
    }
    best = std::max(best, value);
  }
  return best;
}

std::vector<double> mass_matrix(const StepKernel& kernel) {
  const std::size_t m = kernel.block_count();
  std::vector<double> a(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      a[i * m + j] = kernel.measure(i) * kernel.measure(j) * kernel.value(i, j);
  return a;
}

}  // namespace

CutNormResult cut_norm_detail(const StepKernel& kernel) {
  const std::size_t m = kernel.block_count();
  std::vector<double> a = mass_matrix(kernel);
  if (m <= kCutNormExactMaxBlocks) return {cut_norm_exact(a, m), true};
  return {cut_norm_heuristic(a, m, 32, 0x6375746e6f726dULL), false};
}

double cut_norm(const StepKernel& kernel) { return cut_norm_detail(kernel).value; }

StepKernel scale(const StepKernel& kernel, double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("scale: factor must be >= 0");
  std::vector<double> values = kernel.values();
  for (double& v : values) v *= c;
  return StepKernel(kernel.measures(), std::move(values));
}

namespace {

std::vector<double> interior_boundaries(const StepKernel& k) {
  std::vector<double> b;
  for (std::size_t i = 1; i < k.block_count(); ++i) b.push_back(k.boundary(i));
  return b;
}

bool grid_compatible(const std::vector<double>& boundaries, std::size_t levels) {
  for (double b : boundaries) {
    const double scaled = b * static_cast<double>(levels);
    if (std::abs(scaled - std::round(scaled)) > kBoundaryTol * static_cast<double>(levels)) {
      return false;
    }
  }
  return true;
}

StepKernel refine_to_equal_grid(const StepKernel& k, std::size_t levels) {
  std::vector<double> measures(levels, 1.0 / static_cast<double>(levels));
  std::vector<std::size_t> src(levels);
  for (std::size_t a = 0; a < levels; ++a) {
    const double mid = (static_cast<double>(a) + 0.5) / static_cast<double>(levels);
    src[a] = k.block_at(mid);
  }
  std::vector<double> values(levels * levels);
  for (std::size_t a = 0; a < levels; ++a)
    for (std::size_t b = 0; b < levels; ++b) values[a * levels + b] = k.value(src[a], src[b]);
  return StepKernel(std::move(measures), std::move(values));
}

}  // namespace

std::pair<StepKernel, StepKernel> refine_to_common_grid(const StepKernel& w1,
                                                        const StepKernel& w2,
                                                        std::size_t max_blocks) {
  std::vector<double> bounds = interior_boundaries(w1);
  const std::vector<double> b2 = interior_boundaries(w2);
  bounds.insert(bounds.end(), b2.begin(), b2.end());
  for (std::size_t levels = 1; levels <= max_blocks; ++levels) {
    if (grid_compatible(bounds, levels)) {
      return {refine_to_equal_grid(w1, levels), refine_to_equal_grid(w2, levels)};
    }
  }
  throw std::invalid_argument(
      "refine_to_common_grid: block measures are incommensurable (no common equal grid of <= " +
      std::to_string(max_blocks) + " blocks)");
}

StepKernel difference(const StepKernel& w1, const StepKernel& w2) {
  auto [k1, k2] = refine_to_common_grid(w1, w2);
  std::vector<double> values(k1.values().size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = k1.values()[i] - k2.values()[i];
  return StepKernel(k1.measures(), std::move(values));
}

StepKernel coarsen_equal(const StepKernel& kernel, std::size_t target_blocks) {
  if (target_blocks == 0) throw std::invalid_argument("coarsen_equal: need at least one block");
  const std::size_t m = kernel.block_count();
  const std::size_t levels = std::min(target_blocks, m);
  // overlap weights of target block a with the source blocks, normalized to 1
  std::vector<std::vector<std::pair<std::size_t, double>>> overlap(levels);
  for (std::size_t a = 0; a < levels; ++a) {
    const double lo = static_cast<double>(a) / static_cast<double>(levels);
    const double hi = static_cast<double>(a + 1) / static_cast<double>(levels);
    for (std::size_t i = 0; i < m; ++i) {
      const double len =
          std::min(hi, kernel.boundary(i + 1)) - std::max(lo, kernel.boundary(i));
      if (len > 0.0) overlap[a].emplace_back(i, len * static_cast<double>(levels));
    }
  }
  std::vector<double> values(levels * levels, 0.0);
  for (std::size_t a = 0; a < levels; ++a)
    for (std::size_t b = a; b < levels; ++b) {
      double acc = 0.0;
      for (const auto& [i, wi] : overlap[a])
        for (const auto& [j, wj] : overlap[b]) acc += wi * wj * kernel.value(i, j);
      values[a * levels + b] = acc;
      values[b * levels + a] = acc;
    }
  return StepKernel(std::vector<double>(levels, 1.0 / static_cast<double>(levels)),
                    std::move(values));
}

namespace {

// Cut norm of V1 - V2 permuted by phi, on L equal blocks.
double permuted_diff_norm(const std::vector<double>& v1, const std::vector<double>& v2,
                          const std::vector<std::size_t>& phi, std::size_t levels, bool exact,
                          std::uint64_t seed) {
  const double cell = 1.0 / static_cast<double>(levels * levels);
  std::vector<double> a(levels * levels);
  for (std::size_t i = 0; i < levels; ++i)
    for (std::size_t j = 0; j < levels; ++j)
      a[i * levels + j] =
          cell * (v1[i * levels + j] - v2[phi[i] * levels + phi[j]]);
  if (exact) return cut_norm_exact(a, levels);
  return cut_norm_heuristic(a, levels, 4, seed);
}

}  // namespace

CutDistanceResult cut_distance(const StepKernel& w1, const StepKernel& w2) {
  auto [k1, k2] = refine_to_common_grid(w1, w2);
  const std::size_t levels = k1.block_count();
  const std::vector<double>& v1 = k1.values();
  const std::vector<double>& v2 = k2.values();

  if (levels <= kCutDistanceExactMaxBlocks) {
    std::vector<std::size_t> phi(levels);
    std::iota(phi.begin(), phi.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
      best = std::min(best, permuted_diff_norm(v1, v2, phi, levels, true, 0));
    } while (std::next_permutation(phi.begin(), phi.end()));
    return {best, true, true, levels};
  }

  // Simulated annealing over permutations with a cheap alternating-
  // maximization objective, followed by a greedy pairwise-swap descent. The
  // descent (and the final value) use the exact cut norm whenever the refined
  // block count allows it.
  const bool inner_exact = levels <= kCutNormExactMaxBlocks;
  const bool polish_exact = levels <= 16;  // 2^16 * 16 per evaluation is still cheap
  rng::SplitMix64 gen(0x63757464697374ULL);
  auto cheap = [&](const std::vector<std::size_t>& p, std::uint64_t s) {
    return permuted_diff_norm(v1, v2, p, levels, false, s);
  };
  auto polish_obj = [&](const std::vector<std::size_t>& p, std::uint64_t s) {
    return permuted_diff_norm(v1, v2, p, levels, polish_exact, s);
  };

  std::vector<std::size_t> best_phi(levels);
  std::iota(best_phi.begin(), best_phi.end(), std::size_t{0});
  double best_cheap = cheap(best_phi, gen.next());
  for (int restart = 0; restart < 3; ++restart) {
    std::vector<std::size_t> phi(levels);
    std::iota(phi.begin(), phi.end(), std::size_t{0});
    if (restart > 0) {  // random start after the identity
      for (std::size_t i = levels; i > 1; --i) {
        std::swap(phi[i - 1], phi[gen.next_below(i)]);
      }
    }
    double current = cheap(phi, gen.next());
    double temperature = std::max(current, 1e-6);
    const int steps = static_cast<int>(200 * levels);
    for (int step = 0; step < steps; ++step) {
      const std::size_t i = static_cast<std::size_t>(gen.next_below(levels));
      std::size_t j = static_cast<std::size_t>(gen.next_below(levels));
      if (i == j) j = (j + 1) % levels;
      std::swap(phi[i], phi[j]);
      const double cand = cheap(phi, gen.next());
      const bool accept =
          cand <= current || gen.next_double() < std::exp((current - cand) / temperature);
      if (accept) {
        current = cand;
        if (cand < best_cheap) {
          best_cheap = cand;
          best_phi = phi;
        }
      } else {
        std::swap(phi[i], phi[j]);
      }
      temperature *= 0.998;
    }
  }

  std::vector<std::size_t> phi = best_phi;
  double current = polish_obj(phi, gen.next());
  for (int sweep = 0; sweep < 6; ++sweep) {
    bool improved = false;
    for (std::size_t i = 0; i < levels; ++i) {
      for (std::size_t j = i + 1; j < levels; ++j) {
        std::swap(phi[i], phi[j]);
        const double cand = polish_obj(phi, gen.next());
        if (cand < current - 1e-15) {
          current = cand;
          improved = true;
        } else {
          std::swap(phi[i], phi[j]);
        }
      }
    }
    if (!improved) break;
  }
  const double value =
      inner_exact ? permuted_diff_norm(v1, v2, phi, levels, true, 0) : current;
  return {value, false, inner_exact, levels};
}

StepKernel kernel_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("kernel JSON parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("block_measures") || !doc.contains("values")) {
    throw std::invalid_argument("kernel JSON must contain block_measures and values");
  }
  std::vector<double> measures = doc.at("block_measures").get<std::vector<double>>();
  auto rows = doc.at("values").get<std::vector<std::vector<double>>>();
  return StepKernel::from_rows(std::move(measures), rows);
}

StepKernel load_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kernel file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return kernel_from_json(buf.str());
}

std::string kernel_to_json(const StepKernel& kernel) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"block_measures\":[";
  for (std::size_t i = 0; i < kernel.block_count(); ++i) {
    if (i) os << ",";
    os << kernel.measure(i);
  }
  os << "],\"values\":[";
  for (std::size_t i = 0; i < kernel.block_count(); ++i) {
    if (i) os << ",";
    os << "[";
    for (std::size_t j = 0; j < kernel.block_count(); ++j) {
      if (j) os << ",";
      os << kernel.value(i, j);
    }
    os << "]";
  }
  os << "]}";
  return os.str();
}

}  // namespace perclim
