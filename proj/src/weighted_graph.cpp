#include "perclim/weighted_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "perclim/errors.hpp"
#include "perclim/power_iteration.hpp"
#include "perclim/rng.hpp"
#include "perclim/simd.hpp"

namespace perclim {

namespace {

constexpr std::size_t kDensifyLimit = 4096;  // n^2 doubles beyond this is not worth it

}  // namespace

WeightedGraph WeightedGraph::from_dense(std::size_t n, std::vector<double> beta) {
  if (beta.size() != n * n) throw std::invalid_argument("WeightedGraph: beta must be n x n");
  WeightedGraph g;
  g.n_ = n;
  g.backing_ = Backing::dense;
  g.dense_ = std::move(beta);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.dense_[i * n + i] != 0.0) {
      throw std::invalid_argument("WeightedGraph: diagonal must be zero");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = g.dense_[i * n + j];
      if (w != g.dense_[j * n + i]) {
        throw std::invalid_argument("WeightedGraph: beta must be symmetric");
      }
      if (!(w >= 0.0)) throw std::invalid_argument("WeightedGraph: weights must be >= 0");
      g.beta_max_ = std::max(g.beta_max_, w);
    }
  }
  return g;
}

WeightedGraph WeightedGraph::from_blocks(std::size_t n, std::vector<std::uint32_t> block_of,
                                         std::size_t block_count,
                                         std::vector<double> block_values,
                                         std::vector<double> types) {
  if (block_of.size() != n) throw std::invalid_argument("WeightedGraph: block_of size mismatch");
  if (block_values.size() != block_count * block_count) {
    throw std::invalid_argument("WeightedGraph: block_values must be m x m");
  }
  WeightedGraph g;
  g.n_ = n;
  g.backing_ = Backing::block;
  g.m_ = block_count;
  g.block_of_ = std::move(block_of);
  g.block_values_ = std::move(block_values);
  g.types_ = std::move(types);
  g.block_sizes_.assign(block_count, 0);
  g.contiguous_ = true;
  for (std::size_t v = 0; v < n; ++v) {
    const std::uint32_t b = g.block_of_[v];
    if (b >= block_count) throw std::invalid_argument("WeightedGraph: block index out of range");
    if (v > 0 && g.block_of_[v] < g.block_of_[v - 1]) g.contiguous_ = false;
    ++g.block_sizes_[b];
  }
  for (std::size_t a = 0; a < block_count; ++a) {
    for (std::size_t b = a; b < block_count; ++b) {
      const double w = g.block_values_[a * block_count + b];
      if (w != g.block_values_[b * block_count + a]) {
        throw std::invalid_argument("WeightedGraph: block values must be symmetric");
      }
      if (!(w >= 0.0)) throw std::invalid_argument("WeightedGraph: weights must be >= 0");
      // beta_max over pairs that exist in the realized matrix
      const bool realized = (a == b) ? g.block_sizes_[a] >= 2
                                     : g.block_sizes_[a] >= 1 && g.block_sizes_[b] >= 1;
      if (realized) g.beta_max_ = std::max(g.beta_max_, w);
    }
  }
  return g;
}

WeightedGraph WeightedGraph::densified() const {
  if (backing_ == Backing::dense) return *this;
  if (n_ > kDensifyLimit) {
    throw std::invalid_argument("densified: graph too large to materialize (n > " +
                                std::to_string(kDensifyLimit) + ")");
  }
  std::vector<double> beta(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (i != j) beta[i * n_ + j] = block_values_[block_of_[i] * m_ + block_of_[j]];
  return from_dense(n_, std::move(beta));
}

WeightedGraph complete_graph(std::size_t n) {
  if (n < 1) throw std::invalid_argument("complete_graph: n must be >= 1");
  return WeightedGraph::from_blocks(n, std::vector<std::uint32_t>(n, 0), 1, {1.0});
}

WeightedGraph blowup(const StepKernel& kernel, std::size_t n) {
  if (n < 1) throw std::invalid_argument("blowup: n must be >= 1");
  if (!kernel.nonnegative()) throw std::domain_error("blowup: kernel must be nonnegative");
  std::vector<std::uint32_t> block_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mid = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    block_of[i] = static_cast<std::uint32_t>(kernel.block_at(mid));
  }
  return WeightedGraph::from_blocks(n, std::move(block_of), kernel.block_count(),
                                    kernel.values());
}

WeightedGraph sample_dense(const StepKernel& kernel, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_dense: n must be >= 1");
  if (!kernel.nonnegative()) throw std::domain_error("sample_dense: kernel must be nonnegative");
  rng::SplitMix64 gen(seed);
  std::vector<std::uint32_t> block_of(n);
  std::vector<double> types(n);
  for (std::size_t i = 0; i < n; ++i) {
    types[i] = gen.next_double();
    block_of[i] = static_cast<std::uint32_t>(kernel.block_at(types[i]));
  }
  return WeightedGraph::from_blocks(n, std::move(block_of), kernel.block_count(),
                                    kernel.values(), std::move(types));
}

double weighted_degree(const WeightedGraph& g, std::size_t v) {
  if (v >= g.size()) throw std::invalid_argument("weighted_degree: vertex out of range");
  if (g.backing() == WeightedGraph::Backing::dense) {
    double acc = 0.0;
    for (double w : g.dense_row(v)) acc += w;
    return acc;
  }
  const std::size_t m = g.block_count();
  const std::uint32_t bv = g.block_of()[v];
  double acc = 0.0;
  for (std::size_t b = 0; b < m; ++b)
    acc += g.block_values()[bv * m + b] * static_cast<double>(g.block_sizes()[b]);
  acc -= g.block_values()[bv * m + bv];  // no self-loop
  return acc;
}

std::vector<double> weighted_degrees(const WeightedGraph& g) {
  std::vector<double> d(g.size());
  if (g.backing() == WeightedGraph::Backing::dense) {
    for (std::size_t v = 0; v < g.size(); ++v) {
      double acc = 0.0;
      for (double w : g.dense_row(v)) acc += w;
      d[v] = acc;
    }
    return d;
  }
  const std::size_t m = g.block_count();
  std::vector<double> per_block(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < m; ++b)
      acc += g.block_values()[a * m + b] * static_cast<double>(g.block_sizes()[b]);
    per_block[a] = acc;
  }
  for (std::size_t v = 0; v < g.size(); ++v) {
    const std::uint32_t bv = g.block_of()[v];
    d[v] = per_block[bv] - g.block_values()[bv * m + bv];
  }
  return d;
}

void adjacency_matvec(const WeightedGraph& g, const double* x, double* y) {
  const std::size_t n = g.size();
  if (g.backing() == WeightedGraph::Backing::dense) {
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = simd::dot(g.dense_values().data() + i * n, x, n);
    }
    return;
  }
  const std::size_t m = g.block_count();
  std::vector<double> block_sum(m, 0.0), inner(m, 0.0);
  for (std::size_t v = 0; v < n; ++v) block_sum[g.block_of()[v]] += x[v];
  for (std::size_t a = 0; a < m; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < m; ++b) acc += g.block_values()[a * m + b] * block_sum[b];
    inner[a] = acc;
  }
  for (std::size_t v = 0; v < n; ++v) {
    const std::uint32_t bv = g.block_of()[v];
    y[v] = inner[bv] - g.block_values()[bv * m + bv] * x[v];
  }
}

double top_eigenvalue(const WeightedGraph& g) {
  PowerIterationResult res = power_iteration(
      g.size(), [&](const double* x, double* y) { adjacency_matvec(g, x, y); }, 1e-10, 100000);
  if (!res.converged) {
    throw ConvergenceError("top_eigenvalue: power iteration did not converge", res.value);
  }
  return res.value;
}

double cut_weight(const WeightedGraph& g, std::span<const std::size_t> a,
                  std::span<const std::size_t> b) {
  double acc = 0.0;
  for (std::size_t v : a)
    for (std::size_t w : b) acc += g.beta(v, w);
  return acc;
}

namespace {

// e(v, X) for every v, from per-block membership counts when possible.
class CutTracker {
 public:
  explicit CutTracker(const WeightedGraph& g)
      : g_(g), in_(g.size(), 0), degrees_(weighted_degrees(g)), e_to_set_(g.size(), 0.0) {
    if (g.backing() == WeightedGraph::Backing::block) {
      count_in_.assign(g.block_count(), 0);
    }
  }

  double cut() const { return cut_; }
  std::size_t set_size() const { return size_; }
  bool contains(std::size_t v) const { return in_[v] != 0; }

  double e_to_set(std::size_t v) const {
    if (g_.backing() == WeightedGraph::Backing::dense) return e_to_set_[v];
    const std::size_t m = g_.block_count();
    const std::uint32_t bv = g_.block_of()[v];
    double acc = 0.0;
    for (std::size_t b = 0; b < m; ++b)
      acc += g_.block_values()[bv * m + b] * static_cast<double>(count_in_[b]);
    if (in_[v]) acc -= g_.block_values()[bv * m + bv];
    return acc;
  }

  // cut change if v were toggled, without applying it
  double toggle_gain(std::size_t v) const {
    const double ev = e_to_set(v);
    return in_[v] ? -(degrees_[v] - 2.0 * ev) : (degrees_[v] - 2.0 * ev);
  }

  void toggle(std::size_t v) {
    const double delta = toggle_gain(v);
    const bool was_in = in_[v] != 0;
    in_[v] = static_cast<char>(!was_in);
    size_ += was_in ? std::size_t(-1) : std::size_t(1);
    cut_ += delta;
    if (g_.backing() == WeightedGraph::Backing::block) {
      count_in_[g_.block_of()[v]] += was_in ? -1 : 1;
    } else {
      const double dir = was_in ? -1.0 : 1.0;
      const std::size_t n = g_.size();
      const double* row = g_.dense_values().data() + v * n;
      for (std::size_t w = 0; w < n; ++w) e_to_set_[w] += dir * row[w];
    }
  }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> xs;
    for (std::size_t v = 0; v < in_.size(); ++v)
      if (in_[v]) xs.push_back(v);
    return xs;
  }

 private:
  const WeightedGraph& g_;
  std::vector<char> in_;
  std::vector<double> degrees_;
  std::vector<double> e_to_set_;       // dense backing
  std::vector<std::int64_t> count_in_; // block backing
  double cut_ = 0.0;
  std::size_t size_ = 0;
};

std::optional<std::vector<std::size_t>> ab_cut_exact(const WeightedGraph& g, double a, double b) {
  const std::size_t n = g.size();
  const double budget = b * static_cast<double>(n) * static_cast<double>(n);
  const double lo = a * static_cast<double>(n);
  const double hi = (1.0 - a) * static_cast<double>(n);
  CutTracker tracker(g);
  const std::uint64_t states = 1ULL << n;
  for (std::uint64_t t = 1; t < states; ++t) {
    tracker.toggle(static_cast<std::size_t>(std::countr_zero(t)));
    const double size = static_cast<double>(tracker.set_size());
    if (size >= lo && size <= hi && tracker.cut() <= budget) return tracker.members();
  }
  return std::nullopt;
}

std::optional<std::vector<std::size_t>> ab_cut_heuristic(const WeightedGraph& g, double a,
                                                         double b) {
  const std::size_t n = g.size();
  const double budget = b * static_cast<double>(n) * static_cast<double>(n);
  const auto lo = static_cast<std::size_t>(std::ceil(a * static_cast<double>(n)));
  const auto hi = static_cast<std::size_t>(std::floor((1.0 - a) * static_cast<double>(n)));
  if (lo > hi || lo == 0) return std::nullopt;

  // Fiedler-style vector: power iteration on c*I - L deflated against the
  // all-ones vector.
  std::vector<double> degrees = weighted_degrees(g);
  const double dmax = *std::max_element(degrees.begin(), degrees.end());
  const double shift = 2.0 * dmax + 1.0;
  std::vector<double> x(n), y(n);
  rng::SplitMix64 gen(0xF1ED1E5EEDULL);
  for (double& v : x) v = gen.next_double() - 0.5;
  for (int it = 0; it < 200; ++it) {
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    for (double& v : x) v -= mean;
    double norm = std::sqrt(simd::dot(x.data(), x.data(), n));
    if (norm == 0.0) break;
    for (double& v : x) v /= norm;
    adjacency_matvec(g, x.data(), y.data());
    for (std::size_t i = 0; i < n; ++i) x[i] = shift * x[i] - (degrees[i] * x[i] - y[i]);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t u, std::size_t v) { return x[u] < x[v]; });

  CutTracker tracker(g);
  for (std::size_t i = 0; i < lo; ++i) tracker.toggle(order[i]);
  double best_cut = tracker.cut();
  std::size_t best_size = lo;
  for (std::size_t i = lo; i < hi; ++i) {
    tracker.toggle(order[i]);
    if (tracker.cut() < best_cut) {
      best_cut = tracker.cut();
      best_size = i + 1;
    }
  }
  while (tracker.set_size() > best_size) tracker.toggle(order[tracker.set_size() - 1]);

  // local moves: toggle any vertex that reduces the cut while staying in the
  // size window
  for (int pass = 0; pass < 4; ++pass) {
    bool improved = false;
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t next_size = tracker.set_size() + (tracker.contains(v) ? -1 : 1);
      if (next_size < lo || next_size > hi) continue;
      if (tracker.toggle_gain(v) < -1e-15) {
        tracker.toggle(v);
        improved = true;
      }
    }
    if (!improved) break;
  }
  if (tracker.cut() <= budget) return tracker.members();
  return std::nullopt;
}

}  // namespace

AbCutResult find_ab_cut(const WeightedGraph& g, double a, double b) {
  if (!(a > 0.0 && a <= 0.5)) throw std::invalid_argument("find_ab_cut: need 0 < a <= 0.5");
  if (!(b > 0.0)) throw std::invalid_argument("find_ab_cut: need b > 0");
  if (g.size() <= 24) return {ab_cut_exact(g, a, b), true};
  return {ab_cut_heuristic(g, a, b), false};
}

StepKernel empirical_graphon(const WeightedGraph& g) {
  const std::size_t n = g.size();
  if (n > kDensifyLimit) {
    throw std::invalid_argument("empirical_graphon: graph too large to materialize (n > " +
                                std::to_string(kDensifyLimit) + ")");
  }
  std::vector<double> values(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) values[i * n + j] = g.beta(i, j);
  return StepKernel(std::vector<double>(n, 1.0 / static_cast<double>(n)), std::move(values));
}

WeightedGraph load_graph_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  std::size_t n = 0;
  if (!(in >> n) || n == 0) throw std::runtime_error("graph file: bad vertex count");
  std::vector<double> beta(n * n, 0.0);
  std::size_t i, j;
  double w;
  while (in >> i >> j >> w) {
    if (i >= n || j >= n || i == j) throw std::runtime_error("graph file: bad edge entry");
    beta[i * n + j] = w;
    beta[j * n + i] = w;
  }
  WeightedGraph g = WeightedGraph::from_dense(n, std::move(beta));
  double total = 0.0;
  for (std::size_t v = 0; v < n; ++v) total += weighted_degree(g, v);
  const double avg_degree = total / static_cast<double>(n);
  if (avg_degree < 0.01 * static_cast<double>(n)) {
    std::cerr << "warning: " << path << " has average weighted degree " << avg_degree
              << " < 0.01 n; this library targets dense graphs\n";
  }
  return g;
}

void save_graph_text(const WeightedGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  out.precision(17);
  out << g.size() << "\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j)
      if (g.beta(i, j) != 0.0) out << i << " " << j << " " << g.beta(i, j) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

GeneratorSpec parse_generator(const nlohmann::json& doc) {
  GeneratorSpec spec;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "complete") {
    spec.kind = GeneratorSpec::Kind::complete;
  } else if (kind == "blowup") {
    spec.kind = GeneratorSpec::Kind::blowup;
  } else if (kind == "sample_dense") {
    spec.kind = GeneratorSpec::Kind::sample_dense;
  } else {
    throw std::invalid_argument("generator kind must be complete|blowup|sample_dense");
  }
  spec.n = doc.at("n").get<std::size_t>();
  if (doc.contains("kernel")) spec.kernel = kernel_from_json(doc.at("kernel").dump());
  if (doc.contains("seed")) spec.seed = doc.at("seed").get<std::uint64_t>();
  if (spec.kind != GeneratorSpec::Kind::complete && !spec.kernel.has_value()) {
    throw std::invalid_argument("generator kind '" + kind + "' requires a kernel");
  }
  return spec;
}

}  // namespace

GeneratorSpec generator_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("generator JSON parse error: ") + e.what());
  }
  try {
    return parse_generator(doc);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("generator config error: ") + e.what());
  }
}

WeightedGraph generate(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorSpec::Kind::complete:
      return complete_graph(spec.n);
    case GeneratorSpec::Kind::blowup:
      return blowup(*spec.kernel, spec.n);
    case GeneratorSpec::Kind::sample_dense:
      return sample_dense(*spec.kernel, spec.n, spec.seed);
  }
  throw std::logic_error("generate: unreachable");
}

}  // namespace perclim
