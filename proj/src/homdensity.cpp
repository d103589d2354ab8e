#include "perclim/homdensity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "perclim/format.hpp"
#include "perclim/simd.hpp"
#include "perclim/union_find.hpp"

namespace perclim {

namespace {

constexpr int kMaxPatternVertices = 10;
constexpr double kOpBudget = 1e9;

}  // namespace

PatternGraph PatternGraph::from_edges(int k, std::vector<std::pair<int, int>> edges) {
  if (k < 1) throw std::invalid_argument("PatternGraph: k must be >= 1");
  if (k > kMaxPatternVertices) {
    throw std::invalid_argument("PatternGraph: at most " +
                                std::to_string(kMaxPatternVertices) + " vertices");
  }
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
    if (a == b) throw std::invalid_argument("PatternGraph: loops are not allowed");
    if (a < 0 || b >= k) throw std::invalid_argument("PatternGraph: edge endpoint out of range");
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw std::invalid_argument("PatternGraph: duplicate edge");
  }
  PatternGraph p;
  p.k = k;
  p.edges = std::move(edges);
  return p;
}

PatternGraph pattern_edge() { return PatternGraph::from_edges(2, {{0, 1}}); }

PatternGraph pattern_path(int vertices) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < vertices; ++i) edges.emplace_back(i, i + 1);
  return PatternGraph::from_edges(vertices, std::move(edges));
}

PatternGraph pattern_triangle() { return PatternGraph::from_edges(3, {{0, 1}, {0, 2}, {1, 2}}); }

PatternGraph double_star(int t1, int t2) {
  if (t1 < 0 || t2 < 0) throw std::invalid_argument("double_star: negative pendant count");
  const int k = t1 + t2 + 2;
  if (k > kMaxPatternVertices) throw std::invalid_argument("double_star: too many vertices");
  std::vector<std::pair<int, int>> edges{{0, 1}};
  int next = 2;
  for (int i = 0; i < t1; ++i) edges.emplace_back(0, next++);
  for (int i = 0; i < t2; ++i) edges.emplace_back(1, next++);
  return PatternGraph::from_edges(k, std::move(edges));
}

PatternGraph disjoint_union(const PatternGraph& a, const PatternGraph& b) {
  std::vector<std::pair<int, int>> edges = a.edges;
  for (auto [u, v] : b.edges) edges.emplace_back(u + a.k, v + a.k);
  return PatternGraph::from_edges(a.k + b.k, std::move(edges));
}

PatternGraph PatternGraph::parse(const std::string& text) {
  if (text == "edge") return pattern_edge();
  if (text == "path3") return pattern_path(3);
  if (text == "path4") return pattern_path(4);
  if (text == "triangle") return pattern_triangle();
  if (text.size() == 3 && text[0] == 's' && std::isdigit(static_cast<unsigned char>(text[1])) &&
      std::isdigit(static_cast<unsigned char>(text[2]))) {
    return double_star(text[1] - '0', text[2] - '0');
  }
  // canonical edge list "a-b;c-d"
  std::vector<std::pair<int, int>> edges;
  int maxv = 0;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    const std::size_t dash = item.find('-');
    if (dash == std::string::npos) {
      throw std::invalid_argument("PatternGraph: cannot parse '" + text + "'");
    }
    const int a = std::stoi(item.substr(0, dash));
    const int b = std::stoi(item.substr(dash + 1));
    maxv = std::max({maxv, a, b});
    edges.emplace_back(a, b);
  }
  if (edges.empty()) throw std::invalid_argument("PatternGraph: empty pattern '" + text + "'");
  return from_edges(maxv + 1, std::move(edges));
}

std::string PatternGraph::name() const {
  if (edges.empty()) return "empty" + std::to_string(k);
  std::string s;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(edges[i].first) + "-" + std::to_string(edges[i].second);
  }
  return s;
}

bool PatternGraph::is_forest() const {
  UnionFind uf(static_cast<std::size_t>(k));
  for (auto [a, b] : edges) {
    if (!uf.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b))) return false;
  }
  return true;
}

namespace {

struct Component {
  std::vector<int> vertices;                // original labels
  std::vector<std::pair<int, int>> edges;   // local labels
  bool is_tree = false;
  bool is_triangle = false;
};

std::vector<Component> split_components(const PatternGraph& pattern) {
  UnionFind uf(static_cast<std::size_t>(pattern.k));
  for (auto [a, b] : pattern.edges)
    uf.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  std::vector<int> comp_of(static_cast<std::size_t>(pattern.k), -1);
  std::vector<Component> comps;
  std::vector<int> local(static_cast<std::size_t>(pattern.k), -1);
  for (int v = 0; v < pattern.k; ++v) {
    const std::size_t root = uf.find(static_cast<std::size_t>(v));
    if (comp_of[root] < 0) {
      comp_of[root] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    Component& c = comps[static_cast<std::size_t>(comp_of[root])];
    local[static_cast<std::size_t>(v)] = static_cast<int>(c.vertices.size());
    c.vertices.push_back(v);
  }
  for (auto [a, b] : pattern.edges) {
    Component& c =
        comps[static_cast<std::size_t>(comp_of[uf.find(static_cast<std::size_t>(a))])];
    c.edges.emplace_back(local[static_cast<std::size_t>(a)], local[static_cast<std::size_t>(b)]);
  }
  for (Component& c : comps) {
    const std::size_t kc = c.vertices.size();
    c.is_tree = c.edges.size() == kc - 1;
    c.is_triangle = kc == 3 && c.edges.size() == 3;
  }
  return comps;
}

// children lists of the component tree rooted at local vertex 0, in
// post-order (children before parents)
struct TreeOrder {
  std::vector<int> order;                  // post-order
  std::vector<std::vector<int>> children;  // per local vertex
};

TreeOrder tree_order(const Component& comp) {
  const std::size_t kc = comp.vertices.size();
  std::vector<std::vector<int>> adj(kc);
  for (auto [a, b] : comp.edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  TreeOrder t;
  t.children.resize(kc);
  std::vector<int> stack{0};
  std::vector<char> seen(kc, 0);
  seen[0] = 1;
  std::vector<int> bfs;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    bfs.push_back(u);
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        t.children[static_cast<std::size_t>(u)].push_back(w);
        stack.push_back(w);
      }
    }
  }
  t.order.assign(bfs.rbegin(), bfs.rend());
  return t;
}

void check_budget(double ops, const std::string& what) {
  if (ops > kOpBudget) {
    throw std::invalid_argument(what + ": operation budget exceeded (" + format_double(ops) +
                                " > 1e9 elementary operations)");
  }
}

// ---- graph side -----------------------------------------------------------

double tree_density_graph(const Component& comp, const WeightedGraph& g) {
  const std::size_t n = g.size();
  const TreeOrder t = tree_order(comp);
  std::vector<std::vector<double>> f(comp.vertices.size());
  std::vector<double> scratch(n);
  for (int u : t.order) {
    auto& fu = f[static_cast<std::size_t>(u)];
    fu.assign(n, 1.0);
    for (int c : t.children[static_cast<std::size_t>(u)]) {
      adjacency_matvec(g, f[static_cast<std::size_t>(c)].data(), scratch.data());
      for (std::size_t v = 0; v < n; ++v) fu[v] *= scratch[v];
      f[static_cast<std::size_t>(c)].clear();
    }
  }
  double value = 0.0;
  for (double v : f[0]) value += v;
  return value / std::pow(static_cast<double>(n), static_cast<double>(comp.vertices.size()));
}

double triangle_density_graph(const WeightedGraph& g) {
  const std::size_t n = g.size();
  if (g.backing() == WeightedGraph::Backing::block) {
    // sum over block triples with the coincidence terms removed (the zero
    // diagonal kills adjacent-equal maps)
    const std::size_t m = g.block_count();
    const auto& val = g.block_values();
    const auto& cnt = g.block_sizes();
    double hom = 0.0;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        for (std::size_t c = 0; c < m; ++c) {
          const double w = val[a * m + b] * val[b * m + c] * val[c * m + a];
          if (w == 0.0) continue;
          const double na = static_cast<double>(cnt[a]);
          const double nb = static_cast<double>(cnt[b]);
          const double nc = static_cast<double>(cnt[c]);
          double tuples = na * nb * nc;
          if (a == b) tuples -= na * nc;
          if (b == c) tuples -= na * nb;
          if (a == c) tuples -= na * nb;
          if (a == b && b == c) tuples += 2.0 * na;
          hom += w * tuples;
        }
    return hom / std::pow(static_cast<double>(n), 3.0);
  }
  check_budget(static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(n),
               "t_graph(triangle)");
  std::vector<double> w(n);
  double hom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = g.dense_values().data() + i * n;
    adjacency_matvec(g, row, w.data());
    hom += simd::dot(w.data(), row, n);
  }
  return hom / std::pow(static_cast<double>(n), 3.0);
}

double generic_density_graph(const Component& comp, const WeightedGraph& g) {
  const std::size_t n = g.size();
  const std::size_t kc = comp.vertices.size();
  check_budget(std::pow(static_cast<double>(n), static_cast<double>(kc)) *
                   static_cast<double>(comp.edges.size() + 1),
               "t_graph");
  // edges into the already-assigned prefix, per vertex
  std::vector<std::vector<int>> back_edges(kc);
  for (auto [a, b] : comp.edges) back_edges[static_cast<std::size_t>(std::max(a, b))].push_back(std::min(a, b));
  std::vector<std::size_t> assign(kc, 0);
  double hom = 0.0;
  auto recurse = [&](auto&& self, std::size_t v, double partial) -> void {
    if (partial == 0.0) return;
    if (v == kc) {
      hom += partial;
      return;
    }
    for (std::size_t x = 0; x < n; ++x) {
      assign[v] = x;
      double p = partial;
      for (int u : back_edges[v]) p *= g.beta(assign[static_cast<std::size_t>(u)], x);
      self(self, v + 1, p);
    }
  };
  recurse(recurse, 0, 1.0);
  return hom / std::pow(static_cast<double>(n), static_cast<double>(kc));
}

// ---- kernel side ----------------------------------------------------------

double tree_density_kernel(const Component& comp, const StepKernel& kernel) {
  const std::size_t m = kernel.block_count();
  const TreeOrder t = tree_order(comp);
  std::vector<std::vector<double>> f(comp.vertices.size());
  std::vector<double> scratch(m);
  for (int u : t.order) {
    auto& fu = f[static_cast<std::size_t>(u)];
    fu.assign(m, 1.0);
    for (int c : t.children[static_cast<std::size_t>(u)]) {
      const auto& fc = f[static_cast<std::size_t>(c)];
      for (std::size_t a = 0; a < m; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < m; ++b) acc += kernel.measure(b) * kernel.value(a, b) * fc[b];
        scratch[a] = acc;
      }
      for (std::size_t a = 0; a < m; ++a) fu[a] *= scratch[a];
      f[static_cast<std::size_t>(c)].clear();
    }
  }
  double value = 0.0;
  for (std::size_t a = 0; a < m; ++a) value += kernel.measure(a) * f[0][a];
  return value;
}

double generic_density_kernel(const Component& comp, const StepKernel& kernel) {
  const std::size_t m = kernel.block_count();
  const std::size_t kc = comp.vertices.size();
  check_budget(std::pow(static_cast<double>(m), static_cast<double>(kc)) *
                   static_cast<double>(comp.edges.size() + 1),
               "t_kernel");
  std::vector<std::vector<int>> back_edges(kc);
  for (auto [a, b] : comp.edges) back_edges[static_cast<std::size_t>(std::max(a, b))].push_back(std::min(a, b));
  std::vector<std::size_t> assign(kc, 0);
  double total = 0.0;
  auto recurse = [&](auto&& self, std::size_t v, double partial) -> void {
    if (partial == 0.0) return;
    if (v == kc) {
      total += partial;
      return;
    }
    for (std::size_t b = 0; b < m; ++b) {
      assign[v] = b;
      double p = partial * kernel.measure(b);
      for (int u : back_edges[v]) p *= kernel.value(assign[static_cast<std::size_t>(u)], b);
      self(self, v + 1, p);
    }
  };
  recurse(recurse, 0, 1.0);
  return total;
}

}  // namespace

double t_graph(const PatternGraph& pattern, const WeightedGraph& g) {
  double density = 1.0;
  for (const Component& comp : split_components(pattern)) {
    if (comp.vertices.size() == 1) continue;  // isolated vertex contributes n/n
    if (comp.is_tree) {
      density *= tree_density_graph(comp, g);
    } else if (comp.is_triangle) {
      density *= triangle_density_graph(g);
    } else {
      density *= generic_density_graph(comp, g);
    }
  }
  return density;
}

double t_kernel(const PatternGraph& pattern, const StepKernel& kernel) {
  double density = 1.0;
  for (const Component& comp : split_components(pattern)) {
    if (comp.vertices.size() == 1) continue;
    if (comp.is_tree) {
      density *= tree_density_kernel(comp, kernel);
    } else {
      density *= generic_density_kernel(comp, kernel);
    }
  }
  return density;
}

double joint_moment(const WeightedGraph& g, int t1, int t2) {
  if (t1 < 0 || t2 < 0) throw std::invalid_argument("joint_moment: negative exponent");
  if (t1 + t2 + 2 > kMaxPatternVertices) {
    throw std::invalid_argument("joint_moment: t1 + t2 + 2 must be <= 10");
  }
  const std::size_t n = g.size();
  const std::vector<double> d = weighted_degrees(g);
  std::vector<double> dw(n), u(n);
  for (std::size_t w = 0; w < n; ++w) dw[w] = std::pow(d[w], static_cast<double>(t2));
  adjacency_matvec(g, dw.data(), u.data());
  double sum = 0.0;
  for (std::size_t v = 0; v < n; ++v) sum += std::pow(d[v], static_cast<double>(t1)) * u[v];
  return sum / std::pow(static_cast<double>(n), static_cast<double>(t1 + t2 + 2));
}

double expected_n2_limit(const StepKernel& kernel) {
  if (!kernel.nonnegative()) throw std::domain_error("expected_n2_limit: kernel must be nonnegative");
  const std::size_t m = kernel.block_count();
  const BlockFunction lambda = degree_function(kernel);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      sum += kernel.measure(i) * kernel.measure(j) * kernel.value(i, j) *
             std::exp(-lambda[i] - lambda[j]);
  return sum;
}

ConvergenceDiagnostic convergence_diagnostic(const std::vector<const WeightedGraph*>& sequence,
                                             const StepKernel& kernel,
                                             const std::vector<PatternGraph>& patterns,
                                             std::size_t max_coarse_blocks) {
  ConvergenceDiagnostic diag;
  max_coarse_blocks = std::min<std::size_t>(max_coarse_blocks, 60);
  // largest equal grid compatible with the target kernel's boundaries
  std::size_t levels = 0;
  for (std::size_t cand = max_coarse_blocks; cand >= 1; --cand) {
    bool ok = true;
    for (std::size_t i = 1; i < kernel.block_count() && ok; ++i) {
      const double scaled = kernel.boundary(i) * static_cast<double>(cand);
      ok = std::abs(scaled - std::round(scaled)) <= 1e-9 * static_cast<double>(cand);
    }
    if (ok) {
      levels = cand;
      break;
    }
  }

  for (const WeightedGraph* g : sequence) {
    for (const PatternGraph& pattern : patterns) {
      DiagnosticRow row;
      row.n = g->size();
      row.pattern = pattern.name();
      row.t_graph = t_graph(pattern, *g);
      row.t_kernel = t_kernel(pattern, kernel);
      row.abs_dev = std::abs(row.t_graph - row.t_kernel);
      diag.rows.push_back(std::move(row));
    }
    CutProxyRow proxy;
    proxy.n = g->size();
    proxy.coarse_blocks = levels;
    if (levels > 0) {
      const StepKernel coarse = coarsen_equal(empirical_graphon(*g), levels);
      const CutDistanceResult dist = cut_distance(coarse, kernel);
      proxy.distance = dist.value;
      proxy.exact_search = dist.exact;
    }
    diag.cut_rows.push_back(proxy);
  }
  return diag;
}

std::string ConvergenceDiagnostic::to_csv() const {
  std::ostringstream os;
  os << "n,pattern,t_graph,t_kernel,abs_dev\n";
  for (const DiagnosticRow& row : rows) {
    os << row.n << "," << row.pattern << "," << format_double(row.t_graph) << ","
       << format_double(row.t_kernel) << "," << format_double(row.abs_dev) << "\n";
  }
  return os.str();
}

}  // namespace perclim
