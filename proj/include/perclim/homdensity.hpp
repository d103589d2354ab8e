#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perclim/step_kernel.hpp"
#include "perclim/weighted_graph.hpp"

namespace perclim {

// Simple pattern graph F for homomorphism densities. At most 10 vertices
// (t(F, G) costs n^k in the generic case).
struct PatternGraph {
  int k = 1;
  std::vector<std::pair<int, int>> edges;  // i < j, sorted, no duplicates

  static PatternGraph from_edges(int k, std::vector<std::pair<int, int>> edges);
  // "0-1;1-2" style canonical edge list, or one of the aliases
  // edge | path3 | path4 | triangle | s<t1><t2> (double star).
  static PatternGraph parse(const std::string& text);

  // canonical edge-list name, e.g. "0-1;1-2"
  std::string name() const;
  bool is_forest() const;
};

PatternGraph pattern_edge();
PatternGraph pattern_path(int vertices);
PatternGraph pattern_triangle();
PatternGraph disjoint_union(const PatternGraph& a, const PatternGraph& b);

// Double star S_{t1,t2}: an edge with t1 pendant edges on one end and t2 on
// the other; S_{0,0} is a single edge. Requires t1 + t2 + 2 <= 10.
PatternGraph double_star(int t1, int t2);

// Homomorphism density t(F, G) = n^{-k} sum over all vertex maps of the
// product of edge weights (maps need not be injective). Forest components run
// through an O(k n^2) dynamic program, triangles through the closed-walk
// count; anything else enumerates and throws when the operation count would
// exceed 1e9.
double t_graph(const PatternGraph& pattern, const WeightedGraph& g);

// t(F, W) for a step kernel, by the same strategies on the block matrix.
double t_kernel(const PatternGraph& pattern, const StepKernel& kernel);

// (t1, t2, 1) joint moment of (d_v/n, d_w/n, beta_vw) over uniform vertex
// pairs: n^{-(t1+t2+2)} sum_{v,w} d_v^{t1} d_w^{t2} beta_vw. Computed from
// degrees, independently of t_graph. Equals t(S_{t1,t2}, G).
double joint_moment(const WeightedGraph& g, int t1, int t2);

// Limit of N_2/n: sum_{ij} mu_i mu_j V_ij exp(-lambda_i - lambda_j); equals
// the two-vertex point mass of the branching process.
double expected_n2_limit(const StepKernel& kernel);

struct DiagnosticRow {
  std::size_t n = 0;
  std::string pattern;
  double t_graph = 0.0;
  double t_kernel = 0.0;
  double abs_dev = 0.0;
};

struct CutProxyRow {
  std::size_t n = 0;
  std::optional<double> distance;  // empty if the grids were incommensurable
  std::size_t coarse_blocks = 0;
  bool exact_search = false;       // the coarsening makes this a proxy regardless
};

struct ConvergenceDiagnostic {
  std::vector<DiagnosticRow> rows;
  std::vector<CutProxyRow> cut_rows;

  // header "n,pattern,t_graph,t_kernel,abs_dev"
  std::string to_csv() const;
};

// Deviation table |t(F, G_n) - t(F, W)| per (n, F), plus the cut-distance
// proxy: empirical graphon coarsened onto an equal grid of at most
// max_coarse_blocks blocks compatible with W's boundaries (heuristic
// estimator, labeled as such).
ConvergenceDiagnostic convergence_diagnostic(const std::vector<const WeightedGraph*>& sequence,
                                             const StepKernel& kernel,
                                             const std::vector<PatternGraph>& patterns,
                                             std::size_t max_coarse_blocks = 12);

}  // namespace perclim
