#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perclim/homdensity.hpp"
#include "perclim/percolation.hpp"
#include "perclim/step_kernel.hpp"
#include "perclim/weighted_graph.hpp"

namespace perclim {

enum class ExperimentKind {
  threshold_scan,
  component_census,
  log_scaling,
  reducible_demo,
  branching_validation,
  convergence,
};

// Tunables with documented defaults; every threshold that feeds a pass/fail
// lives here, in the config, never in the runner.
struct Tolerances {
  double census_nk = 0.01;       // |mean N_k/n - P(|X|=k)| for k <= census_check_k
  double census_rho = 0.02;      // |mean N_>omega/n - rho|
  double c2_over_n = 0.03;       // reducible demo vs the per-part fixed point
  double deviation = 0.05;       // convergence diagnostics at the largest n
  double log_scaling_factor = 2.0;  // p95 at n_max <= factor * p95 at n_min
  double c2_floor = 0.05;        // reducible demo: mean C2/n at every n
};

struct McSettings {
  int escape_reps = 5000;        // fixed point vs Monte Carlo escape fraction
  std::int64_t escape_cap = 5000;
  int hist_reps = 20000;         // point-mass histogram
  int tail_reps = 200000;        // subcritical tail scan
  int slow_iter_threshold = 1000;  // flag near-critical fixed points
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::threshold_scan;
  std::optional<GeneratorSpec> generator;
  std::optional<StepKernel> kernel;
  std::vector<StepKernel> battery;
  std::vector<double> c_values;
  std::vector<std::size_t> n_values;
  int reps = 20;
  std::uint64_t base_seed = 1;
  std::string model = "fixed";      // fixed graph + per-pair sampler, or "gnw"
  std::string omega_rule = "log2";  // log | log2 | n14
  std::vector<double> alpha_grid;
  std::vector<PatternGraph> patterns;
  int census_max_k = 8;
  int census_check_k = 6;
  std::size_t coarse_blocks = 12;
  Tolerances tol;
  McSettings mc;
  std::string out_path;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// ---- reports ---------------------------------------------------------------

struct Cell {
  enum class Kind { number, integer, text };
  Kind kind = Kind::number;
  double num = 0.0;
  std::int64_t ival = 0;
  std::string text;

  static Cell of(double v) { return {Kind::number, v, 0, {}}; }
  static Cell of_int(std::int64_t v) { return {Kind::integer, 0.0, v, {}}; }
  static Cell of_text(std::string s) { return {Kind::text, 0.0, 0, std::move(s)}; }
  std::string rendered() const;
};

// No bare booleans: every check names its oracle, measurement, tolerance and
// seed count.
struct Check {
  std::string name;
  double measured = 0.0;
  double oracle = 0.0;
  double tolerance = 0.0;
  int seeds = 0;
  bool pass = false;
  std::string note;
};

struct Report {
  std::string experiment;
  std::uint64_t base_seed = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> meta;

  bool passed() const;
  void add_row(std::vector<Cell> cells) { rows.push_back(std::move(cells)); }
};

enum class EmitFormat { csv, json, plotdata };

EmitFormat emit_format_from_name(const std::string& name);
std::string render(const Report& report, EmitFormat format);
void emit(const Report& report, const std::string& path, EmitFormat format);

// ---- runners ---------------------------------------------------------------

Report run_threshold_scan(const ExperimentConfig& cfg);
Report run_component_census(const ExperimentConfig& cfg);
Report run_log_scaling(const ExperimentConfig& cfg);
Report run_reducible_demo(const ExperimentConfig& cfg);
Report run_branching_validation(const ExperimentConfig& cfg);
Report run_convergence(const ExperimentConfig& cfg);

Report run_experiment(const ExperimentConfig& cfg);

// The limiting kernel of a generator family (constant 1 for complete graphs).
StepKernel limit_kernel(const GeneratorSpec& spec);

// omega(n) under a named rule: log -> ceil(ln n), log2 -> ceil((ln n)^2),
// n14 -> ceil(n^(1/4)).
std::int64_t omega_of(const std::string& rule, std::size_t n);

}  // namespace perclim
