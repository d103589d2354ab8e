#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "perclim/harness.hpp"

namespace perclim {

namespace {

ExperimentKind kind_from_name(const std::string& name) {
  if (name == "threshold_scan" || name == "threshold-scan") return ExperimentKind::threshold_scan;
  if (name == "census" || name == "component_census") return ExperimentKind::component_census;
  if (name == "log_scaling" || name == "log-scaling") return ExperimentKind::log_scaling;
  if (name == "reducible_demo" || name == "reducible-demo") return ExperimentKind::reducible_demo;
  if (name == "branching_validation" || name == "branching-validate") {
    return ExperimentKind::branching_validation;
  }
  if (name == "convergence") return ExperimentKind::convergence;
  throw std::invalid_argument("unknown experiment kind: " + name);
}

}  // namespace

namespace {

ExperimentConfig parse_config(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  cfg.kind = kind_from_name(doc.at("experiment").get<std::string>());
  if (doc.contains("generator")) {
    cfg.generator = generator_from_json(doc.at("generator").dump());
  }
  if (doc.contains("kernel")) cfg.kernel = kernel_from_json(doc.at("kernel").dump());
  if (doc.contains("battery")) {
    for (const auto& item : doc.at("battery")) {
      cfg.battery.push_back(kernel_from_json(item.dump()));
    }
  }
  if (doc.contains("c_values")) cfg.c_values = doc.at("c_values").get<std::vector<double>>();
  if (doc.contains("n_values")) {
    cfg.n_values = doc.at("n_values").get<std::vector<std::size_t>>();
  }
  if (doc.contains("reps")) cfg.reps = doc.at("reps").get<int>();
  if (doc.contains("base_seed")) cfg.base_seed = doc.at("base_seed").get<std::uint64_t>();
  if (doc.contains("model")) cfg.model = doc.at("model").get<std::string>();
  if (cfg.model != "fixed" && cfg.model != "gnw") {
    throw std::invalid_argument("model must be 'fixed' or 'gnw'");
  }
  if (doc.contains("omega_rule")) cfg.omega_rule = doc.at("omega_rule").get<std::string>();
  if (doc.contains("alpha_grid")) cfg.alpha_grid = doc.at("alpha_grid").get<std::vector<double>>();
  if (doc.contains("patterns")) {
    for (const auto& item : doc.at("patterns")) {
      cfg.patterns.push_back(PatternGraph::parse(item.get<std::string>()));
    }
  }
  if (doc.contains("census_max_k")) cfg.census_max_k = doc.at("census_max_k").get<int>();
  if (doc.contains("census_check_k")) cfg.census_check_k = doc.at("census_check_k").get<int>();
  if (doc.contains("coarse_blocks")) cfg.coarse_blocks = doc.at("coarse_blocks").get<std::size_t>();
  if (doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    if (t.contains("census_nk")) cfg.tol.census_nk = t.at("census_nk").get<double>();
    if (t.contains("census_rho")) cfg.tol.census_rho = t.at("census_rho").get<double>();
    if (t.contains("c2_over_n")) cfg.tol.c2_over_n = t.at("c2_over_n").get<double>();
    if (t.contains("deviation")) cfg.tol.deviation = t.at("deviation").get<double>();
    if (t.contains("log_scaling_factor")) {
      cfg.tol.log_scaling_factor = t.at("log_scaling_factor").get<double>();
    }
    if (t.contains("c2_floor")) cfg.tol.c2_floor = t.at("c2_floor").get<double>();
  }
  if (doc.contains("mc")) {
    const auto& m = doc.at("mc");
    if (m.contains("escape_reps")) cfg.mc.escape_reps = m.at("escape_reps").get<int>();
    if (m.contains("escape_cap")) cfg.mc.escape_cap = m.at("escape_cap").get<std::int64_t>();
    if (m.contains("hist_reps")) cfg.mc.hist_reps = m.at("hist_reps").get<int>();
    if (m.contains("tail_reps")) cfg.mc.tail_reps = m.at("tail_reps").get<int>();
    if (m.contains("slow_iter_threshold")) {
      cfg.mc.slow_iter_threshold = m.at("slow_iter_threshold").get<int>();
    }
  }
  if (doc.contains("out")) cfg.out_path = doc.at("out").get<std::string>();

  if (cfg.reps < 1) throw std::invalid_argument("reps must be >= 1");
  for (double c : cfg.c_values) {
    if (!(c >= 0.0)) throw std::invalid_argument("c values must be >= 0");
  }
  for (std::size_t n : cfg.n_values) {
    if (n < 2) throw std::invalid_argument("n values must be >= 2");
  }
  return cfg;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config JSON parse error: ") + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config error: ") + e.what());
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

}  // namespace perclim
