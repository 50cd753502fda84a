// Batch runner: parse a sweep configuration, execute estimator grids with
// deterministic per-cell seeding, and emit CSV/JSON result tables.
//
// Cell seeds are derived from (master seed, estimator name, grid indices)
// with the v index deliberately left out, so cells that differ only in v
// share their draw sequence and the field scales exactly linearly along
// the v grid (common random numbers). Rows are written in grid order no
// matter how many workers run.
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pspin/estimators.hpp"
#include "pspin/field.hpp"
#include "pspin/sphere.hpp"
#include "pspin/testfunc.hpp"
#include "pspin/verify.hpp"
#include "pspin/version.hpp"

namespace pspin {

// --- measure sources ---------------------------------------------------

namespace detail {

inline std::vector<std::string> split_args(const std::string& inside) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : inside) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

// Named generator grammar: point_mass(N) | antipodal(N) | simplex(N) |
// random(N, M, seed). Returns nullopt when the string is not generator
// syntax (callers then treat it as a file path).
inline std::optional<DiscreteMeasure> parse_named_generator(const std::string& s) {
  const auto open = s.find('(');
  std::string name = s.substr(0, open);
  std::vector<std::string> args;
  if (open != std::string::npos) {
    const auto close = s.rfind(')');
    if (close == std::string::npos || close < open) return std::nullopt;
    args = detail::split_args(s.substr(open + 1, close - open - 1));
  }
  const auto arg_int = [&args](std::size_t i, int fallback) {
    return i < args.size() ? std::stoi(args[i]) : fallback;
  };
  if (name == "point_mass") return point_mass(arg_int(0, 2));
  if (name == "antipodal") return antipodal(arg_int(0, 2));
  if (name == "simplex") return simplex(arg_int(0, 2));
  if (name == "random") {
    if (args.size() != 3) throw std::invalid_argument("random(N,M,seed) takes three arguments");
    return random_measure(std::stoi(args[0]), std::stoi(args[1]), std::stoull(args[2]));
  }
  return std::nullopt;
}

inline DiscreteMeasure resolve_measure_source(const nlohmann::json& source, std::string* label) {
  if (source.is_object()) {
    if (label) *label = "inline";
    return measure_from_json(source);
  }
  if (!source.is_string())
    throw std::invalid_argument("measure source must be a generator string, a file path or an inline object");
  const auto s = source.get<std::string>();
  if (label) *label = s;
  if (auto gen = parse_named_generator(s)) return *gen;
  std::ifstream in(s);
  if (!in) throw std::invalid_argument("measure source '" + s + "' is neither a known generator nor a readable file");
  nlohmann::json j;
  in >> j;
  return measure_from_json(j);
}

// "monomial(d)" | "indicator_leq(t)" | "smoothed_indicator(t[,width])"
inline TestFunction parse_test_function(const std::string& s) {
  const auto open = s.find('(');
  const std::string name = s.substr(0, open);
  std::vector<std::string> args;
  if (open != std::string::npos) {
    const auto close = s.rfind(')');
    if (close != std::string::npos && close > open)
      args = detail::split_args(s.substr(open + 1, close - open - 1));
  }
  if (name == "monomial") return TestFunction::monomial(args.empty() ? 1 : std::stoi(args[0]));
  if (name == "indicator_leq")
    return TestFunction::indicator_leq(args.empty() ? -0.5 : std::stod(args[0]));
  if (name == "smoothed_indicator") {
    const double t = args.empty() ? -0.5 : std::stod(args[0]);
    const double w = args.size() > 1 ? std::stod(args[1]) : 0.05;
    return TestFunction::smoothed_indicator(t, w);
  }
  throw std::invalid_argument("unknown test function '" + s + "'");
}

// --- sweep configuration -----------------------------------------------

inline const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> kKnown = {
      "positivity", "gg_residual", "joint_event", "gp_coupling", "concentration", "sup_scaling", "witness"};
  return kKnown;
}

struct SweepConfig {
  nlohmann::json measure_source = "antipodal(8)";
  std::optional<DiscreteMeasure> measure;
  std::string measure_label;

  std::vector<double> v_grid;
  std::vector<double> eps_grid{0.2};
  std::vector<int> n_grid{2};

  int p_max = 12;
  Backend backend = Backend::covariance;
  double jitter = kDefaultJitter;
  int x_draws = 64;
  int g_draws = 256;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<std::string> estimators{"positivity"};
  int workers = 1;
  int gp_degree = 1;
  int attempts = 200;
  double l_cut = 3.0;
  std::string psi_name = "monomial(1)";

  FieldSpec spec_at(double v) const {
    FieldSpec s;
    s.v = v;
    s.p_max = p_max;
    s.backend = backend;
    s.jitter = jitter;
    return s;
  }

  ReplicationPlan plan() const { return ReplicationPlan{x_draws, g_draws}; }

  std::vector<std::string> validate() const {
    std::vector<std::string> errors;
    if (!measure) errors.push_back("measure: failed to resolve");
    if (v_grid.empty()) errors.push_back("v_grid: must be nonempty");
    for (double v : v_grid)
      if (!(v >= 0.0)) errors.push_back("v_grid: v must be >= 0");
    if (eps_grid.empty()) errors.push_back("eps_grid: must be nonempty");
    for (double e : eps_grid)
      if (!(e > 0.0 && e < 1.0)) errors.push_back("eps_grid: eps must be in (0,1)");
    if (n_grid.empty()) errors.push_back("n_grid: must be nonempty");
    for (int n : n_grid)
      if (n < 1) errors.push_back("n_grid: n must be >= 1");
    if (x_draws < 2 || g_draws < 1) errors.push_back("reps: need x_draws >= 2 and g_draws >= 1");
    if (p_max < 1 || p_max > kMaxPMax) errors.push_back("p_max: must be in [1,30]");
    if (!(jitter >= 0.0)) errors.push_back("jitter: must be >= 0");
    if (workers < 1) errors.push_back("workers: must be >= 1");
    if (attempts < 1) errors.push_back("attempts: must be >= 1");
    if (gp_degree < 1 || gp_degree > p_max) errors.push_back("gp_degree: must be in [1, p_max]");
    if (estimators.empty()) errors.push_back("estimators: must be nonempty");
    for (const auto& e : estimators) {
      bool known = false;
      for (const auto& k : known_estimators()) known = known || k == e;
      if (!known) errors.push_back("estimators: unknown estimator '" + e + "'");
    }
    try {
      parse_test_function(psi_name);
    } catch (const std::exception& ex) {
      errors.push_back(std::string("psi: ") + ex.what());
    }
    return errors;
  }
};

inline SweepConfig parse_sweep_config(const nlohmann::json& j) {
  SweepConfig c;
  if (j.contains("measure")) c.measure_source = j.at("measure");
  c.measure = resolve_measure_source(c.measure_source, &c.measure_label);
  if (j.contains("v_grid")) c.v_grid = j.at("v_grid").get<std::vector<double>>();
  if (j.contains("eps_grid")) c.eps_grid = j.at("eps_grid").get<std::vector<double>>();
  if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<int>>();
  if (j.contains("p_max")) c.p_max = j.at("p_max").get<int>();
  if (j.contains("backend")) c.backend = backend_from_string(j.at("backend").get<std::string>());
  if (j.contains("jitter")) c.jitter = j.at("jitter").get<double>();
  if (j.contains("reps")) {
    const auto& r = j.at("reps");
    if (r.is_object()) {
      if (r.contains("x_draws")) c.x_draws = r.at("x_draws").get<int>();
      if (r.contains("g_draws")) c.g_draws = r.at("g_draws").get<int>();
    } else {
      c.x_draws = r.get<int>();
    }
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  if (j.contains("estimators")) c.estimators = j.at("estimators").get<std::vector<std::string>>();
  if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  if (j.contains("gp_degree")) c.gp_degree = j.at("gp_degree").get<int>();
  if (j.contains("attempts")) c.attempts = j.at("attempts").get<int>();
  if (j.contains("l_cut")) c.l_cut = j.at("l_cut").get<double>();
  if (j.contains("psi")) c.psi_name = j.at("psi").get<std::string>();
  return c;
}

// Parse a config file; JSON syntax errors are reported with a line number.
inline SweepConfig parse_sweep_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw std::invalid_argument("config parse error at line " + std::to_string(line) + ": " + e.what());
  }
  return parse_sweep_config(j);
}

// --- sweep execution ----------------------------------------------------

namespace detail {

struct SweepCell {
  std::string estimator;
  int vi = -1;  // -1 means the whole v grid (sup_scaling)
  int ei = 0;
  int ni = 0;
  std::uint64_t cell_seed = 0;
};

inline std::vector<SweepCell> build_cells(const SweepConfig& c) {
  std::vector<SweepCell> cells;
  const auto key = [&c](const std::string& est, std::uint64_t a, std::uint64_t b) {
    return derive_seed(c.seed, {hash_str(est), a, b});
  };
  for (const auto& est : c.estimators) {
    if (est == "positivity" || est == "witness") {
      for (int ei = 0; ei < static_cast<int>(c.eps_grid.size()); ++ei)
        for (int vi = 0; vi < static_cast<int>(c.v_grid.size()); ++vi)
          cells.push_back({est, vi, ei, 0, key(est, 1000 + ei, 0)});
    } else if (est == "gg_residual" || est == "joint_event") {
      for (int ni = 0; ni < static_cast<int>(c.n_grid.size()); ++ni)
        for (int ei = 0; ei < static_cast<int>(c.eps_grid.size()); ++ei)
          for (int vi = 0; vi < static_cast<int>(c.v_grid.size()); ++vi)
            cells.push_back({est, vi, ei, ni, key(est, 1000 + ei, 2000 + ni)});
    } else if (est == "gp_coupling" || est == "concentration") {
      for (int vi = 0; vi < static_cast<int>(c.v_grid.size()); ++vi)
        cells.push_back({est, vi, 0, 0, key(est, 3000 + c.gp_degree, 0)});
    } else if (est == "sup_scaling") {
      cells.push_back({est, -1, 0, 0, key(est, 0, 0)});
    }
  }
  return cells;
}

struct CellOutcome {
  std::vector<EstimateReport> rows;
  std::vector<nlohmann::json> extra;  // witness certificates etc.
  std::string error;
};

inline CellOutcome run_cell(const SweepConfig& c, const SweepCell& cell) {
  CellOutcome out;
  const auto& G = *c.measure;
  try {
    if (cell.estimator == "positivity") {
      out.rows.push_back(estimate_positivity(G, c.spec_at(c.v_grid[cell.vi]), c.eps_grid[cell.ei],
                                             c.plan(), cell.cell_seed));
    } else if (cell.estimator == "joint_event") {
      out.rows.push_back(estimate_joint_event(G, c.spec_at(c.v_grid[cell.vi]), c.n_grid[cell.ni],
                                     c.eps_grid[cell.ei], c.plan(), cell.cell_seed));
    } else if (cell.estimator == "gg_residual") {
      const int n = c.n_grid[cell.ni];
      const double eps = c.eps_grid[cell.ei];
      const ReplicaPredicate f =
          n == 1 ? constant_one(1) : all_overlaps_with_first_leq(n, -eps);
      auto row = estimate_gg_residual(G, c.spec_at(c.v_grid[cell.vi]), n, f,
                                      parse_test_function(c.psi_name), c.plan(), cell.cell_seed);
      row.meta["epsilon"] = format_double(eps);
      out.rows.push_back(std::move(row));
    } else if (cell.estimator == "gp_coupling") {
      out.rows.push_back(
          estimate_gp_coupling(G, c.spec_at(c.v_grid[cell.vi]), c.gp_degree, c.plan(), cell.cell_seed));
    } else if (cell.estimator == "concentration") {
      ReplicationPlan plan = c.plan();
      plan.g_draws = std::max(plan.g_draws, 100);
      out.rows.push_back(
          estimate_concentration(G, c.spec_at(c.v_grid[cell.vi]), plan, cell.cell_seed));
    } else if (cell.estimator == "sup_scaling") {
      out.rows = estimate_sup_scaling(G, c.v_grid, c.spec_at(1.0), c.x_draws, cell.cell_seed);
    } else if (cell.estimator == "witness") {
      const double v = c.v_grid[cell.vi];
      const double eps = c.eps_grid[cell.ei];
      const auto result =
          find_good_perturbation({G}, c.spec_at(v), eps, c.attempts, cell.cell_seed, c.l_cut);
      EstimateReport row;
      row.estimator = "witness";
      row.mean = result.q_positivity;
      row.std_error = 0.0;
      row.reps = result.attempts_used;
      row.seed = cell.cell_seed;
      row.inner_mode = result.success ? "exact" : "error";
      row.meta["v"] = format_double(v);
      row.meta["epsilon"] = format_double(eps);
      row.meta["p_max"] = std::to_string(c.p_max);
      row.meta["backend"] = to_string(c.backend);
      row.meta["sup_abs"] = format_double(result.sup_abs);
      row.meta["l_cut"] = format_double(c.l_cut);
      out.rows.push_back(std::move(row));
      out.extra.push_back({{"estimator", "witness"},
                           {"v", v},
                           {"epsilon", eps},
                           {"success", result.success},
                           {"attempts_used", result.attempts_used},
                           {"q_positivity", result.q_positivity},
                           {"sup_abs", result.sup_abs}});
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    EstimateReport row;
    row.estimator = cell.estimator;
    row.mean = std::numeric_limits<double>::quiet_NaN();
    row.std_error = std::numeric_limits<double>::quiet_NaN();
    row.reps = 0;
    row.seed = cell.cell_seed;
    row.inner_mode = "error";
    if (cell.vi >= 0) row.meta["v"] = format_double(c.v_grid[cell.vi]);
    out.rows = {row};
  }
  return out;
}

}  // namespace detail

// Runs the configured grid and writes <out>/results.csv plus
// <out>/manifest.json. Returns 0 on success, 1 on invalid configuration,
// 3 when any cell failed at runtime (remaining cells still run).
inline int run_sweep(const SweepConfig& config, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto errors = config.validate();
  if (!errors.empty()) {
    for (const auto& e : errors) log << "config error: " << e << "\n";
    return 1;
  }

  const auto cells = detail::build_cells(config);
  std::vector<detail::CellOutcome> outcomes(cells.size());
  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(cells.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) outcomes[i] = detail::run_cell(config, cells[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          outcomes[i] = detail::run_cell(config, cells[i]);
        }
      });
    for (auto& t : pool) t.join();
  }

  std::filesystem::create_directories(config.out_dir);
  const auto csv_path = std::filesystem::path(config.out_dir) / "results.csv";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    csv << EstimateReport::csv_header() << "\n";
    for (const auto& o : outcomes)
      for (const auto& row : o.rows) csv << row.csv_row() << "\n";
  }

  int failed = 0;
  nlohmann::json extras = nlohmann::json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].error.empty()) {
      ++failed;
      log << "cell " << i << " (" << cells[i].estimator << ") failed: " << outcomes[i].error << "\n";
    }
    for (const auto& e : outcomes[i].extra) extras.push_back(e);
  }

  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  nlohmann::json manifest = {
      {"version", kVersion},
      {"wall_ms", wall_ms},
      {"cells", cells.size()},
      {"failed_cells", failed},
      {"config",
       {{"measure", config.measure_source},
        {"measure_label", config.measure_label},
        {"v_grid", config.v_grid},
        {"eps_grid", config.eps_grid},
        {"n_grid", config.n_grid},
        {"p_max", config.p_max},
        {"backend", to_string(config.backend)},
        {"jitter", config.jitter},
        {"reps", {{"x_draws", config.x_draws}, {"g_draws", config.g_draws}}},
        {"seed", config.seed},
        {"estimators", config.estimators},
        {"workers", config.workers},
        {"gp_degree", config.gp_degree},
        {"attempts", config.attempts},
        {"l_cut", config.l_cut},
        {"psi", config.psi_name}}}};
  if (!extras.empty()) manifest["witness_results"] = extras;
  {
    std::ofstream mf(std::filesystem::path(config.out_dir) / "manifest.json", std::ios::binary);
    mf << manifest.dump(2) << "\n";
  }

  log << "wrote " << csv_path.string() << " (" << cells.size() << " cells, " << failed
      << " failed, " << wall_ms << " ms)\n";
  return failed == 0 ? 0 : 3;
}

// Demo configuration: the adversarial antipodal pair, a v grid spanning
// the crossover, positivity and identity-residual tables.
inline nlohmann::json demo_config() {
  return {{"measure", "antipodal(8)"},
          {"v_grid", {0.0, 1.0, 2.0, 5.0, 10.0, 20.0}},
          {"eps_grid", {0.2, 0.5}},
          {"n_grid", {1, 2}},
          {"p_max", 12},
          {"backend", "covariance"},
          {"reps", {{"x_draws", 64}, {"g_draws", 256}}},
          {"seed", 20250811},
          {"estimators", {"positivity", "gg_residual", "sup_scaling"}},
          {"psi", "monomial(1)"}};
}

}  // namespace pspin
