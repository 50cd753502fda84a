// The deterministic verification suite behind the CLI --verify flag: the
// analytic inequality checks over seeded corpora, plus the v = 0
// exactness checks of the Monte-Carlo layer. Everything here is seeded
// with fixed constants so two runs print byte-identical summaries.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "pspin/estimators.hpp"
#include "pspin/sphere.hpp"
#include "pspin/verify.hpp"

namespace pspin {

struct SuiteLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct NamedConvexFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> df;
};

inline std::vector<NamedConvexFunction> convex_function_corpus() {
  std::vector<NamedConvexFunction> fns;
  const auto quad = [](double a, double b, double c) {
    return NamedConvexFunction{"quad", [a, b, c](double x) { return a * (x - b) * (x - b) + c; },
                               [a, b](double x) { return 2.0 * a * (x - b); }};
  };
  const auto expf = [](double k) {
    return NamedConvexFunction{"exp", [k](double x) { return std::exp(k * x); },
                               [k](double x) { return k * std::exp(k * x); }};
  };
  const auto softplus = [](double k) {
    return NamedConvexFunction{"softplus",
                               [k](double x) { return std::log1p(std::exp(-std::abs(k * x))) +
                                                      std::max(k * x, 0.0); },
                               [k](double x) { return k / (1.0 + std::exp(-k * x)); }};
  };
  const auto smooth_abs = [](double tau) {
    return NamedConvexFunction{"smooth_abs",
                               [tau](double x) { return std::sqrt(x * x + tau); },
                               [tau](double x) { return x / std::sqrt(x * x + tau); }};
  };
  fns.push_back(quad(1.0, 0.0, 0.0));
  fns.push_back(quad(0.5, 0.3, -1.0));
  fns.push_back(quad(2.0, -0.7, 0.2));
  fns.push_back(quad(0.5, 0.0, 1.0));
  fns.push_back(expf(0.5));
  fns.push_back(expf(-0.4));
  fns.push_back(expf(1.0));
  fns.push_back(softplus(1.0));
  fns.push_back(softplus(2.0));
  fns.push_back(smooth_abs(1e-4));
  fns.push_back(smooth_abs(0.01));
  fns.push_back({"cosh", [](double x) { return std::cosh(0.8 * x); },
                 [](double x) { return 0.8 * std::sinh(0.8 * x); }});
  fns.push_back({"cosh", [](double x) { return std::cosh(1.5 * x); },
                 [](double x) { return 1.5 * std::sinh(1.5 * x); }});
  fns.push_back({"quartic", [](double x) { return x * x * x * x + 0.1 * x * x; },
                 [](double x) { return 4.0 * x * x * x + 0.2 * x; }});
  fns.push_back({"quartic", [](double x) { return x * x * x * x + x * x; },
                 [](double x) { return 4.0 * x * x * x + 2.0 * x; }});
  fns.push_back({"cube_abs", [](double x) { return std::abs(x) * x * x; },
                 [](double x) { return 3.0 * x * std::abs(x); }});
  fns.push_back({"logsumexp", [](double x) { return std::log(std::exp(x) + std::exp(-x)); },
                 [](double x) { return std::tanh(x); }});
  return fns;
}

// At least 20 convex pairs; a few drop their closed-form derivatives to
// exercise the finite-difference path.
inline std::vector<ScalarFunctionPair> convex_pair_corpus() {
  const auto fns = convex_function_corpus();
  std::vector<ScalarFunctionPair> pairs;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const auto& a = fns[i];
    const auto& b = fns[(i + 3) % fns.size()];
    pairs.push_back({a.f, b.f, a.df, b.df});
  }
  for (std::size_t i = 0; i < 4; ++i) pairs.push_back({fns[i].f, fns[i].f, fns[i].df, fns[i].df});
  // finite-difference derivatives
  pairs.push_back({fns[9].f, fns[0].f, nullptr, nullptr});
  pairs.push_back({fns[16].f, fns[4].f, nullptr, nullptr});
  return pairs;
}

inline SuiteLine run_convexity_suite() {
  const auto pairs = convex_pair_corpus();
  int total = 0, failed = 0;
  double worst = std::numeric_limits<double>::infinity();
  const double ys[3] = {0.25, 0.5, 1.0};
  for (const auto& pair : pairs) {
    for (int k = 0; k < 50; ++k) {
      const double x = -2.0 + 4.0 * k / 49.0;
      const double y = ys[k % 3];
      const auto rep = check_convex_derivative_bound(pair, x, y);
      ++total;
      if (!rep.pass) ++failed;
      worst = std::min(worst, rep.rhs - rep.lhs);
    }
  }
  return {"convex_derivative_bound",
          failed == 0,
          std::to_string(total - failed) + "/" + std::to_string(total) +
              " probes, min slack " + format_double(worst)};
}

inline SuiteLine run_heavy_set_suite(int instances = 50) {
  int failed = 0;
  double worst = std::numeric_limits<double>::infinity();
  const double eps_grid[4] = {0.1, 0.3, 0.5, 0.7};
  const double gamma_grid[4] = {0.2, 0.4, 0.6, 0.8};
  for (int k = 0; k < instances; ++k) {
    const auto G = random_measure(2 + k % 5, 2 + k % 7, 0xA11CEull + static_cast<std::uint64_t>(k));
    const int n = 2 + k % 3;
    const double eps = eps_grid[k % 4];
    const double gamma = gamma_grid[(k / 4) % 4];
    const auto rep = check_heavy_set_bound(G, n, eps, gamma);
    const auto envelope = replica_event_envelope(n, eps);
    const bool combined = rep.lhs <= envelope.value + 1e-12;
    if (!rep.pass || !combined) ++failed;
    worst = std::min(worst, rep.rhs - rep.lhs);
  }
  return {"heavy_set_bound", failed == 0,
          std::to_string(instances - failed) + "/" + std::to_string(instances) +
              " instances (incl. envelope), min slack " + format_double(worst)};
}

inline SuiteLine run_envelope_suite() {
  // golden-section minimum against a dense grid scan
  const int ns[4] = {3, 5, 10, 20};
  const double epss[4] = {0.3, 0.2, 0.5, 0.7};
  double worst = 0.0;
  bool ok = true;
  for (int k = 0; k < 4; ++k) {
    const auto bound = replica_event_envelope(ns[k], epss[k]);
    double grid_min = std::numeric_limits<double>::infinity();
    const int cells = 1000000;
    for (int i = 0; i <= cells; ++i) {
      const double gamma = static_cast<double>(i) / cells;
      const double h = 2.0 * (1.0 - gamma) / epss[k] + std::exp(-(ns[k] - 1) * (1.0 - gamma));
      grid_min = std::min(grid_min, h);
    }
    const double diff = std::abs(bound.value - grid_min);
    worst = std::max(worst, diff);
    ok = ok && diff <= 1e-9;
  }
  return {"envelope", ok, "golden-section vs 1e6-point scan, max diff " + format_double(worst)};
}

inline SuiteLine run_induction_suite() {
  int failed = 0, total = 0;
  for (int ia = 0; ia < 100; ++ia) {
    const double a = static_cast<double>(ia) / 99.0;
    for (int n = 3; n < 103; ++n) {
      ++total;
      if (!check_induction_bound(a, n).pass) ++failed;
    }
  }
  return {"induction_bound", failed == 0,
          std::to_string(total - failed) + "/" + std::to_string(total) + " grid points"};
}

inline SuiteLine run_mean_overlap_suite(int instances = 100) {
  int failed = 0;
  for (int k = 0; k < instances; ++k) {
    const auto G = random_measure(1 + k % 8, 1 + k % 12, 0xBEEFull + static_cast<std::uint64_t>(k));
    if (!check_mean_overlap_identity(G).pass) ++failed;
  }
  return {"mean_overlap_identity", failed == 0,
          std::to_string(instances - failed) + "/" + std::to_string(instances) + " measures"};
}

inline SuiteLine run_positivity_inequality_suite(int instances = 100) {
  int failed = 0;
  const double eps_grid[5] = {0.1, 0.25, 0.5, 0.75, 0.9};
  for (int k = 0; k < instances; ++k) {
    const auto G = random_measure(1 + k % 6, 1 + k % 10, 0xF00Dull + static_cast<std::uint64_t>(k));
    for (double eps : eps_grid)
      if (!check_positivity_inequality(G, eps).pass) ++failed;
  }
  return {"positivity_inequality", failed == 0,
          std::to_string(instances) + " measures x 5 eps, " + std::to_string(failed) + " failures"};
}

// At v = 0 the field vanishes, every tilt is the identity and the
// estimators must reproduce exact enumeration with zero standard error.
inline SuiteLine run_v0_exactness_suite() {
  bool ok = true;
  std::string detail;

  const ReplicationPlan plan{8, 16};
  FieldSpec v0;
  v0.v = 0.0;

  const auto anti = antipodal(4);
  const auto pos = estimate_positivity(anti, v0, 0.5, plan, 42);
  const double exact = product_probability_exact(anti, pair_overlap_leq(-0.5));
  ok = ok && std::abs(pos.mean - exact) <= 1e-12 && pos.std_error == 0.0 &&
       std::abs(pos.mean - 0.5) <= 1e-12;

  FieldSpec v5;
  v5.v = 5.0;
  const auto point = estimate_positivity(point_mass(3), v5, 0.5, plan, 42);
  ok = ok && point.mean == 0.0 && point.std_error == 0.0;

  const auto fn2 = estimate_joint_event(antipodal(2), v0, 2, 0.5, plan, 42);
  const auto fn3 = estimate_joint_event(antipodal(2), v0, 3, 0.5, plan, 42);
  ok = ok && std::abs(fn2.mean - 0.5) <= 1e-12 && fn2.std_error == 0.0;
  ok = ok && std::abs(fn3.mean - 0.25) <= 1e-12 && fn3.std_error == 0.0;

  const auto G = random_measure(3, 5, 0xD1CEull);
  const auto same = tilt(G, Eigen::VectorXd::Zero(G.size()));
  double tilt_err = 0.0;
  for (int a = 0; a < G.size(); ++a) tilt_err = std::max(tilt_err, std::abs(same.weight(a) - G.weight(a)));
  ok = ok && tilt_err <= 1e-12;

  detail = "positivity " + format_double(pos.mean) + ", fn(2) " + format_double(fn2.mean) +
           ", fn(3) " + format_double(fn3.mean) + ", tilt-identity err " + format_double(tilt_err);
  return {"v0_exactness", ok, detail};
}

// Full suite; prints one line per check, returns overall pass.
inline bool verify_all(std::ostream& os) {
  const SuiteLine lines[] = {
      run_convexity_suite(),   run_heavy_set_suite(),          run_envelope_suite(),
      run_induction_suite(),   run_mean_overlap_suite(), run_positivity_inequality_suite(),
      run_v0_exactness_suite()};
  bool all = true;
  for (const auto& l : lines) {
    os << (l.pass ? "PASS " : "FAIL ") << l.name << " (" << l.detail << ")\n";
    all = all && l.pass;
  }
  os << (all ? "verification suite: all checks passed\n" : "verification suite: FAILURES above\n");
  return all;
}

}  // namespace pspin
