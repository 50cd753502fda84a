// Deterministic, non-stochastic checks of the analytic inequalities the
// estimators lean on: the convex-derivative comparison, the replica-event
// bound through the heavy-atom set U, the optimized step-2 envelope, the
// induction product lower bound, the nonnegativity identity for the mean
// overlap, and the basic positivity inequality for product measures.
// Every check is a pure function: same inputs, identical report.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pspin/sphere.hpp"

namespace pspin {

struct CheckReport {
  std::string check;
  std::map<std::string, double> inputs;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;

  nlohmann::json to_json() const {
    return {{"check", check}, {"inputs", inputs}, {"lhs", lhs}, {"rhs", rhs}, {"pass", pass}};
  }
};

// A pair of convex scalar functions with optional closed-form derivatives;
// missing derivatives fall back to central differences.
struct ScalarFunctionPair {
  std::function<double(double)> theta;
  std::function<double(double)> psi;
  std::function<double(double)> dtheta;  // may be empty
  std::function<double(double)> dpsi;    // may be empty
};

namespace detail {

inline constexpr double kFdStep = 1e-6;

inline double derivative(const std::function<double(double)>& f,
                         const std::function<double(double)>& df, double x) {
  if (df) return df(x);
  return (f(x + kFdStep) - f(x - kFdStep)) / (2.0 * kFdStep);
}

inline void require_convex_on(const std::function<double(double)>& f, const char* which,
                              double lo, double hi) {
  constexpr int kGrid = 16;
  const double h = (hi - lo) / kGrid;
  for (int i = 1; i < kGrid; ++i) {
    const double u = lo + i * h;
    const double second = f(u - h) + f(u + h) - 2.0 * f(u);
    if (second < -1e-8)
      throw std::invalid_argument(std::string("convexity precondition violated for ") + which +
                                  " at x = " + std::to_string(u));
  }
}

}  // namespace detail

// |theta'(x) - psi'(x)| <= psi'(x+y) - psi'(x-y)
//   + (1/y) (|psi(x+y)-theta(x+y)| + |psi(x-y)-theta(x-y)| + |psi(x)-theta(x)|)
// for convex differentiable theta, psi and y > 0.
inline CheckReport check_convex_derivative_bound(const ScalarFunctionPair& pair, double x, double y) {
  if (!(y > 0.0)) throw std::invalid_argument("check_convex_derivative_bound: y must be > 0");
  detail::require_convex_on(pair.theta, "theta", x - y, x + y);
  detail::require_convex_on(pair.psi, "psi", x - y, x + y);

  const double dtheta_x = detail::derivative(pair.theta, pair.dtheta, x);
  const double dpsi_x = detail::derivative(pair.psi, pair.dpsi, x);
  const double dpsi_plus = detail::derivative(pair.psi, pair.dpsi, x + y);
  const double dpsi_minus = detail::derivative(pair.psi, pair.dpsi, x - y);

  const double lhs = std::abs(dtheta_x - dpsi_x);
  const double rhs = dpsi_plus - dpsi_minus +
                     (std::abs(pair.psi(x + y) - pair.theta(x + y)) +
                      std::abs(pair.psi(x - y) - pair.theta(x - y)) +
                      std::abs(pair.psi(x) - pair.theta(x))) /
                         y;

  CheckReport r;
  r.check = "convex_derivative_bound";
  r.inputs = {{"x", x}, {"y", y}};
  r.lhs = lhs;
  r.rhs = rhs;
  r.pass = lhs <= rhs + 1e-8 * (1.0 + std::abs(rhs));
  return r;
}

// <f_n> = <G{z2 : o <= -eps}^{n-1}> <= G(U) + gamma^{n-1} with
// U = { z1 : G{z2 : o <= -eps} >= gamma }, plus the conditional-measure
// consequence G(U) <= 2 (1 - gamma) / eps.
inline CheckReport check_heavy_set_bound(const DiscreteMeasure& G, int n, double eps, double gamma) {
  if (n < 2) throw std::invalid_argument("check_heavy_set_bound: n must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("check_heavy_set_bound: eps must be in (0,1)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("check_heavy_set_bound: gamma must be in (0,1)");

  const int m = G.size();
  double fn = 0.0;
  double g_u = 0.0;
  for (int a = 0; a < m; ++a) {
    double q = 0.0;
    for (int b = 0; b < m; ++b)
      if (G.gram()(a, b) <= -eps) q += G.weight(b);
    fn += G.weight(a) * std::pow(q, n - 1);
    if (q >= gamma) g_u += G.weight(a);
  }
  const double gamma_pow = std::pow(gamma, n - 1);
  const double cond_bound = 2.0 * (1.0 - gamma) / eps;

  CheckReport r;
  r.check = "heavy_set_bound";
  r.inputs = {{"n", static_cast<double>(n)}, {"eps", eps},          {"gamma", gamma},
              {"g_u", g_u},                  {"gamma_pow", gamma_pow}, {"cond_bound", cond_bound}};
  r.lhs = fn;
  r.rhs = g_u + gamma_pow;
  r.pass = fn <= g_u + gamma_pow + 1e-12 && g_u <= cond_bound + 1e-12;
  return r;
}

// Golden-section minimum of h(gamma) = 2(1-gamma)/eps + exp(-(n-1)(1-gamma))
// over (0, 1); h is strictly convex in gamma. The minimum dominates every
// exact <f_n> on the same (n, eps).
struct EnvelopeBound {
  double gamma_star = 0.0;
  double value = 0.0;
};

inline EnvelopeBound replica_event_envelope(int n, double eps) {
  if (n < 2) throw std::invalid_argument("replica_event_envelope: n must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("replica_event_envelope: eps must be in (0,1)");
  const auto h = [n, eps](double gamma) {
    return 2.0 * (1.0 - gamma) / eps + std::exp(-(n - 1) * (1.0 - gamma));
  };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = h(c), fd = h(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = h(d);
    }
  }
  // the infimum can sit at a boundary (e.g. small (n-1) eps pushes the
  // minimizer to gamma -> 1 where h -> 1), so compare against both ends
  double gamma_star = (a + b) / 2.0;
  double value = h(gamma_star);
  for (double endpoint : {0.0, 1.0}) {
    const double hv = h(endpoint);
    if (hv < value) {
      value = hv;
      gamma_star = endpoint;
    }
  }
  return {gamma_star, value};
}

// P(a, n) = a prod_{l=2..n-1} (l-1+a)/l, the induction product, together
// with the per-factor inequality (l-1+a)/l >= exp(-(1-a)/l - 1/l^2) and
// the measured constant c(a, n) = P n^{1-a} / a.
inline CheckReport check_induction_bound(double a, int n) {
  if (n < 3) throw std::invalid_argument("check_induction_bound: n must be >= 3");
  if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("check_induction_bound: a must be in [0,1]");

  double product = a;
  double worst_margin = std::numeric_limits<double>::infinity();
  bool factors_ok = true;
  for (int l = 2; l <= n - 1; ++l) {
    const double factor = (l - 1 + a) / l;
    const double lower = std::exp(-(1.0 - a) / l - 1.0 / (static_cast<double>(l) * l));
    worst_margin = std::min(worst_margin, factor - lower);
    if (factor < lower - 1e-15) factors_ok = false;
    product *= factor;
  }
  const double c = a > 0.0 ? product * std::pow(static_cast<double>(n), 1.0 - a) / a : 0.0;

  CheckReport r;
  r.check = "induction_bound";
  r.inputs = {{"a", a}, {"n", static_cast<double>(n)}, {"product", product}, {"c", c}};
  r.lhs = worst_margin;  // min over l of factor - exp lower bound
  r.rhs = 0.0;
  r.pass = factors_ok;
  return r;
}

// <z1.z2> under G x G equals sum_i <z_i>^2 and is therefore nonnegative.
inline CheckReport check_mean_overlap_identity(const DiscreteMeasure& G) {
  const int m = G.size();
  double double_sum = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) double_sum += G.weight(a) * G.weight(b) * G.gram()(a, b);
  const double barycenter_sq = mean_overlap(G);

  CheckReport r;
  r.check = "mean_overlap_identity";
  r.inputs = {{"support_size", static_cast<double>(m)}};
  r.lhs = double_sum;
  r.rhs = barycenter_sq;
  r.pass = std::abs(double_sum - barycenter_sq) <= 1e-12 && barycenter_sq >= 0.0 &&
           double_sum >= -1e-12;
  return r;
}

// eps <= (1 + eps) G^{(x)2}{ z1.z2 > -eps } for every product measure.
inline CheckReport check_positivity_inequality(const DiscreteMeasure& G, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("check_positivity_inequality: eps must be in (0,1)");
  const double p_gt = 1.0 - pair_probability_leq(G, -eps);
  CheckReport r;
  r.check = "positivity_inequality";
  r.inputs = {{"eps", eps}, {"p_gt", p_gt}};
  r.lhs = eps;
  r.rhs = (1.0 + eps) * p_gt;
  r.pass = r.lhs <= r.rhs + 1e-12;
  return r;
}

// Arithmetic consistency of the final chaining step with measured
// quantities substituted: a_mean <= a0 + n^{-a0} (n / c(a_mean, n))
// (envelope_bound + delta_mean), where c is the measured induction constant.
inline CheckReport check_positivity_chain(double a_mean, double delta_mean, int n, double eps,
                                     double a0) {
  if (!(a0 > 0.0 && a0 < 1.0)) throw std::invalid_argument("check_positivity_chain: a0 must be in (0,1)");
  const CheckReport induction = check_induction_bound(std::clamp(a_mean, 0.0, 1.0), n);
  const double c = induction.inputs.at("c");
  const EnvelopeBound envelope = replica_event_envelope(n, eps);
  const double rhs = a0 + std::pow(static_cast<double>(n), -a0) *
                              (c > 0.0 ? static_cast<double>(n) / c : 0.0) *
                              (envelope.value + delta_mean);

  CheckReport r;
  r.check = "positivity_chain";
  r.inputs = {{"a_mean", a_mean}, {"delta_mean", delta_mean}, {"n", static_cast<double>(n)},
              {"eps", eps},       {"a0", a0},                 {"c", c},
              {"envelope", envelope.value}};
  r.lhs = a_mean;
  r.rhs = rhs;
  r.pass = r.lhs <= r.rhs + 1e-12;
  return r;
}

}  // namespace pspin
