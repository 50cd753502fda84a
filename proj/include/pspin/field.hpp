// The mixed random perturbation restricted to a finite support.
//
// Conditionally on the mixture variables x = (x_p), the field
//
//   g(z) = v * sum_{p=1..p_max} 2^{-p} x_p g_p(z),
//   g_p(z) = sum_{i_1..i_p} g_{i_1..i_p} z_{i_1} ... z_{i_p},
//
// with i.i.d. standard Gaussian coefficients is a centered Gaussian
// process with covariance E g(z1) g(z2) = v^2 xi(z1.z2), where
// xi(s) = sum_p 4^{-p} x_p^2 s^p. On a discrete support the process is
// therefore fully determined by the overlap table, and the default
// backend samples it exactly by factoring the covariance matrix.
//
// The tensor backend draws every coefficient tensor explicitly and
// evaluates the definition; it costs O(N^p_max) and exists as an
// independent cross-check of the covariance route (and for evaluating
// the field off the support). The first_order backend replaces the
// mixed covariance by v^2 * s, i.e. the plain linear field
// g'(z) = v * sum_i g_i z_i, with no mixture variables.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pspin/rng.hpp"
#include "pspin/sphere.hpp"

namespace pspin {

inline constexpr double kDefaultJitter = 1e-10;
inline constexpr double kMaxJitter = 1e-6;
inline constexpr double kDefaultTensorBudget = 1e7;
inline constexpr int kMaxPMax = 30;  // 2^{-2p} underflows past this

enum class Backend { covariance, tensor, first_order };

inline std::string to_string(Backend b) {
  switch (b) {
    case Backend::covariance: return "covariance";
    case Backend::tensor: return "tensor";
    case Backend::first_order: return "first_order";
  }
  return "covariance";
}

inline Backend backend_from_string(const std::string& s) {
  if (s == "covariance") return Backend::covariance;
  if (s == "tensor") return Backend::tensor;
  if (s == "first_order") return Backend::first_order;
  throw std::invalid_argument("unknown backend '" + s + "'");
}

struct FieldSpec {
  double v = 1.0;
  int p_max = 12;
  Backend backend = Backend::covariance;
  double jitter = kDefaultJitter;

  void validate() const {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("FieldSpec: v must be >= 0");
    if (p_max < 1 || p_max > kMaxPMax)
      throw std::invalid_argument("FieldSpec: p_max must be in [1, " + std::to_string(kMaxPMax) + "]");
    if (!(jitter >= 0.0)) throw std::invalid_argument("FieldSpec: jitter must be >= 0");
  }
};

inline nlohmann::json field_spec_to_json(const FieldSpec& s) {
  return {{"v", s.v}, {"p_max", s.p_max}, {"backend", to_string(s.backend)}, {"jitter", s.jitter}};
}

inline FieldSpec field_spec_from_json(const nlohmann::json& j) {
  FieldSpec s;
  if (j.contains("v")) s.v = j.at("v").get<double>();
  if (j.contains("p_max")) s.p_max = j.at("p_max").get<int>();
  if (j.contains("backend")) s.backend = backend_from_string(j.at("backend").get<std::string>());
  if (j.contains("jitter")) s.jitter = j.at("jitter").get<double>();
  s.validate();
  return s;
}

// One draw of the disorder: the mixture variables and, once realized, the
// field values at a support's atoms. Tensor-backend realizations also
// carry the explicit coefficient tensors (coeffs[p-1] has length N^p).
struct DisorderRealization {
  Eigen::VectorXd x;
  double v = 0.0;
  int p_max = 0;
  Eigen::VectorXd field_values;
  std::vector<Eigen::VectorXd> tensors;

  bool has_tensors() const { return !tensors.empty(); }
};

inline Eigen::VectorXd sample_x(int p_max, Rng& rng) {
  if (p_max < 1) throw std::invalid_argument("sample_x: p_max must be >= 1");
  Eigen::VectorXd x(p_max);
  for (int p = 0; p < p_max; ++p) x[p] = rng.uniform();
  return x;
}

// xi(s) = sum_{p=1..p_max} 4^{-p} x_p^2 s^p, the unit-strength covariance
// as a function of the overlap.
inline double xi(double s, const Eigen::VectorXd& x, int p_max) {
  if (std::abs(s) > 1.0 + kOverlapClampTol) throw std::invalid_argument("xi: |s| must be <= 1");
  s = std::clamp(s, -1.0, 1.0);
  if (p_max < 1 || p_max > static_cast<int>(x.size()))
    throw std::invalid_argument("xi: p_max must be in [1, len(x)]");
  double quarter = 1.0, sp = 1.0, sum = 0.0;
  for (int p = 1; p <= p_max; ++p) {
    quarter *= 0.25;
    sp *= s;
    sum += quarter * x[p - 1] * x[p - 1] * sp;
  }
  return sum;
}

inline double xi(double s, const Eigen::VectorXd& x) {
  return xi(s, x, static_cast<int>(x.size()));
}

// Covariance of the field over a support: C_ab = v^2 xi(overlap_ab)
// (covariance backend) or v^2 overlap_ab (first_order backend).
inline Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& gram, const FieldSpec& spec,
                                         const Eigen::VectorXd& x) {
  spec.validate();
  if (gram.rows() == 0) throw std::invalid_argument("covariance_matrix: empty support");
  const double v2 = spec.v * spec.v;
  if (spec.backend == Backend::first_order) return v2 * gram;
  if (spec.backend != Backend::covariance)
    throw std::invalid_argument("covariance_matrix: tensor backend has no closed-form covariance path");
  Eigen::MatrixXd c(gram.rows(), gram.cols());
  for (Eigen::Index a = 0; a < gram.rows(); ++a)
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double val = v2 * xi(gram(a, b), x, spec.p_max);
      c(a, b) = val;
      c(b, a) = val;
    }
  return c;
}

inline Eigen::MatrixXd covariance_matrix(const DiscreteMeasure& G, const FieldSpec& spec,
                                         const Eigen::VectorXd& x) {
  return covariance_matrix(G.gram(), spec, x);
}

namespace detail {

// Cholesky of C + jitter I with x10 jitter escalation up to kMaxJitter.
inline Eigen::MatrixXd factor_with_jitter(const Eigen::MatrixXd& c, double jitter,
                                          double* jitter_used) {
  double j = jitter;
  while (true) {
    Eigen::MatrixXd shifted = c;
    shifted.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = j;
      return llt.matrixL();
    }
    const double next = (j == 0.0) ? kDefaultJitter : j * 10.0;
    if (next > kMaxJitter * (1.0 + 1e-9))
      throw std::runtime_error("field covariance factorization failed after jitter escalation");
    j = next;
  }
}

}  // namespace detail

// Exact sampler of the field over a fixed support at fixed x.
//
// The factor is computed at unit strength (v = 1) and draws are scaled by
// v afterwards, so for a fixed (x, noise) realization the field is exactly
// linear in v; this is what lets a sweep reuse common random numbers
// across a v grid. The jitter therefore sits on the unit-scale matrix and
// the marginal variance is v^2 (xi(1) + jitter).
class FieldSampler {
 public:
  FieldSampler(const Eigen::MatrixXd& gram, const FieldSpec& spec, const Eigen::VectorXd& x)
      : spec_(spec), size_(static_cast<int>(gram.rows())) {
    spec_.validate();
    if (spec_.backend == Backend::tensor)
      throw std::invalid_argument("FieldSampler: use sample_field_tensor for the tensor backend");
    if (spec_.v == 0.0) return;  // field is identically zero
    FieldSpec unit = spec_;
    unit.v = 1.0;
    const Eigen::MatrixXd c = covariance_matrix(gram, unit, x);
    chol_ = detail::factor_with_jitter(c, spec_.jitter, &jitter_used_);
  }

  FieldSampler(const DiscreteMeasure& G, const FieldSpec& spec, const Eigen::VectorXd& x)
      : FieldSampler(G.gram(), spec, x) {}

  Eigen::VectorXd sample(Rng& rng) const {
    if (spec_.v == 0.0) return Eigen::VectorXd::Zero(size_);
    Eigen::VectorXd zeta(size_);
    for (int i = 0; i < size_; ++i) zeta[i] = rng.normal();
    return spec_.v * (chol_ * zeta);
  }

  double jitter_used() const { return jitter_used_; }
  int size() const { return size_; }

 private:
  FieldSpec spec_;
  int size_ = 0;
  Eigen::MatrixXd chol_;
  double jitter_used_ = 0.0;
};

// Per-degree decomposition: independent unit components G_p with
// covariance (z_a.z_b)^p, combined as g = sum_p v 2^{-p} x_p G_p. The sum
// reproduces the aggregated field in law while exposing each g_p, which
// the degree-resolved estimators need. Component factors do not depend on
// x or v, so they are built once per support.
class DecomposedFieldSampler {
 public:
  DecomposedFieldSampler(const Eigen::MatrixXd& gram, const FieldSpec& spec)
      : spec_(spec), size_(static_cast<int>(gram.rows())) {
    spec_.validate();
    if (spec_.backend == Backend::tensor)
      throw std::invalid_argument("DecomposedFieldSampler: tensor backend carries g_p explicitly");
    const int comps = components();
    factors_.reserve(static_cast<std::size_t>(comps));
    Eigen::MatrixXd power = Eigen::MatrixXd::Ones(gram.rows(), gram.cols());
    for (int p = 1; p <= comps; ++p) {
      power = power.cwiseProduct(gram);
      double used = 0.0;
      factors_.push_back(detail::factor_with_jitter(power, spec_.jitter, &used));
      jitter_used_ = std::max(jitter_used_, used);
    }
  }

  int components() const { return spec_.backend == Backend::first_order ? 1 : spec_.p_max; }

  // unscaled components, one vector of field values per degree
  std::vector<Eigen::VectorXd> sample_components(Rng& rng) const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(factors_.size());
    Eigen::VectorXd zeta(size_);
    for (const auto& l : factors_) {
      for (int i = 0; i < size_; ++i) zeta[i] = rng.normal();
      out.push_back(l * zeta);
    }
    return out;
  }

  // the tilting field for given mixture variables
  Eigen::VectorXd combine(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& comps) const {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(size_);
    if (spec_.backend == Backend::first_order) {
      total = spec_.v * comps.at(0);
      return total;
    }
    double half = 1.0;
    for (int p = 1; p <= spec_.p_max; ++p) {
      half *= 0.5;
      total += (spec_.v * half * x[p - 1]) * comps.at(static_cast<std::size_t>(p - 1));
    }
    return total;
  }

  double jitter_used() const { return jitter_used_; }

 private:
  FieldSpec spec_;
  int size_ = 0;
  std::vector<Eigen::MatrixXd> factors_;
  double jitter_used_ = 0.0;
};

namespace detail {

inline Eigen::VectorXd kron_power(const Eigen::VectorXd& z, int p) {
  Eigen::VectorXd t = Eigen::VectorXd::Ones(1);
  for (int q = 0; q < p; ++q) {
    Eigen::VectorXd next(t.size() * z.size());
    for (Eigen::Index i = 0; i < t.size(); ++i)
      next.segment(i * z.size(), z.size()) = t[i] * z;
    t = std::move(next);
  }
  return t;
}

}  // namespace detail

// Draws every coefficient tensor of g_p, p = 1..p_max, explicitly.
inline DisorderRealization sample_field_tensor(int n, const FieldSpec& spec,
                                               const Eigen::VectorXd& x, Rng& rng,
                                               double budget = kDefaultTensorBudget) {
  spec.validate();
  if (spec.backend != Backend::tensor)
    throw std::invalid_argument("sample_field_tensor: spec backend must be 'tensor'");
  if (n < 1) throw std::invalid_argument("sample_field_tensor: dimension must be >= 1");
  if (static_cast<int>(x.size()) < spec.p_max)
    throw std::invalid_argument("sample_field_tensor: x shorter than p_max");
  if (std::pow(static_cast<double>(n), spec.p_max) > budget)
    throw std::runtime_error("sample_field_tensor: coefficient budget exceeded");

  DisorderRealization real;
  real.x = x.head(spec.p_max);
  real.v = spec.v;
  real.p_max = spec.p_max;
  real.tensors.reserve(static_cast<std::size_t>(spec.p_max));
  std::size_t len = 1;
  for (int p = 1; p <= spec.p_max; ++p) {
    len *= static_cast<std::size_t>(n);
    Eigen::VectorXd coeffs(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs[i] = rng.normal();
    real.tensors.push_back(std::move(coeffs));
  }
  return real;
}

// g_p(z) from the explicit tensors (unscaled).
inline double evaluate_gp(const DisorderRealization& real, const UnitVector& z, int p) {
  if (!real.has_tensors()) throw std::runtime_error("evaluate_gp: field known only on support");
  if (p < 1 || p > static_cast<int>(real.tensors.size()))
    throw std::invalid_argument("evaluate_gp: p out of range");
  return real.tensors[static_cast<std::size_t>(p - 1)].dot(detail::kron_power(z.coords, p));
}

// g(z) = v sum_p 2^{-p} x_p g_p(z) from the explicit tensors.
inline double evaluate_g(const DisorderRealization& real, const UnitVector& z) {
  if (!real.has_tensors()) throw std::runtime_error("evaluate_g: field known only on support");
  double half = 1.0, sum = 0.0;
  for (int p = 1; p <= real.p_max; ++p) {
    half *= 0.5;
    sum += half * real.x[p - 1] * evaluate_gp(real, z, p);
  }
  return real.v * sum;
}

inline void realize_on_support(DisorderRealization& real, const DiscreteMeasure& G) {
  real.field_values.resize(G.size());
  for (int a = 0; a < G.size(); ++a) real.field_values[a] = evaluate_g(real, G.atom(a));
}

inline double sup_abs_field(const DisorderRealization& real) {
  if (real.field_values.size() == 0)
    throw std::invalid_argument("sup_abs_field: realization has no field values");
  return real.field_values.cwiseAbs().maxCoeff();
}

}  // namespace pspin
