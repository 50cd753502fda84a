// Monte-Carlo estimators over the disorder. The expectation being
// estimated always has the nested form E_x E_g <...>: an outer loop over
// the mixture variables x, a middle loop over Gaussian field draws at
// fixed x, and an inner replica average over the tilted measure that is
// evaluated exactly by enumeration whenever the support allows it.
//
// One outer replication = one x draw with all of its field draws. The
// reported standard error is taken across outer replications (their means
// are i.i.d.), so correlation between draws sharing an x never leaks into
// the error bar. Replication j uses the stream derive_stream(seed, {j}),
// which makes reports bit-reproducible and replications independent.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pspin/field.hpp"
#include "pspin/rng.hpp"
#include "pspin/sphere.hpp"
#include "pspin/stats.hpp"
#include "pspin/testfunc.hpp"

namespace pspin {

inline constexpr int kDefaultInnerSampleDraws = 4096;

// shortest exact decimal representation; round-trips through from_chars
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{}) throw std::invalid_argument("parse_double: bad number '" + s + "'");
  return v;
}

struct ReplicationPlan {
  int x_draws = 64;   // outer replications (mixture draws)
  int g_draws = 256;  // field draws per replication

  void validate() const {
    if (x_draws < 2) throw std::invalid_argument("ReplicationPlan: need >= 2 outer replications");
    if (g_draws < 1) throw std::invalid_argument("ReplicationPlan: need >= 1 field draw");
  }
};

struct EstimateReport {
  std::string estimator;
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t reps = 0;  // outer replications entering std_error
  std::uint64_t seed = 0;
  std::string inner_mode = "exact";  // exact | sampled
  std::map<std::string, std::string> meta;

  static std::string csv_header() {
    return "estimator,v,n,epsilon,p_max,backend,reps,mean,stderr,inner_mode,seed";
  }

  std::string csv_row() const {
    const auto get = [this](const char* k) {
      const auto it = meta.find(k);
      return it == meta.end() ? std::string() : it->second;
    };
    std::string row = estimator;
    row += ',' + get("v");
    row += ',' + get("n");
    row += ',' + get("epsilon");
    row += ',' + get("p_max");
    row += ',' + get("backend");
    row += ',' + std::to_string(reps);
    row += ',' + format_double(mean);
    row += ',' + format_double(std_error);
    row += ',' + inner_mode;
    row += ',' + std::to_string(seed);
    return row;
  }

  static EstimateReport from_csv_row(const std::string& line) {
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      f.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (f.size() != 11) throw std::invalid_argument("EstimateReport: expected 11 CSV fields");
    EstimateReport r;
    r.estimator = f[0];
    const auto set = [&r](const char* k, const std::string& v) {
      if (!v.empty()) r.meta[k] = v;
    };
    set("v", f[1]);
    set("n", f[2]);
    set("epsilon", f[3]);
    set("p_max", f[4]);
    set("backend", f[5]);
    r.reps = std::stoll(f[6]);
    r.mean = parse_double(f[7]);
    r.std_error = parse_double(f[8]);
    r.inner_mode = f[9];
    r.seed = std::stoull(f[10]);
    return r;
  }

  nlohmann::json to_json() const {
    return {{"estimator", estimator}, {"mean", mean},           {"stderr", std_error},
            {"reps", reps},           {"seed", seed},           {"inner_mode", inner_mode},
            {"meta", meta}};
  }
};

namespace detail {

inline void stamp_common_meta(EstimateReport& r, const FieldSpec& spec, int g_draws,
                              double jitter_used) {
  r.meta["v"] = format_double(spec.v);
  r.meta["p_max"] = std::to_string(spec.p_max);
  r.meta["backend"] = to_string(spec.backend);
  r.meta["g_draws"] = std::to_string(g_draws);
  r.meta["jitter_used"] = format_double(jitter_used);
}

}  // namespace detail

// E nu_g^{(x)2}{ z1.z2 <= -eps }: tilt per field draw, exact double sum
// inside. At v = 0 the field vanishes and the report is deterministic
// with zero standard error.
inline EstimateReport estimate_positivity(const DiscreteMeasure& G, const FieldSpec& spec,
                                          double eps, const ReplicationPlan& plan,
                                          std::uint64_t seed) {
  spec.validate();
  plan.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("estimate_positivity: eps must be in (0,1)");

  RunningStats outer;
  double jitter_used = 0.0;
  for (int j = 0; j < plan.x_draws; ++j) {
    Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(j)});
    const Eigen::VectorXd x = sample_x(spec.p_max, rng);
    const FieldSampler sampler(G, spec, x);
    jitter_used = std::max(jitter_used, sampler.jitter_used());
    RunningStats inner;
    for (int k = 0; k < plan.g_draws; ++k) {
      const DiscreteMeasure tilted = tilt(G, sampler.sample(rng));
      inner.add(pair_probability_leq(tilted, -eps));
    }
    outer.add(inner.mean());
  }

  EstimateReport r;
  r.estimator = "positivity";
  r.mean = outer.mean();
  r.std_error = outer.std_error();
  r.reps = outer.count();
  r.seed = seed;
  detail::stamp_common_meta(r, spec, plan.g_draws, jitter_used);
  r.meta["epsilon"] = format_double(eps);
  return r;
}

// E_g <f_n> averaged over x, where f_n is the event that replica 1
// overlaps each of replicas 2..n at or below -eps. Exact enumeration of
// the inner average when M^n fits the budget, sampled tuples otherwise.
inline EstimateReport estimate_joint_event(const DiscreteMeasure& G, const FieldSpec& spec, int n,
                                  double eps, const ReplicationPlan& plan, std::uint64_t seed,
                                  double budget = kDefaultEnumerationBudget) {
  spec.validate();
  plan.validate();
  if (n < 2) throw std::invalid_argument("estimate_joint_event: n must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("estimate_joint_event: eps must be in (0,1)");

  const ReplicaPredicate pred = all_overlaps_with_first_leq(n, -eps);
  const bool exact = std::pow(static_cast<double>(G.size()), n) <= budget;

  RunningStats outer;
  double jitter_used = 0.0;
  double worst_inner_se = 0.0;
  for (int j = 0; j < plan.x_draws; ++j) {
    Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(j)});
    const Eigen::VectorXd x = sample_x(spec.p_max, rng);
    const FieldSampler sampler(G, spec, x);
    jitter_used = std::max(jitter_used, sampler.jitter_used());
    RunningStats inner;
    for (int k = 0; k < plan.g_draws; ++k) {
      const DiscreteMeasure tilted = tilt(G, sampler.sample(rng));
      if (exact) {
        inner.add(product_probability_exact(tilted, pred, budget));
      } else {
        const auto [mean, se] = product_probability_sampled(tilted, pred, kDefaultInnerSampleDraws, rng);
        worst_inner_se = std::max(worst_inner_se, se);
        inner.add(mean);
      }
    }
    outer.add(inner.mean());
  }

  EstimateReport r;
  r.estimator = "joint_event";
  r.mean = outer.mean();
  r.std_error = outer.std_error();
  r.reps = outer.count();
  r.seed = seed;
  r.inner_mode = exact ? "exact" : "sampled";
  detail::stamp_common_meta(r, spec, plan.g_draws, jitter_used);
  r.meta["n"] = std::to_string(n);
  r.meta["epsilon"] = format_double(eps);
  if (!exact) {
    r.meta["inner_draws"] = std::to_string(kDefaultInnerSampleDraws);
    r.meta["inner_se_max"] = format_double(worst_inner_se);
  }
  return r;
}

// E_x | E_g<f psi(o(1,n+1))> - (1/n) E_g<f> E_g<psi(o(1,2))>
//       - (1/n) sum_{l=2..n} E_g<f psi(o(1,l))> |
//
// All middle-layer terms are estimated from the same field draws, so the
// algebraic cancellations (n = 1 with f == 1, point-mass supports) hold
// at the sample level and not just in expectation.
inline EstimateReport estimate_gg_residual(const DiscreteMeasure& G, const FieldSpec& spec, int n,
                                           const ReplicaPredicate& f, const TestFunction& psi,
                                           const ReplicationPlan& plan, std::uint64_t seed,
                                           double budget = kDefaultEnumerationBudget) {
  spec.validate();
  plan.validate();
  if (n < 1) throw std::invalid_argument("estimate_gg_residual: n must be >= 1");
  if (f.arity != n) throw std::invalid_argument("estimate_gg_residual: f arity must equal n");

  // term predicates; the widest has arity n + 1
  ReplicaPredicate with_new{n + 1, "f*psi(new)",
                            [&f, &psi](std::span<const std::size_t> idx, const Eigen::MatrixXd& gram) {
                              const double fv = f.eval(idx.subspan(0, idx.size() - 1), gram);
                              if (fv == 0.0) return 0.0;
                              return fv * psi(gram(static_cast<Eigen::Index>(idx[0]),
                                                   static_cast<Eigen::Index>(idx[idx.size() - 1])));
                            }};
  ReplicaPredicate psi_pair{2, "psi(o12)",
                            [&psi](std::span<const std::size_t> idx, const Eigen::MatrixXd& gram) {
                              return psi(gram(static_cast<Eigen::Index>(idx[0]),
                                              static_cast<Eigen::Index>(idx[1])));
                            }};
  std::vector<ReplicaPredicate> with_old;
  for (int l = 2; l <= n; ++l)
    with_old.push_back(ReplicaPredicate{
        n, "f*psi(o1" + std::to_string(l) + ")",
        [&f, &psi, l](std::span<const std::size_t> idx, const Eigen::MatrixXd& gram) {
          const double fv = f.eval(idx, gram);
          if (fv == 0.0) return 0.0;
          return fv * psi(gram(static_cast<Eigen::Index>(idx[0]),
                               static_cast<Eigen::Index>(idx[l - 1])));
        }});

  const bool exact = std::pow(static_cast<double>(G.size()), n + 1) <= budget;

  RunningStats outer;
  double jitter_used = 0.0;
  double worst_inner_se = 0.0;
  const auto term = [&](const DiscreteMeasure& tilted, const ReplicaPredicate& pred, Rng& rng) {
    if (exact) return product_probability_exact(tilted, pred, budget);
    const auto [mean, se] = product_probability_sampled(tilted, pred, kDefaultInnerSampleDraws, rng);
    worst_inner_se = std::max(worst_inner_se, se);
    return mean;
  };

  for (int j = 0; j < plan.x_draws; ++j) {
    Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(j)});
    const Eigen::VectorXd x = sample_x(spec.p_max, rng);
    const FieldSampler sampler(G, spec, x);
    jitter_used = std::max(jitter_used, sampler.jitter_used());
    RunningStats t_new, t_f, t_psi;
    std::vector<RunningStats> t_old(with_old.size());
    for (int k = 0; k < plan.g_draws; ++k) {
      const DiscreteMeasure tilted = tilt(G, sampler.sample(rng));
      t_new.add(term(tilted, with_new, rng));
      t_f.add(term(tilted, f, rng));
      t_psi.add(term(tilted, psi_pair, rng));
      for (std::size_t i = 0; i < with_old.size(); ++i) t_old[i].add(term(tilted, with_old[i], rng));
    }
    double residual = t_new.mean() - t_f.mean() * t_psi.mean() / n;
    for (const auto& s : t_old) residual -= s.mean() / n;
    outer.add(std::abs(residual));
  }

  EstimateReport r;
  r.estimator = "gg_residual";
  r.mean = outer.mean();
  r.std_error = outer.std_error();
  r.reps = outer.count();
  r.seed = seed;
  r.inner_mode = exact ? "exact" : "sampled";
  detail::stamp_common_meta(r, spec, plan.g_draws, jitter_used);
  r.meta["n"] = std::to_string(n);
  r.meta["f"] = f.name;
  r.meta["psi"] = psi.name();
  if (!exact) {
    r.meta["inner_draws"] = std::to_string(kDefaultInnerSampleDraws);
    r.meta["inner_se_max"] = format_double(worst_inner_se);
  }
  return r;
}

// E_x E_g < | g_p(z) - E_g<g_p(z)> | >, the degree-p coupling statistic.
// The centering E_g<g_p> is a function of x alone; it is estimated from
// the same batch of field draws (plug-in) before the deviations are
// averaged. Covariance and first_order backends go through the per-degree
// decomposition; the tensor backend reads g_p off its explicit
// coefficients.
inline EstimateReport estimate_gp_coupling(const DiscreteMeasure& G, const FieldSpec& spec, int p,
                                      const ReplicationPlan& plan, std::uint64_t seed,
                                      double tensor_budget = kDefaultTensorBudget) {
  spec.validate();
  plan.validate();
  if (p < 1 || p > spec.p_max) throw std::invalid_argument("estimate_gp_coupling: p must be in [1, p_max]");
  if (spec.backend == Backend::first_order && p != 1)
    throw std::invalid_argument("estimate_gp_coupling: first_order backend only carries p = 1");

  const bool tensor = spec.backend == Backend::tensor;
  const int m = G.size();
  double jitter_used = 0.0;

  std::vector<Eigen::VectorXd> gp_draws(static_cast<std::size_t>(plan.g_draws));
  std::vector<Eigen::VectorXd> weight_draws(static_cast<std::size_t>(plan.g_draws));

  RunningStats outer;
  if (tensor) {
    for (int j = 0; j < plan.x_draws; ++j) {
      Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(j)});
      const Eigen::VectorXd x = sample_x(spec.p_max, rng);
      RunningStats gibbs_mean;
      for (int k = 0; k < plan.g_draws; ++k) {
        DisorderRealization real = sample_field_tensor(G.dim(), spec, x, rng, tensor_budget);
        realize_on_support(real, G);
        const DiscreteMeasure tilted = tilt(G, real.field_values);
        Eigen::VectorXd gp(m);
        for (int a = 0; a < m; ++a) gp[a] = evaluate_gp(real, G.atom(a), p);
        gp_draws[static_cast<std::size_t>(k)] = std::move(gp);
        weight_draws[static_cast<std::size_t>(k)] = tilted.weights();
        gibbs_mean.add(weight_draws[static_cast<std::size_t>(k)].dot(gp_draws[static_cast<std::size_t>(k)]));
      }
      const double center = gibbs_mean.mean();
      RunningStats dev;
      for (int k = 0; k < plan.g_draws; ++k) {
        const auto& w = weight_draws[static_cast<std::size_t>(k)];
        const auto& gp = gp_draws[static_cast<std::size_t>(k)];
        dev.add(w.dot((gp.array() - center).abs().matrix()));
      }
      outer.add(dev.mean());
    }
  } else {
    const DecomposedFieldSampler dec(G.gram(), spec);
    jitter_used = dec.jitter_used();
    const std::size_t comp = spec.backend == Backend::first_order ? 0 : static_cast<std::size_t>(p - 1);
    for (int j = 0; j < plan.x_draws; ++j) {
      Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(j)});
      const Eigen::VectorXd x = sample_x(spec.p_max, rng);
      RunningStats gibbs_mean;
      for (int k = 0; k < plan.g_draws; ++k) {
        const auto comps = dec.sample_components(rng);
        const DiscreteMeasure tilted = tilt(G, dec.combine(x, comps));
        gp_draws[static_cast<std::size_t>(k)] = comps[comp];
        weight_draws[static_cast<std::size_t>(k)] = tilted.weights();
        gibbs_mean.add(weight_draws[static_cast<std::size_t>(k)].dot(comps[comp]));
      }
      const double center = gibbs_mean.mean();
      RunningStats dev;
      for (int k = 0; k < plan.g_draws; ++k) {
        const auto& w = weight_draws[static_cast<std::size_t>(k)];
        const auto& gp = gp_draws[static_cast<std::size_t>(k)];
        dev.add(w.dot((gp.array() - center).abs().matrix()));
      }
      outer.add(dev.mean());
    }
  }

  EstimateReport r;
  r.estimator = "gp_coupling";
  r.mean = outer.mean();
  r.std_error = outer.std_error();
  r.reps = outer.count();
  r.seed = seed;
  detail::stamp_common_meta(r, spec, plan.g_draws, jitter_used);
  r.meta["p"] = std::to_string(p);
  return r;
}

// Concentration of X = log integral exp(g) dnu: per x draw, the sample
// variance of X over the field draws against the analytic field variance
// a = v^2 xi(1). Reports the mean sample variance; meta carries the
// worst ratio against the 8a envelope and the var/a range (for supports
// where X is itself Gaussian the ratio var/a is 1 in law).
inline EstimateReport estimate_concentration(const DiscreteMeasure& G, const FieldSpec& spec,
                                             const ReplicationPlan& plan, std::uint64_t seed) {
  spec.validate();
  plan.validate();
  if (plan.g_draws < 100)
    throw std::invalid_argument("estimate_concentration: need >= 100 field draws per replication");

  RunningStats outer;
  double jitter_used = 0.0;
  double max_var_over_8a = 0.0;
  double max_var_over_a = 0.0;
  double min_var_over_a = std::numeric_limits<double>::infinity();
  double a_sum = 0.0;

  for (int j = 0; j < plan.x_draws; ++j) {
    Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(j)});
    const Eigen::VectorXd x = sample_x(spec.p_max, rng);
    const double a = spec.v * spec.v *
                     (spec.backend == Backend::first_order ? 1.0 : xi(1.0, x, spec.p_max));
    const FieldSampler sampler(G, spec, x);
    jitter_used = std::max(jitter_used, sampler.jitter_used());
    RunningStats xs;
    for (int k = 0; k < plan.g_draws; ++k) {
      const Eigen::VectorXd field = sampler.sample(rng);
      const double shift = field.maxCoeff();
      const double integral = G.weights().dot((field.array() - shift).exp().matrix());
      xs.add(shift + std::log(integral));
    }
    const double var = xs.sample_variance();
    outer.add(var);
    a_sum += a;
    if (a > 0.0) {
      max_var_over_8a = std::max(max_var_over_8a, var / (8.0 * a));
      max_var_over_a = std::max(max_var_over_a, var / a);
      min_var_over_a = std::min(min_var_over_a, var / a);
    } else {
      min_var_over_a = std::min(min_var_over_a, 0.0);
    }
  }

  EstimateReport r;
  r.estimator = "concentration";
  r.mean = outer.mean();
  r.std_error = outer.std_error();
  r.reps = outer.count();
  r.seed = seed;
  detail::stamp_common_meta(r, spec, plan.g_draws, jitter_used);
  r.meta["a_mean"] = format_double(a_sum / plan.x_draws);
  r.meta["max_var_over_8a"] = format_double(max_var_over_8a);
  r.meta["max_var_over_a"] = format_double(max_var_over_a);
  r.meta["min_var_over_a"] = format_double(std::isfinite(min_var_over_a) ? min_var_over_a : 0.0);
  return r;
}

// E sup_a |g(z_a)| over a v grid with common random numbers: each draw
// realizes the unit-strength field once and scales it, so the supremum is
// exactly linear in v realization by realization. meta["constant"] is the
// measured sup / (v sqrt(N)).
inline std::vector<EstimateReport> estimate_sup_scaling(const DiscreteMeasure& G,
                                                        const std::vector<double>& v_grid,
                                                        const FieldSpec& spec_base, int reps,
                                                        std::uint64_t seed) {
  spec_base.validate();
  if (v_grid.empty()) throw std::invalid_argument("estimate_sup_scaling: empty v grid");
  if (reps < 2) throw std::invalid_argument("estimate_sup_scaling: need >= 2 replications");
  for (double v : v_grid)
    if (!(v >= 0.0)) throw std::invalid_argument("estimate_sup_scaling: v must be >= 0");

  FieldSpec unit = spec_base;
  unit.v = 1.0;
  std::vector<RunningStats> per_v(v_grid.size());
  double jitter_used = 0.0;
  for (int t = 0; t < reps; ++t) {
    Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(t)});
    const Eigen::VectorXd x = sample_x(unit.p_max, rng);
    const FieldSampler sampler(G, unit, x);
    jitter_used = std::max(jitter_used, sampler.jitter_used());
    const double sup_unit = sampler.sample(rng).cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < v_grid.size(); ++i) per_v[i].add(v_grid[i] * sup_unit);
  }

  const double sqrt_n = std::sqrt(static_cast<double>(G.dim()));
  std::vector<EstimateReport> out;
  out.reserve(v_grid.size());
  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    EstimateReport r;
    r.estimator = "sup_scaling";
    r.mean = per_v[i].mean();
    r.std_error = per_v[i].std_error();
    r.reps = per_v[i].count();
    r.seed = seed;
    FieldSpec spec_i = spec_base;
    spec_i.v = v_grid[i];
    detail::stamp_common_meta(r, spec_i, 1, jitter_used);
    r.meta["constant"] =
        format_double(v_grid[i] > 0.0 ? r.mean / (v_grid[i] * sqrt_n) : 0.0);
    out.push_back(std::move(r));
  }
  return out;
}

// Search for a single disorder realization that works for every measure
// in Q at once: Q-averaged positivity probability at most 4 eps and
// sup |g| over the union support at most l_cut * v * sqrt(N). Returns the
// first witness, or the best-scoring failure.
struct WitnessSearchResult {
  bool success = false;
  int attempts_used = 0;
  DisorderRealization realization;
  double q_positivity = std::numeric_limits<double>::infinity();
  double sup_abs = std::numeric_limits<double>::infinity();
  double score = std::numeric_limits<double>::infinity();
};

inline WitnessSearchResult find_good_perturbation(const std::vector<DiscreteMeasure>& Q,
                                                  const FieldSpec& spec, double eps, int attempts,
                                                  std::uint64_t seed, double l_cut = 3.0) {
  spec.validate();
  if (Q.empty()) throw std::invalid_argument("find_good_perturbation: Q must be nonempty");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("find_good_perturbation: eps must be in (0,1)");
  if (attempts < 1) throw std::invalid_argument("find_good_perturbation: need >= 1 attempt");
  const int dim = Q.front().dim();
  int union_size = 0;
  for (const auto& nu : Q) {
    if (nu.dim() != dim) throw std::invalid_argument("find_good_perturbation: measures must share dimension");
    union_size += nu.size();
  }

  // disorder lives on the union of supports; each measure reads its slice
  Eigen::MatrixXd points(union_size, dim);
  std::vector<int> offsets;
  int at = 0;
  for (const auto& nu : Q) {
    offsets.push_back(at);
    points.middleRows(at, nu.size()) = nu.points();
    at += nu.size();
  }
  const Eigen::MatrixXd gram = (points * points.transpose()).cwiseMin(1.0).cwiseMax(-1.0);

  const double sup_bound = l_cut * spec.v * std::sqrt(static_cast<double>(dim));
  WitnessSearchResult best;
  for (int i = 0; i < attempts; ++i) {
    Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(i)});
    const Eigen::VectorXd x = sample_x(spec.p_max, rng);
    const FieldSampler sampler(gram, spec, x);
    const Eigen::VectorXd field = sampler.sample(rng);

    double avg_pos = 0.0;
    for (std::size_t q = 0; q < Q.size(); ++q) {
      const auto& nu = Q[q];
      const DiscreteMeasure tilted = tilt(nu, field.segment(offsets[q], nu.size()));
      avg_pos += pair_probability_leq(tilted, -eps);
    }
    avg_pos /= static_cast<double>(Q.size());
    const double sup = field.cwiseAbs().maxCoeff();

    const double pos_ratio = avg_pos / (4.0 * eps);
    const double sup_ratio = sup_bound > 0.0
                                 ? sup / sup_bound
                                 : (sup > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    const double score = std::max(pos_ratio, sup_ratio);
    const bool ok = avg_pos <= 4.0 * eps && sup <= sup_bound;

    if (score < best.score) {
      best.score = score;
      best.q_positivity = avg_pos;
      best.sup_abs = sup;
      best.realization = DisorderRealization{x, spec.v, spec.p_max, field, {}};
    }
    if (ok) {
      best.success = true;
      best.attempts_used = i + 1;
      best.q_positivity = avg_pos;
      best.sup_abs = sup;
      best.score = score;
      best.realization = DisorderRealization{x, spec.v, spec.p_max, field, {}};
      return best;
    }
  }
  best.success = false;
  best.attempts_used = attempts;
  return best;
}

}  // namespace pspin
