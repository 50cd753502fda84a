// Discrete probability measures on the unit sphere S^{N-1}: atoms and
// overlaps, exponential tilting by a field over the support, and exact or
// sampled averages over replica products G^{(x) n}.
//
// Everything here is immutable after construction. Tilting shares the
// support (and its overlap table) with the parent measure, so replica
// predicates evaluated against atom indices stay valid across tilts.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pspin/rng.hpp"
#include "pspin/stats.hpp"

namespace pspin {

inline constexpr double kUnitNormTol = 1e-12;
inline constexpr double kOverlapClampTol = 1e-12;
inline constexpr double kDefaultEnumerationBudget = 1e7;

struct UnitVector {
  Eigen::VectorXd coords;

  int dim() const { return static_cast<int>(coords.size()); }
};

inline UnitVector make_unit_vector(const Eigen::VectorXd& coords) {
  if (coords.size() == 0) throw std::invalid_argument("make_unit_vector: empty coordinate vector");
  if (!coords.allFinite()) throw std::invalid_argument("make_unit_vector: non-finite coordinate");
  const double norm = coords.norm();
  if (norm == 0.0) throw std::invalid_argument("make_unit_vector: degenerate direction (zero norm)");
  return UnitVector{coords / norm};
}

inline UnitVector make_unit_vector(const std::vector<double>& coords) {
  return make_unit_vector(Eigen::Map<const Eigen::VectorXd>(coords.data(),
                                                            static_cast<Eigen::Index>(coords.size())));
}

// Scalar product z1.z2, clamped to [-1, 1] when rounding pushes it out by
// at most kOverlapClampTol.
inline double overlap(const UnitVector& a, const UnitVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("overlap: dimension mismatch");
  double s = a.coords.dot(b.coords);
  if (s > 1.0) {
    if (s - 1.0 > kOverlapClampTol) throw std::invalid_argument("overlap: value exceeds 1 beyond tolerance");
    s = 1.0;
  } else if (s < -1.0) {
    if (-1.0 - s > kOverlapClampTol) throw std::invalid_argument("overlap: value below -1 beyond tolerance");
    s = -1.0;
  }
  return s;
}

// Shared immutable support: atom coordinates (rows) and the pairwise
// overlap table. Duplicated atoms are kept as separate rows.
struct Support {
  Eigen::MatrixXd points;  // M x N, unit rows
  Eigen::MatrixXd gram;    // M x M overlaps, clamped to [-1, 1]
};

class DiscreteMeasure {
 public:
  DiscreteMeasure(std::shared_ptr<const Support> support, Eigen::VectorXd weights)
      : support_(std::move(support)), weights_(std::move(weights)) {}

  int size() const { return static_cast<int>(weights_.size()); }
  int dim() const { return static_cast<int>(support_->points.cols()); }
  double weight(int a) const { return weights_[a]; }
  const Eigen::VectorXd& weights() const { return weights_; }
  UnitVector atom(int a) const { return UnitVector{support_->points.row(a).transpose()}; }
  const Eigen::MatrixXd& points() const { return support_->points; }
  const Eigen::MatrixXd& gram() const { return support_->gram; }
  const std::shared_ptr<const Support>& support() const { return support_; }

 private:
  std::shared_ptr<const Support> support_;
  Eigen::VectorXd weights_;
};

inline DiscreteMeasure make_measure(const std::vector<UnitVector>& atoms,
                                    const std::vector<double>& weights) {
  if (atoms.empty()) throw std::invalid_argument("make_measure: empty support");
  if (atoms.size() != weights.size())
    throw std::invalid_argument("make_measure: atoms/weights length mismatch");
  const int n = atoms.front().dim();
  for (const auto& z : atoms)
    if (z.dim() != n) throw std::invalid_argument("make_measure: dimension mismatch across atoms");

  Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i])) throw std::invalid_argument("make_measure: non-finite weight");
    if (weights[i] < 0.0) throw std::invalid_argument("make_measure: negative weight");
    w[static_cast<Eigen::Index>(i)] = weights[i];
  }
  const double total = w.sum();
  if (total <= 0.0) throw std::invalid_argument("make_measure: weights sum to zero");
  w /= total;

  auto support = std::make_shared<Support>();
  support->points.resize(static_cast<Eigen::Index>(atoms.size()), n);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    support->points.row(static_cast<Eigen::Index>(i)) = atoms[i].coords.transpose();
  support->gram = (support->points * support->points.transpose())
                      .cwiseMin(1.0)
                      .cwiseMax(-1.0);
  return DiscreteMeasure(std::move(support), std::move(w));
}

// Exponential tilt: weight_a' ~ weight_a * exp(field_a). The max shift
// cancels exactly in the normalization and keeps exp() in range for
// fields of size ~ v * sqrt(N).
inline DiscreteMeasure tilt(const DiscreteMeasure& G, const Eigen::VectorXd& field) {
  if (field.size() != G.size()) throw std::invalid_argument("tilt: field length mismatch");
  if (!field.allFinite()) throw std::invalid_argument("tilt: non-finite field value");
  const double shift = field.maxCoeff();
  Eigen::VectorXd w = G.weights().cwiseProduct((field.array() - shift).exp().matrix());
  const double total = w.sum();
  // the atom attaining the max keeps weight >= its prior weight, so total > 0
  w /= total;
  return DiscreteMeasure(G.support(), std::move(w));
}

// <z1.z2> under G x G equals the squared norm of the barycenter, hence is
// always nonnegative.
inline double mean_overlap(const DiscreteMeasure& G) {
  return (G.weights().transpose() * G.points()).squaredNorm();
}

// n i.i.d. categorical draws of atom indices.
inline std::vector<std::size_t> sample_replicas(const DiscreteMeasure& G, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_replicas: n must be >= 1");
  std::vector<double> cum(static_cast<std::size_t>(G.size()));
  double acc = 0.0;
  for (int a = 0; a < G.size(); ++a) {
    acc += G.weight(a);
    cum[static_cast<std::size_t>(a)] = acc;
  }
  std::vector<std::size_t> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    out[static_cast<std::size_t>(k)] =
        std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
  }
  return out;
}

// Bounded function of n replicas, evaluated through the support's overlap
// table; values must lie in [-1, 1].
struct ReplicaPredicate {
  int arity = 0;
  std::string name;
  std::function<double(std::span<const std::size_t>, const Eigen::MatrixXd&)> eval;
};

inline ReplicaPredicate constant_one(int n) {
  if (n < 1) throw std::invalid_argument("constant_one: arity must be >= 1");
  return ReplicaPredicate{n, "one",
                          [](std::span<const std::size_t>, const Eigen::MatrixXd&) { return 1.0; }};
}

// Indicator that replica 1 overlaps each of replicas 2..n at or below
// `threshold` (the f_n event; for n = 1 the product is empty and f_1 = 1).
inline ReplicaPredicate all_overlaps_with_first_leq(int n, double threshold) {
  if (n < 1) throw std::invalid_argument("all_overlaps_with_first_leq: arity must be >= 1");
  return ReplicaPredicate{
      n, "all_leq(n=" + std::to_string(n) + ")",
      [threshold](std::span<const std::size_t> idx, const Eigen::MatrixXd& gram) {
        for (std::size_t l = 1; l < idx.size(); ++l)
          if (gram(static_cast<Eigen::Index>(idx[0]), static_cast<Eigen::Index>(idx[l])) > threshold)
            return 0.0;
        return 1.0;
      }};
}

inline ReplicaPredicate pair_overlap_leq(double threshold) {
  return all_overlaps_with_first_leq(2, threshold);
}

// Exact product-measure average of `pred` by enumerating all size^arity
// index tuples. Guarded by an evaluation budget.
inline double product_probability_exact(const DiscreteMeasure& G, const ReplicaPredicate& pred,
                                        double budget = kDefaultEnumerationBudget) {
  if (pred.arity < 1) throw std::invalid_argument("product_probability_exact: arity must be >= 1");
  const int m = G.size();
  const double tuples = std::pow(static_cast<double>(m), pred.arity);
  if (tuples > budget)
    throw std::runtime_error(
        "product_probability_exact: enumeration budget exceeded; use product_probability_sampled");

  std::vector<std::size_t> idx(static_cast<std::size_t>(pred.arity), 0);
  const auto total = static_cast<std::uint64_t>(tuples + 0.5);
  double sum = 0.0;
  for (std::uint64_t t = 0; t < total; ++t) {
    double w = 1.0;
    for (std::size_t k = 0; k < idx.size(); ++k) w *= G.weight(static_cast<int>(idx[k]));
    if (w > 0.0) sum += w * pred.eval(idx, G.gram());
    // odometer increment
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (++idx[k] < static_cast<std::size_t>(m)) break;
      idx[k] = 0;
    }
  }
  return sum;
}

// Monte-Carlo fallback: mean and standard error of pred over sampled
// replica tuples.
inline std::pair<double, double> product_probability_sampled(const DiscreteMeasure& G,
                                                             const ReplicaPredicate& pred,
                                                             int draws, Rng& rng) {
  if (draws < 2) throw std::invalid_argument("product_probability_sampled: need >= 2 draws");
  RunningStats stats;
  for (int t = 0; t < draws; ++t) {
    const auto idx = sample_replicas(G, pred.arity, rng);
    stats.add(pred.eval(idx, G.gram()));
  }
  return {stats.mean(), stats.std_error()};
}

// G^{(x)2}{ overlap <= threshold } as an exact double sum.
inline double pair_probability_leq(const DiscreteMeasure& G, double threshold) {
  const int m = G.size();
  double sum = 0.0;
  for (int a = 0; a < m; ++a) {
    if (G.weight(a) == 0.0) continue;
    double row = 0.0;
    for (int b = 0; b < m; ++b)
      if (G.gram()(a, b) <= threshold) row += G.weight(b);
    sum += G.weight(a) * row;
  }
  return sum;
}

// --- named generators ------------------------------------------------------

inline DiscreteMeasure point_mass(int n) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  if (n < 1) throw std::invalid_argument("point_mass: dimension must be >= 1");
  e[0] = 1.0;
  return make_measure({UnitVector{e}}, {1.0});
}

inline DiscreteMeasure antipodal(int n) {
  if (n < 1) throw std::invalid_argument("antipodal: dimension must be >= 1");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[0] = 1.0;
  return make_measure({UnitVector{e}, UnitVector{-e}}, {0.5, 0.5});
}

// Regular simplex: N+1 equally weighted unit atoms in R^N with pairwise
// overlap -1/N. Built from the eigendecomposition of the target Gram
// matrix (1 + 1/N) I - (1/N) J restricted to its positive eigenspace.
inline DiscreteMeasure simplex(int n) {
  if (n < 1) throw std::invalid_argument("simplex: dimension must be >= 1");
  const int m = n + 1;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Constant(m, m, -1.0 / n);
  gram.diagonal().setOnes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  // eigenvalues ascending; the first is ~0, the remaining n equal 1 + 1/N
  Eigen::MatrixXd coords(m, n);
  for (int k = 0; k < n; ++k) {
    const double lam = std::max(es.eigenvalues()[k + 1], 0.0);
    coords.col(k) = es.eigenvectors().col(k + 1) * std::sqrt(lam);
  }
  std::vector<UnitVector> atoms;
  atoms.reserve(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) atoms.push_back(make_unit_vector(Eigen::VectorXd(coords.row(a).transpose())));
  return make_measure(atoms, std::vector<double>(static_cast<std::size_t>(m), 1.0));
}

// M atoms uniform on S^{N-1} with Dirichlet-like random weights.
inline DiscreteMeasure random_measure(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("random_measure: need N >= 1 and M >= 1");
  Rng rng(hash_mix(seed, 0x5bd1e995u));
  std::vector<UnitVector> atoms;
  std::vector<double> weights;
  atoms.reserve(static_cast<std::size_t>(m));
  weights.reserve(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    Eigen::VectorXd z(n);
    do {
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
    } while (z.norm() < 1e-8);
    atoms.push_back(make_unit_vector(z));
    weights.push_back(-std::log(1.0 - rng.uniform()));
  }
  return make_measure(atoms, weights);
}

// --- JSON serialization ----------------------------------------------------
// { "dim": N, "atoms": [ { "coords": [...], "weight": w } ] }
// Input weights may be unnormalized; coordinates are normalized onto the
// sphere on load.

inline nlohmann::json measure_to_json(const DiscreteMeasure& G) {
  nlohmann::json atoms = nlohmann::json::array();
  for (int a = 0; a < G.size(); ++a) {
    const auto z = G.atom(a);
    atoms.push_back({{"coords", std::vector<double>(z.coords.data(), z.coords.data() + z.dim())},
                     {"weight", G.weight(a)}});
  }
  return {{"dim", G.dim()}, {"atoms", atoms}};
}

inline DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.contains("dim") || !j.contains("atoms"))
    throw std::invalid_argument("measure_from_json: expects keys 'dim' and 'atoms'");
  const int n = j.at("dim").get<int>();
  std::vector<UnitVector> atoms;
  std::vector<double> weights;
  for (const auto& a : j.at("atoms")) {
    const auto coords = a.at("coords").get<std::vector<double>>();
    if (static_cast<int>(coords.size()) != n)
      throw std::invalid_argument("measure_from_json: atom dimension does not match 'dim'");
    atoms.push_back(make_unit_vector(coords));
    weights.push_back(a.at("weight").get<double>());
  }
  return make_measure(atoms, weights);
}

}  // namespace pspin
