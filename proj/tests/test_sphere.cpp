#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "pspin/rng.hpp"
#include "pspin/sphere.hpp"

using namespace pspin;

namespace {

DiscreteMeasure antipodal_weighted(double w0, double w1) {
  Eigen::Vector2d e1(1.0, 0.0);
  return make_measure({UnitVector{e1}, UnitVector{-e1}}, {w0, w1});
}

}  // namespace

TEST_CASE("make_unit_vector normalizes and rejects degenerate input") {
  const auto z = make_unit_vector(std::vector<double>{3.0, 4.0});
  CHECK(z.coords[0] == Catch::Approx(0.6).margin(1e-15));
  CHECK(z.coords[1] == Catch::Approx(0.8).margin(1e-15));
  CHECK(std::abs(z.coords.norm() - 1.0) <= 1e-12);

  const auto e1 = make_unit_vector(std::vector<double>{1.0, 0.0, 0.0});
  CHECK(e1.coords[0] == 1.0);

  CHECK_THROWS_AS(make_unit_vector(std::vector<double>{0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_unit_vector(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("overlap computes the scalar product with clamping") {
  const auto e1 = make_unit_vector(std::vector<double>{1.0, 0.0});
  const auto m1 = make_unit_vector(std::vector<double>{-1.0, 0.0});
  const auto z = make_unit_vector(std::vector<double>{0.6, 0.8});
  CHECK(overlap(e1, e1) == 1.0);
  CHECK(overlap(e1, m1) == -1.0);
  CHECK(overlap(z, e1) == Catch::Approx(0.6).margin(1e-15));

  const auto e3 = make_unit_vector(std::vector<double>{1.0, 0.0, 0.0});
  CHECK_THROWS_AS(overlap(e1, e3), std::invalid_argument);
}

TEST_CASE("make_measure normalizes weights and validates") {
  const auto m = antipodal_weighted(1.0, 1.0);
  CHECK(m.weight(0) == 0.5);
  CHECK(m.weight(1) == 0.5);

  const auto single = make_measure({make_unit_vector(std::vector<double>{1.0})}, {7.0});
  CHECK(single.weight(0) == 1.0);

  Eigen::Vector2d e1(1.0, 0.0), e2(0.0, 1.0);
  CHECK_THROWS_AS(make_measure({UnitVector{e1}, UnitVector{e2}}, {1.0, -1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_measure({UnitVector{e1}}, {0.0}), std::invalid_argument);
}

TEST_CASE("tilt reweights by exp(field) with exact shift cancellation") {
  const auto m = antipodal_weighted(0.5, 0.5);

  SECTION("zero field is the identity") {
    const auto t = tilt(m, Eigen::Vector2d(0.0, 0.0));
    CHECK(t.weight(0) == 0.5);
    CHECK(t.weight(1) == 0.5);
  }

  SECTION("constant fields cancel exactly") {
    // representable values, so field + c carries no rounding
    const Eigen::Vector2d field(0.5, -1.25);
    const auto a = tilt(m, field);
    const auto b = tilt(m, field + Eigen::Vector2d(4.0, 4.0));
    CHECK(a.weight(0) == b.weight(0));
    CHECK(a.weight(1) == b.weight(1));
  }

  SECTION("direct ratio") {
    const auto t = tilt(m, Eigen::Vector2d(std::log(3.0), 0.0));
    CHECK(t.weight(0) == Catch::Approx(0.75).margin(1e-14));
    CHECK(t.weight(1) == Catch::Approx(0.25).margin(1e-14));
  }

  SECTION("projective action within 1e-12") {
    Rng rng(99);
    const auto G = random_measure(3, 6, 17);
    Eigen::VectorXd f(G.size()), g(G.size());
    for (int a = 0; a < G.size(); ++a) {
      f[a] = 3.0 * rng.normal();
      g[a] = 2.0 * rng.normal();
    }
    const auto lhs = tilt(tilt(G, f), g);
    const auto rhs = tilt(G, f + g);
    for (int a = 0; a < G.size(); ++a)
      CHECK(lhs.weight(a) == Catch::Approx(rhs.weight(a)).margin(1e-12));
  }

  SECTION("large fields do not overflow") {
    const auto t = tilt(m, Eigen::Vector2d(800.0, -800.0));
    CHECK(t.weight(0) == 1.0);
    CHECK(t.weight(1) <= 1e-300);
  }

  CHECK_THROWS_AS(tilt(m, Eigen::Vector2d(1.0, std::numeric_limits<double>::infinity())),
                  std::invalid_argument);
  CHECK_THROWS_AS(tilt(m, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("product_probability_exact enumerates replica tuples") {
  const auto m = antipodal_weighted(1.0, 1.0);
  CHECK(product_probability_exact(m, pair_overlap_leq(-0.5)) == Catch::Approx(0.5).margin(1e-15));

  // point mass with a predicate that vanishes on the diagonal
  const auto pm = point_mass(2);
  CHECK(product_probability_exact(pm, pair_overlap_leq(-0.1)) == 0.0);

  // orthonormal triple: all pairwise overlaps are 0 or 1
  std::vector<UnitVector> frame;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[i] = 1.0;
    frame.push_back(UnitVector{e});
  }
  const auto ortho = make_measure(frame, {1.0, 1.0, 1.0});
  CHECK(product_probability_exact(ortho, pair_overlap_leq(-0.1)) == 0.0);

  // budget guard
  const auto big = random_measure(2, 40, 5);
  CHECK_THROWS_AS(product_probability_exact(big, all_overlaps_with_first_leq(5, -0.1), 1e5),
                  std::runtime_error);
}

TEST_CASE("product_probability_exact agrees with direct double sums") {
  Rng seeds(3);
  for (int k = 0; k < 20; ++k) {
    const auto G = random_measure(2 + k % 4, 2 + k % 6, 1000 + static_cast<std::uint64_t>(k));
    const double eps = 0.1 + 0.8 * (k % 5) / 5.0;
    const double via_enum = product_probability_exact(G, pair_overlap_leq(-eps));
    const double via_sum = pair_probability_leq(G, -eps);
    CHECK(via_enum == Catch::Approx(via_sum).margin(1e-12));
  }
}

TEST_CASE("sample_replicas draws by weight, reproducibly") {
  const auto pm = point_mass(2);
  Rng rng(5);
  const auto idx = sample_replicas(pm, 3, rng);
  CHECK(idx == std::vector<std::size_t>{0, 0, 0});

  const auto lopsided = antipodal_weighted(1.0, 0.0);
  Rng rng2(5);
  CHECK(sample_replicas(lopsided, 1, rng2)[0] == 0);

  const auto fair = antipodal_weighted(1.0, 1.0);
  Rng rng3(123);
  int count0 = 0;
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) count0 += sample_replicas(fair, 1, rng3)[0] == 0 ? 1 : 0;
  const double freq = static_cast<double>(count0) / draws;
  CHECK(std::abs(freq - 0.5) <= 0.01);  // binomial se ~ 0.0016

  Rng a(77), b(77);
  CHECK(sample_replicas(fair, 10, a) == sample_replicas(fair, 10, b));
}

TEST_CASE("mean_overlap equals the squared barycenter norm and is nonnegative") {
  CHECK(mean_overlap(antipodal_weighted(1.0, 1.0)) == Catch::Approx(0.0).margin(1e-15));
  CHECK(mean_overlap(point_mass(5)) == Catch::Approx(1.0).margin(1e-14));
  CHECK(mean_overlap(antipodal_weighted(0.75, 0.25)) == Catch::Approx(0.25).margin(1e-14));

  for (int k = 0; k < 50; ++k) {
    const auto G = random_measure(1 + k % 6, 1 + k % 9, 400 + static_cast<std::uint64_t>(k));
    const double mo = mean_overlap(G);
    CHECK(mo >= 0.0);
    double double_sum = 0.0;
    for (int a = 0; a < G.size(); ++a)
      for (int b = 0; b < G.size(); ++b) double_sum += G.weight(a) * G.weight(b) * G.gram()(a, b);
    CHECK(mo == Catch::Approx(double_sum).margin(1e-12));
  }
}

TEST_CASE("positivity inequality holds by enumeration on random measures") {
  for (int k = 0; k < 100; ++k) {
    const auto G = random_measure(1 + k % 5, 1 + k % 8, 900 + static_cast<std::uint64_t>(k));
    for (double eps : {0.1, 0.4, 0.8}) {
      const double p_gt = 1.0 - pair_probability_leq(G, -eps);
      CHECK(eps <= (1.0 + eps) * p_gt + 1e-12);
    }
  }
}

TEST_CASE("GU inequality holds for tilted and untilted measures") {
  Rng rng(2024);
  for (int k = 0; k < 30; ++k) {
    auto G = random_measure(2 + k % 4, 2 + k % 6, 4200 + static_cast<std::uint64_t>(k));
    if (k % 2 == 1) {
      Eigen::VectorXd field(G.size());
      for (int a = 0; a < G.size(); ++a) field[a] = 2.0 * rng.normal();
      G = tilt(G, field);
    }
    for (const int n : {2, 3, 5}) {
      for (const double gamma : {0.25, 0.5, 0.75}) {
        const double eps = 0.2 + 0.5 * (k % 3) / 3.0;
        const double fn = product_probability_exact(G, all_overlaps_with_first_leq(n, -eps));
        double g_u = 0.0;
        for (int a = 0; a < G.size(); ++a) {
          double q = 0.0;
          for (int b = 0; b < G.size(); ++b)
            if (G.gram()(a, b) <= -eps) q += G.weight(b);
          if (q >= gamma) g_u += G.weight(a);
        }
        CHECK(fn <= g_u + std::pow(gamma, n - 1) + 1e-12);
      }
    }
  }
}

TEST_CASE("named generators have the advertised geometry") {
  const auto anti = antipodal(8);
  CHECK(anti.size() == 2);
  CHECK(anti.gram()(0, 1) == -1.0);

  for (int n : {1, 2, 3, 6}) {
    const auto s = simplex(n);
    CHECK(s.size() == n + 1);
    for (int a = 0; a < s.size(); ++a) {
      CHECK(std::abs(s.gram()(a, a) - 1.0) <= 1e-12);
      for (int b = 0; b < a; ++b)
        CHECK(s.gram()(a, b) == Catch::Approx(-1.0 / n).margin(1e-10));
    }
  }

  const auto r = random_measure(4, 7, 11);
  CHECK(r.size() == 7);
  CHECK(r.dim() == 4);
  CHECK(std::abs(r.weights().sum() - 1.0) <= 1e-12);
  // reproducible under the same seed
  const auto r2 = random_measure(4, 7, 11);
  CHECK((r.points() - r2.points()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("measures round-trip through JSON with unnormalized weights") {
  const auto G = random_measure(3, 4, 66);
  const auto j = measure_to_json(G);
  const auto back = measure_from_json(j);
  REQUIRE(back.size() == G.size());
  for (int a = 0; a < G.size(); ++a) {
    CHECK(back.weight(a) == Catch::Approx(G.weight(a)).margin(1e-14));
    CHECK((back.atom(a).coords - G.atom(a).coords).cwiseAbs().maxCoeff() <= 1e-14);
  }

  const auto j2 = nlohmann::json{
      {"dim", 2},
      {"atoms",
       {{{"coords", {1.0, 0.0}}, {"weight", 3.0}}, {{"coords", {-1.0, 0.0}}, {"weight", 1.0}}}}};
  const auto m = measure_from_json(j2);
  CHECK(m.weight(0) == Catch::Approx(0.75).margin(1e-14));

  CHECK_THROWS_AS(measure_from_json(nlohmann::json{{"dim", 3}}), std::invalid_argument);
}
