#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "pspin/sphere.hpp"
#include "pspin/verify.hpp"
#include "pspin/verify_suite.hpp"

using namespace pspin;

TEST_CASE("convexity lemma on hand-picked pairs") {
  SECTION("identical quadratics") {
    ScalarFunctionPair pair{[](double x) { return x * x; }, [](double x) { return x * x; },
                            [](double x) { return 2.0 * x; }, [](double x) { return 2.0 * x; }};
    const auto rep = check_convex_derivative_bound(pair, 0.7, 0.5);
    CHECK(rep.pass);
    CHECK(rep.lhs == Catch::Approx(0.0).margin(1e-12));
    CHECK(rep.rhs == Catch::Approx(4.0 * 0.5).margin(1e-9));
  }

  SECTION("constant offset") {
    ScalarFunctionPair pair{[](double x) { return x * x; }, [](double x) { return x * x + 1.0; },
                            [](double x) { return 2.0 * x; }, [](double x) { return 2.0 * x; }};
    const auto rep = check_convex_derivative_bound(pair, 0.0, 1.0);
    CHECK(rep.pass);
    CHECK(rep.lhs == Catch::Approx(0.0).margin(1e-12));
    CHECK(rep.rhs == Catch::Approx(7.0).margin(1e-9));  // 4 + (1 + 1 + 1)
  }

  SECTION("smoothed absolute value against half a parabola") {
    ScalarFunctionPair pair{[](double x) { return std::sqrt(x * x + 1e-4); },
                            [](double x) { return x * x / 2.0; },
                            [](double x) { return x / std::sqrt(x * x + 1e-4); },
                            [](double x) { return x; }};
    for (int i = 0; i <= 40; ++i) {
      const double x = -2.0 + 4.0 * i / 40.0;
      CHECK(check_convex_derivative_bound(pair, x, 0.5).pass);
    }
  }

  SECTION("finite differences when derivatives are absent") {
    ScalarFunctionPair pair{[](double x) { return std::exp(0.7 * x); },
                            [](double x) { return x * x; }, nullptr, nullptr};
    CHECK(check_convex_derivative_bound(pair, 0.3, 0.25).pass);
  }

  SECTION("convexity precondition is enforced") {
    ScalarFunctionPair bad{[](double x) { return -x * x; }, [](double x) { return x * x; },
                           nullptr, nullptr};
    CHECK_THROWS_WITH(check_convex_derivative_bound(bad, 0.0, 1.0),
                      Catch::Matchers::ContainsSubstring("convexity precondition"));
    CHECK_THROWS_AS(check_convex_derivative_bound(bad, 0.0, -1.0), std::invalid_argument);
  }
}

TEST_CASE("GU bound report on canonical measures") {
  SECTION("point mass") {
    const auto rep = check_heavy_set_bound(point_mass(3), 3, 0.4, 0.5);
    CHECK(rep.pass);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.inputs.at("g_u") == 0.0);
  }

  SECTION("antipodal pair") {
    const auto rep = check_heavy_set_bound(antipodal(2), 2, 0.5, 0.4);
    CHECK(rep.pass);
    CHECK(rep.lhs == Catch::Approx(0.5).margin(1e-15));
    CHECK(rep.inputs.at("g_u") == 1.0);  // each atom sees the other with mass 1/2 >= 0.4
    CHECK(rep.rhs == Catch::Approx(1.4).margin(1e-12));
  }

  SECTION("fn inside the report equals exact enumeration") {
    for (int k = 0; k < 10; ++k) {
      const auto G = random_measure(2 + k % 4, 2 + k % 5, 640 + static_cast<std::uint64_t>(k));
      const auto rep = check_heavy_set_bound(G, 3, 0.3, 0.6);
      const double fn = product_probability_exact(G, all_overlaps_with_first_leq(3, -0.3));
      CHECK(rep.lhs == Catch::Approx(fn).margin(1e-12));
    }
  }
}

TEST_CASE("replica event envelope: golden section against a dense scan") {
  const auto bound = replica_event_envelope(10, 0.5);
  double grid_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000000; ++i) {
    const double gamma = i / 1e6;
    grid_min = std::min(grid_min, 2.0 * (1.0 - gamma) / 0.5 + std::exp(-9.0 * (1.0 - gamma)));
  }
  CHECK(std::abs(bound.value - grid_min) <= 1e-9);

  // h(1) = 1 caps the minimum, and the bound decays with n
  double prev = 2.0;
  for (int n : {2, 5, 10, 40, 160}) {
    const auto b = replica_event_envelope(n, 0.3);
    CHECK(b.value <= 1.0 + 1e-12);
    CHECK(b.value <= prev + 1e-12);
    prev = b.value;
  }
}

TEST_CASE("induction product bound") {
  SECTION("endpoints") {
    CHECK(check_induction_bound(1.0, 12).inputs.at("product") == 1.0);
    CHECK(check_induction_bound(0.0, 12).inputs.at("product") == 0.0);
  }

  SECTION("direct product cross-check and recursion") {
    const auto rep = check_induction_bound(0.5, 10);
    double direct = 0.5;
    for (int l = 2; l <= 9; ++l) direct *= (l - 0.5) / l;
    CHECK(rep.inputs.at("product") == Catch::Approx(direct).margin(1e-14));

    // P(a, n+1) = P(a, n) * (n - 1 + a) / n
    const auto next = check_induction_bound(0.5, 11);
    CHECK(next.inputs.at("product") ==
          Catch::Approx(rep.inputs.at("product") * (10.0 - 1.0 + 0.5) / 10.0).margin(1e-14));
  }

  SECTION("per-factor exponential inequality across the grid") {
    for (int ia = 0; ia <= 50; ++ia)
      CHECK(check_induction_bound(ia / 50.0, 60).pass);
  }

  SECTION("preconditions") {
    CHECK_THROWS_AS(check_induction_bound(1.5, 10), std::invalid_argument);
    CHECK_THROWS_AS(check_induction_bound(0.5, 2), std::invalid_argument);
  }
}

TEST_CASE("mean overlap identity report") {
  CHECK(check_mean_overlap_identity(antipodal(3)).pass);
  const auto pm = check_mean_overlap_identity(point_mass(2));
  CHECK(pm.pass);
  CHECK(pm.lhs == Catch::Approx(1.0).margin(1e-14));
  for (int k = 0; k < 30; ++k)
    CHECK(check_mean_overlap_identity(random_measure(1 + k % 7, 1 + k % 11,
                                                     111 + static_cast<std::uint64_t>(k)))
              .pass);
}

TEST_CASE("positivity inequality report") {
  CHECK(check_positivity_inequality(antipodal(2), 0.5).pass);
  CHECK(check_positivity_inequality(point_mass(3), 0.9).pass);
  CHECK_THROWS_AS(check_positivity_inequality(point_mass(3), 1.0), std::invalid_argument);
}

TEST_CASE("positivity chain arithmetic with measured inputs") {
  const auto rep = check_positivity_chain(0.12, 0.05, 5, 0.2, 0.3);
  CHECK(rep.pass);
  CHECK(rep.lhs == 0.12);
  CHECK(rep.inputs.at("envelope") > 0.0);
}

TEST_CASE("check reports serialize to the documented JSON shape") {
  const auto rep = check_positivity_inequality(antipodal(2), 0.3);
  const auto j = rep.to_json();
  CHECK(j.at("check") == "positivity_inequality");
  CHECK(j.contains("inputs"));
  CHECK(j.contains("lhs"));
  CHECK(j.contains("rhs"));
  CHECK(j.at("pass").get<bool>());
}

TEST_CASE("verification suite passes and prints deterministically") {
  std::ostringstream a, b;
  CHECK(verify_all(a));
  CHECK(verify_all(b));
  CHECK(a.str() == b.str());
  CHECK(a.str().find("FAIL") == std::string::npos);
}
