// Bounded test functions psi on [-1, 1], applied to replica overlaps.
#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pspin {

class TestFunction {
 public:
  TestFunction() = default;

  double operator()(double s) const { return fn_(s); }
  const std::string& name() const { return name_; }

  // psi(s) = 1{ s <= threshold }
  static TestFunction indicator_leq(double threshold) {
    TestFunction f;
    f.name_ = "indicator_leq(" + format(threshold) + ")";
    f.fn_ = [threshold](double s) { return s <= threshold ? 1.0 : 0.0; };
    return f;
  }

  // piecewise-linear ramp: 1 below threshold, 0 above threshold + width
  static TestFunction smoothed_indicator(double threshold, double width = 0.05) {
    if (!(width > 0.0)) throw std::invalid_argument("smoothed_indicator: width must be > 0");
    TestFunction f;
    f.name_ = "smoothed_indicator(" + format(threshold) + "," + format(width) + ")";
    f.fn_ = [threshold, width](double s) {
      if (s <= threshold) return 1.0;
      if (s >= threshold + width) return 0.0;
      return (threshold + width - s) / width;
    };
    return f;
  }

  static TestFunction monomial(int degree) {
    if (degree < 0) throw std::invalid_argument("monomial: degree must be >= 0");
    TestFunction f;
    f.name_ = "monomial(" + std::to_string(degree) + ")";
    f.fn_ = [degree](double s) { return std::pow(s, degree); };
    return f;
  }

  // linear interpolation of values tabulated on a uniform grid over [-1, 1]
  static TestFunction table(std::vector<double> values) {
    if (values.size() < 2) throw std::invalid_argument("table: need at least two values");
    for (double v : values)
      if (!(std::abs(v) <= 1.0)) throw std::invalid_argument("table: values must satisfy |v| <= 1");
    TestFunction f;
    f.name_ = "table(" + std::to_string(values.size()) + ")";
    f.fn_ = [values = std::move(values)](double s) {
      const double k = static_cast<double>(values.size() - 1);
      double t = (std::clamp(s, -1.0, 1.0) + 1.0) / 2.0 * k;
      const auto lo = static_cast<std::size_t>(std::min(t, k - 1.0) < 0.0 ? 0.0 : std::min(t, k - 1.0));
      const double frac = t - static_cast<double>(lo);
      return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
    };
    return f;
  }

 private:
  static std::string format(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  std::string name_ = "unset";
  std::function<double(double)> fn_ = [](double) { return 0.0; };
};

}  // namespace pspin
