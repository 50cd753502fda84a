// Streaming mean/variance reducer (Welford) shared by all estimators.
#pragma once

#include <cmath>
#include <cstdint>

namespace pspin {

class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }

  double sample_variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }

  double sample_sd() const { return std::sqrt(sample_variance()); }

  // standard error of the mean: sample sd / sqrt(count)
  double std_error() const {
    return n_ > 0 ? sample_sd() / std::sqrt(static_cast<double>(n_)) : 0.0;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace pspin
