#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace dppp {

// Welford accumulator.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  void merge(const RunningStats& o) noexcept;

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const noexcept { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double z = 0.0;  // (chi2 - dof) / sqrt(2 dof)
  std::size_t cells = 0;
  bool passed = true;
};

// Pearson goodness of fit; cells with expected count < 5 are pooled.
// Passes when z <= 3.
ChiSquareResult chi_square(std::span<const double> observed, std::span<const double> probabilities);

}  // namespace dppp
