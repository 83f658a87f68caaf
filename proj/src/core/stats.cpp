#include "core/stats.hpp"

#include <algorithm>
#include <numeric>

#include "core/error.hpp"

namespace dppp {

void RunningStats::merge(const RunningStats& o) noexcept {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double total = static_cast<double>(n_ + o.n_);
  const double d = o.mean_ - mean_;
  mean_ += d * static_cast<double>(o.n_) / total;
  m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / total;
  n_ += o.n_;
}

ChiSquareResult chi_square(std::span<const double> observed, std::span<const double> probabilities) {
  if (observed.size() != probabilities.size()) fail(ErrorCode::InvalidArgument, "chi-square size mismatch");
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  std::vector<std::size_t> order(observed.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probabilities[a] < probabilities[b]; });

  std::vector<std::pair<double, double>> cells;  // (observed, expected)
  double pool_obs = 0.0, pool_exp = 0.0;
  for (std::size_t i : order) {
    const double e = probabilities[i] * n;
    if (pool_exp + e < 5.0 || (pool_exp > 0.0 && pool_exp < 5.0)) {
      pool_obs += observed[i];
      pool_exp += e;
      if (pool_exp >= 5.0) {
        cells.emplace_back(pool_obs, pool_exp);
        pool_obs = pool_exp = 0.0;
      }
      continue;
    }
    cells.emplace_back(observed[i], e);
  }
  if (pool_exp > 0.0 || pool_obs > 0.0) {
    if (cells.empty()) {
      cells.emplace_back(pool_obs, pool_exp);
    } else {
      cells.front().first += pool_obs;
      cells.front().second += pool_exp;
    }
  }

  ChiSquareResult r;
  r.cells = cells.size();
  for (const auto& [o, e] : cells)
    if (e > 0.0) r.statistic += (o - e) * (o - e) / e;
  r.dof = cells.size() > 1 ? cells.size() - 1 : 0;
  r.z = r.dof > 0 ? (r.statistic - static_cast<double>(r.dof)) / std::sqrt(2.0 * static_cast<double>(r.dof)) : 0.0;
  r.passed = r.z <= 3.0;
  return r;
}

}  // namespace dppp
