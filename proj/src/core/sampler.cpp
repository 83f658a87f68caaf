#include "core/sampler.hpp"

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/law.hpp"

namespace dppp {

namespace {

double uniform01(RngStream& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t draw_index(const Eigen::VectorXd& weights, RngStream& rng) {
  const double total = weights.sum();
  double u = uniform01(rng) * total;
  const auto n = weights.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    u -= weights(i);
    if (u < 0.0) return static_cast<std::size_t>(i);
  }
  for (Eigen::Index i = n - 1; i >= 0; --i)
    if (weights(i) > 0.0) return static_cast<std::size_t>(i);
  return static_cast<std::size_t>(n - 1);
}

// Projection DPP on the column span of v (orthonormal columns).
std::vector<std::size_t> sample_projection(Eigen::MatrixXd v, RngStream& rng) {
  std::vector<std::size_t> out;
  while (v.cols() > 0) {
    const Eigen::VectorXd p = v.rowwise().squaredNorm();
    const std::size_t i = draw_index(p, rng);
    out.push_back(i);
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::Index pivot = 0;
    v.row(row).cwiseAbs().maxCoeff(&pivot);
    const Eigen::VectorXd col = v.col(pivot);
    // Remove the pivot column and zero row i in the others.
    Eigen::MatrixXd next(v.rows(), v.cols() - 1);
    for (Eigen::Index c = 0, d = 0; c < v.cols(); ++c) {
      if (c == pivot) continue;
      next.col(d++) = v.col(c) - (v(row, c) / col(row)) * col;
    }
    // Re-orthonormalise (modified Gram-Schmidt).
    for (Eigen::Index c = 0; c < next.cols(); ++c) {
      for (Eigen::Index d = 0; d < c; ++d) next.col(c) -= next.col(d).dot(next.col(c)) * next.col(d);
      next.col(c).normalize();
    }
    v = std::move(next);
  }
  return out;
}

}  // namespace

Configuration sample_dpp_scaled(const KernelMatrix& k, double scale, RngStream& rng) {
  if (!(scale >= 0.0 && scale <= 1.0)) fail(ErrorCode::InvalidArgument, "DPP scale must lie in [0,1]");
  const auto& lam = k.eigenvalues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < lam.size(); ++j)
    if (uniform01(rng) < scale * lam(j)) keep.push_back(j);
  if (keep.empty()) return {};
  Eigen::MatrixXd v(k.eigenvectors().rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = k.eigenvectors().col(keep[c]);
  const auto pts = sample_projection(std::move(v), rng);
  return Configuration::from_indices(pts);
}

Configuration sample_dpp(const KernelMatrix& k, RngStream& rng) { return sample_dpp_scaled(k, 1.0, rng); }

Configuration sample_cox(const KernelMatrix& k, double scale, RngStream& rng) {
  const auto n = static_cast<Eigen::Index>(k.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index j = 0; j < n; ++j) z(j) = normal(rng);
  const Eigen::VectorXd y = k.eigenvectors() * (k.eigenvalues() * scale).cwiseSqrt().cwiseProduct(z);
  std::vector<unsigned> counts(static_cast<std::size_t>(n), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mean = y(j) * y(j);
    if (mean > 0.0) counts[static_cast<std::size_t>(j)] = std::poisson_distribution<unsigned>(mean)(rng);
  }
  return Configuration::from_counts(counts);
}

LayeredConfiguration sample_alpha(const KernelMatrix& k, const AlphaParameter& alpha, RngStream& rng) {
  LayeredConfiguration out;
  const std::int64_t m = alpha.layers();
  if (m == 0) fail(ErrorCode::UnsupportedAlpha, "alpha = 0 has no layered sampler; use sample_poisson");
  const double scale = 1.0 / static_cast<double>(m);
  const bool determinantal = alpha.kind() == AlphaParameter::Kind::determinantal_family;
  for (std::int64_t l = 0; l < m; ++l) {
    out.layers.push_back(determinantal ? sample_dpp_scaled(k, scale, rng) : sample_cox(k, scale, rng));
    out.merged = out.merged.plus(out.layers.back());
  }
  return out;
}

Configuration sample_poisson(const KernelMatrix& k, RngStream& rng) {
  std::vector<unsigned> counts(k.size(), 0);
  for (std::size_t j = 0; j < k.size(); ++j) {
    const double mean = k.weighted()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    if (mean > 0.0) counts[j] = std::poisson_distribution<unsigned>(mean)(rng);
  }
  return Configuration::from_counts(counts);
}

Configuration conditional_thin(const Configuration& omega, int s, const JKernel& j1, RngStream& rng) {
  if (s == 1 || omega.empty()) return omega;
  const auto pts = omega.points();
  const auto d = subset_determinants(j1, pts);
  const auto table = thinning_table<double>(d, pts.size(), s);
  Eigen::VectorXd w(static_cast<Eigen::Index>(table.size()));
  for (std::size_t i = 0; i < table.size(); ++i) w(static_cast<Eigen::Index>(i)) = std::max(table[i], 0.0);
  const std::size_t mask = draw_index(w, rng);
  std::vector<std::size_t> eta;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (mask & (std::size_t{1} << i)) eta.push_back(pts[i]);
  return Configuration::from_indices(eta);
}

Configuration conditional_thin(const Configuration& omega, int s, const KernelMatrix& k1, RngStream& rng) {
  return conditional_thin(omega, s, j_operator(k1, -1.0), rng);
}

}  // namespace dppp
