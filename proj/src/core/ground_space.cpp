#include "core/ground_space.hpp"

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace dppp {

Density Density::uniform() {
  return {"uniform", [](double) { return 1.0; }, [](double) { return 0.0; }};
}

Density Density::exponential(double rate) {
  return {"exponential", [rate](double x) { return std::exp(-rate * x); }, [rate](double) { return -rate; }};
}

Density Density::affine(double a, double b) {
  if (a <= 0.0 || a + b <= 0.0) fail(ErrorCode::ZeroDensity, "affine density must be positive on [0,1]");
  return {"affine", [a, b](double x) { return a + b * x; }, [a, b](double x) { return b / (a + b * x); }};
}

const char* to_string(QuadratureRule rule) noexcept {
  switch (rule) {
    case QuadratureRule::midpoint: return "midpoint";
    case QuadratureRule::gauss_legendre: return "gauss_legendre";
    case QuadratureRule::discrete: return "discrete";
  }
  return "?";
}

GroundSpace::GroundSpace(std::vector<double> nodes, std::vector<double> weights, Density density,
                         QuadratureRule rule)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), density_(std::move(density)), rule_(rule) {
  if (nodes_.empty()) fail(ErrorCode::InvalidArgument, "ground space needs at least one node");
  if (nodes_.size() != weights_.size()) fail(ErrorCode::InvalidArgument, "nodes/weights size mismatch");
  masses_.resize(nodes_.size());
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (!(weights_[j] > 0.0) || !std::isfinite(weights_[j]))
      fail(ErrorCode::NegativeWeight, "quadrature weight " + std::to_string(j) + " is not positive");
    if (j > 0 && !(nodes_[j] > nodes_[j - 1])) fail(ErrorCode::InvalidArgument, "nodes must be strictly increasing");
    const double r = density_.value(nodes_[j]);
    if (!(r > 0.0)) fail(ErrorCode::ZeroDensity, "density vanishes at node " + std::to_string(j));
    masses_[j] = r * weights_[j];
  }
}

std::shared_ptr<const GroundSpace> GroundSpace::create(std::vector<double> nodes, std::vector<double> weights,
                                                       Density density, QuadratureRule rule) {
  return std::shared_ptr<const GroundSpace>(
      new GroundSpace(std::move(nodes), std::move(weights), std::move(density), rule));
}

std::shared_ptr<const GroundSpace> GroundSpace::midpoint(std::size_t n, Density density) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "midpoint rule needs n >= 1");
  std::vector<double> x(n), w(n, 1.0 / static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) x[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
  return create(std::move(x), std::move(w), std::move(density), QuadratureRule::midpoint);
}

std::shared_ptr<const GroundSpace> GroundSpace::gauss_legendre(std::size_t n, Density density) {
  std::vector<double> x, w;
  gauss_legendre_rule(n, x, w);
  return create(std::move(x), std::move(w), std::move(density), QuadratureRule::gauss_legendre);
}

std::shared_ptr<const GroundSpace> GroundSpace::discrete(std::vector<double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) fail(ErrorCode::InvalidArgument, "discrete space needs at least one node");
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
  return create(std::move(x), std::move(weights), Density::uniform(), QuadratureRule::discrete);
}

void gauss_legendre_rule(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "Gauss-Legendre rule needs n >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        const double kd = static_cast<double>(k);
        p0 = ((2.0 * kd - 1.0) * z * p1 - (kd - 1.0) * p2) / kd;
      }
      dp = nd * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    // map [-1,1] -> [0,1], ascending order
    nodes[i] = 0.5 * (1.0 - z);
    nodes[n - 1 - i] = 0.5 * (1.0 + z);
    weights[i] = 0.5 * w;
    weights[n - 1 - i] = 0.5 * w;
  }
}

}  // namespace dppp
