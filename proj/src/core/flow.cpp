#include "core/flow.hpp"

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace dppp {

namespace {

constexpr double kDegenerate = 1e-13;

}  // namespace

Profile Profile::zero() {
  auto z = [](double) { return 0.0; };
  return {"zero", 0.0, 0.0, z, z, z};
}

Profile Profile::bump(double center, double radius, double amplitude) {
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "bump radius must be positive");
  const double c = center, r = radius, a = amplitude;
  auto g = [=](double x) {
    const double u = (x - c) / r, s = 1.0 - u * u;
    return s > 0.0 ? a * std::exp(1.0 - 1.0 / s) : 0.0;
  };
  auto h = [=](double x) {  // g'/g in the u variable
    const double u = (x - c) / r, s = 1.0 - u * u;
    return -2.0 * u / (s * s);
  };
  auto dh = [=](double x) {
    const double u = (x - c) / r, s = 1.0 - u * u;
    return -2.0 / (s * s) - 8.0 * u * u / (s * s * s);
  };
  return {"bump", c - r, c + r, g, [=](double x) { return g(x) * h(x) / r; },
          [=](double x) { return g(x) * (h(x) * h(x) + dh(x)) / (r * r); }};
}

Profile Profile::sine_window(double lo, double hi, double amplitude) {
  if (!(hi > lo)) fail(ErrorCode::InvalidArgument, "sine window needs lo < hi");
  const double len = hi - lo, a = amplitude, k = std::numbers::pi / len;
  return {"sine_window", lo, hi, [=](double x) { return a * std::pow(std::sin(k * (x - lo)), 2); },
          [=](double x) { return a * k * std::sin(2.0 * k * (x - lo)); },
          [=](double x) { return 2.0 * a * k * k * std::cos(2.0 * k * (x - lo)); }};
}

Profile Profile::polynomial(double lo, double hi, std::vector<double> coefficients) {
  if (!(hi > lo)) fail(ErrorCode::InvalidArgument, "polynomial field needs lo < hi");
  auto poly = [coefficients](double x, int deriv) {
    double s = 0.0;
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
      const double kd = static_cast<double>(k);
      if (deriv == 0) s += coefficients[k] * std::pow(x, kd);
      else if (deriv == 1 && k >= 1) s += coefficients[k] * kd * std::pow(x, kd - 1.0);
      else if (deriv == 2 && k >= 2) s += coefficients[k] * kd * (kd - 1.0) * std::pow(x, kd - 2.0);
    }
    return s;
  };
  auto w = [=](double x) { return (x - lo) * (hi - x); };
  auto dw = [=](double x) { return lo + hi - 2.0 * x; };
  return {"polynomial", lo, hi, [=](double x) { return w(x) * w(x) * poly(x, 0); },
          [=](double x) { return 2.0 * w(x) * dw(x) * poly(x, 0) + w(x) * w(x) * poly(x, 1); },
          [=](double x) {
            const double q = w(x) * w(x), dq = 2.0 * w(x) * dw(x), d2q = 2.0 * dw(x) * dw(x) - 4.0 * w(x);
            return d2q * poly(x, 0) + 2.0 * dq * poly(x, 1) + q * poly(x, 2);
          }};
}

Flow::Flow(VectorField v, double t_max, double max_step) : v_(std::move(v)), t_max_(t_max), max_step_(max_step) {
  if (!(max_step_ > 0.0)) fail(ErrorCode::InvalidArgument, "flow step must be positive");
  // Group-property self-check at the largest admissible time.
  if (v_.hi > v_.lo) {
    for (int i = 1; i < 8; ++i) {
      const double x = v_.lo + (v_.hi - v_.lo) * i / 8.0;
      if (std::abs(forward(-t_max_, forward(t_max_, x)) - x) > 1e-6)
        fail(ErrorCode::StepTooLarge, "flow round trip deviates by more than 1e-6");
    }
  }
}

void Flow::integrate(double t, double& x, double* log_jac) const {
  if (t == 0.0 || !v_.inside(x)) return;
  const auto steps = static_cast<long>(std::ceil(std::abs(t) / max_step_));
  const double h = t / static_cast<double>(steps);
  double lj = 0.0;
  for (long s = 0; s < steps; ++s) {
    const double k1 = v_(x);
    const double k2 = v_(x + 0.5 * h * k1);
    const double k3 = v_(x + 0.5 * h * k2);
    const double k4 = v_(x + h * k3);
    if (log_jac) {
      // derivative of the RK4 step map, so the Jacobian matches forward() exactly
      const double d1 = v_.d1(x);
      const double d2 = v_.d1(x + 0.5 * h * k1) * (1.0 + 0.5 * h * d1);
      const double d3 = v_.d1(x + 0.5 * h * k2) * (1.0 + 0.5 * h * d2);
      const double d4 = v_.d1(x + h * k3) * (1.0 + h * d3);
      lj += std::log1p(h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4));
    }
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (log_jac) *log_jac = lj;
}

double Flow::forward(double t, double x) const {
  if (std::abs(t) > t_max_ + 1e-15) fail(ErrorCode::InvalidArgument, "|t| exceeds the flow's T_max");
  integrate(t, x, nullptr);
  return x;
}

double Flow::jacobian(double t, double x) const {
  if (std::abs(t) > t_max_ + 1e-15) fail(ErrorCode::InvalidArgument, "|t| exceeds the flow's T_max");
  double lj = 0.0;
  integrate(t, x, &lj);
  return std::exp(lj);
}

double Flow::image_jacobian(double t, double x) const { return 1.0 / jacobian(-t, x); }

Diffeomorphism Flow::at(double t) const {
  Flow copy = *this;
  return {[copy, t](double x) { return copy.forward(t, x); }, [copy, t](double y) { return copy.forward(-t, y); },
          [copy, t](double y) { return copy.jacobian(-t, y); }};
}

double density_p(const Flow& flow, double t, const GroundSpace& space, double x) {
  const double rx = space.rho(x);
  if (!(rx > 0.0)) fail(ErrorCode::ZeroDensity, "density vanishes at x");
  const double pre = flow.inverse(t, x);
  return space.rho(pre) / rx * flow.jacobian(-t, x);
}

std::vector<double> density_p(std::span<const std::size_t> sigma, const GroundSpace& space) {
  const std::size_t n = space.size();
  if (sigma.size() != n) fail(ErrorCode::InvalidArgument, "permutation has wrong length");
  std::vector<std::size_t> inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (sigma[i] >= n || inv[sigma[i]] != n) fail(ErrorCode::NotInvertible, "map sends two nodes to one");
    inv[sigma[i]] = i;
  }
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = space.mass(inv[i]) / space.mass(i);
  return p;
}

double det_alpha_j(const JKernel& j, std::span<const double> positions, const AlphaDetLimits& limits) {
  if (positions.empty()) return 1.0;
  return alpha_determinant(j.eval_matrix(positions), j.alpha(), limits);
}

namespace {

double det_alpha_nodes(const JKernel& j, std::span<const std::size_t> pts, const AlphaDetLimits& limits = {}) {
  SquareMatrix<double> a(pts.size());
  for (std::size_t r = 0; r < pts.size(); ++r)
    for (std::size_t c = 0; c < pts.size(); ++c) a(r, c) = j.at(pts[r], pts[c]);
  return alpha_determinant(a, j.alpha(), limits);
}

}  // namespace

double radon_nikodym_L(const JKernel& j, std::span<const std::size_t> sigma, const Configuration& xi) {
  if (xi.empty()) return 1.0;
  const auto& space = *j.kernel().space();
  const auto p = density_p(sigma, space);
  std::vector<std::size_t> inv(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) inv[sigma[i]] = i;
  const auto pts = xi.points();
  std::vector<std::size_t> pre(pts.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    prod *= p[pts[i]];
    pre[i] = inv[pts[i]];
  }
  const double den = det_alpha_nodes(j, pts);
  if (den <= kDegenerate) fail(ErrorCode::DegenerateDenominator, "det_alpha J(xi) <= 1e-13");
  return prod * det_alpha_nodes(j, pre) / den;
}

double radon_nikodym_L(const JKernel& j, const Flow& flow, double t, const Configuration& xi) {
  if (xi.empty()) return 1.0;
  const auto& space = *j.kernel().space();
  const auto pts = xi.points();
  std::vector<double> pre(pts.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double x = space.node(pts[i]);
    prod *= density_p(flow, t, space, x);
    pre[i] = flow.inverse(t, x);
  }
  const double den = det_alpha_nodes(j, pts);
  if (den <= kDegenerate) fail(ErrorCode::DegenerateDenominator, "det_alpha J(xi) <= 1e-13");
  return prod * det_alpha_j(j, pre) / den;
}

double b_v(const GroundSpace& space, const VectorField& v, std::span<const double> positions) {
  double s = 0.0;
  for (double x : positions) s += space.beta(x) * v(x) + v.d1(x);
  return s;
}

std::vector<double> positions_of(const GroundSpace& space, const Configuration& xi) {
  std::vector<double> out;
  for (std::size_t i : xi.points()) out.push_back(space.node(i));
  return out;
}

double potential_U(const JKernel& j, std::span<const double> positions, const AlphaDetLimits& limits) {
  if (positions.empty()) return 0.0;
  const double d = det_alpha_j(j, positions, limits);
  if (d <= kDegenerate) fail(ErrorCode::DegenerateConfiguration, "det_alpha J(xi) <= 0");
  return -std::log(d);
}

double potential_U(const JKernel& j, const Configuration& xi, const AlphaDetLimits& limits) {
  if (xi.empty()) return 0.0;
  const auto pts = xi.points();
  const double d = det_alpha_nodes(j, pts, limits);
  if (d <= kDegenerate) fail(ErrorCode::DegenerateConfiguration, "det_alpha J(xi) <= 0");
  return -std::log(d);
}

SquareMatrix<Dual> j_directional(const JKernel& j, std::span<const double> positions, const VectorField& v) {
  const std::size_t n = positions.size();
  const Eigen::MatrixXd val = j.eval_matrix(positions);
  const Eigen::MatrixXd d1 = j.d1_matrix(positions);
  SquareMatrix<Dual> a(n);
  std::vector<double> vx(n);
  for (std::size_t r = 0; r < n; ++r) vx[r] = v(positions[r]);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
      a(r, c) = Dual(0.5 * (val(ri, ci) + val(ci, ri)), d1(ri, ci) * vx[r] + d1(ci, ri) * vx[c]);
    }
  }
  return a;
}

SquareMatrix<Dual> j_directional(const JKernel& j, std::span<const std::size_t> nodes, const VectorField& v) {
  const auto& d1 = j.d1_nodes();
  if (d1.size() == 0) fail(ErrorCode::InvalidArgument, "kernel has no derivative");
  const auto& space = *j.kernel().space();
  const std::size_t n = nodes.size();
  SquareMatrix<Dual> a(n);
  std::vector<double> vx(n);
  for (std::size_t r = 0; r < n; ++r) vx[r] = v(space.node(nodes[r]));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto ri = static_cast<Eigen::Index>(nodes[r]), ci = static_cast<Eigen::Index>(nodes[c]);
      a(r, c) = Dual(j.at(nodes[r], nodes[c]), d1(ri, ci) * vx[r] + d1(ci, ri) * vx[c]);
    }
  }
  return a;
}

double grad_U(const JKernel& j, std::span<const double> positions, const VectorField& v, const AlphaDetLimits& limits) {
  if (positions.empty()) return 0.0;
  const Dual d = alpha_determinant(j_directional(j, positions, v), j.alpha(), limits);
  if (d.v <= kDegenerate) fail(ErrorCode::DegenerateConfiguration, "det_alpha J(xi) <= 0");
  return -d.d / d.v;
}

double grad_U(const JKernel& j, const Configuration& xi, const VectorField& v, const AlphaDetLimits& limits) {
  if (xi.empty()) return 0.0;
  const auto pts = xi.points();
  const Dual d = alpha_determinant(j_directional(j, std::span<const std::size_t>(pts), v), j.alpha(), limits);
  if (d.v <= kDegenerate) fail(ErrorCode::DegenerateConfiguration, "det_alpha J(xi) <= 0");
  return -d.d / d.v;
}

double grad_U_fd(const JKernel& j, std::span<const double> positions, const Flow& flow, double h,
                 const AlphaDetLimits& limits) {
  std::vector<double> plus(positions.size()), minus(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    plus[i] = flow.forward(h, positions[i]);
    minus[i] = flow.forward(-h, positions[i]);
  }
  return (potential_U(j, plus, limits) - potential_U(j, minus, limits)) / (2.0 * h);
}

CylindricalFunctional::CylindricalFunctional(Outer outer, std::vector<double> params, std::vector<Profile> inner)
    : outer_(outer), params_(std::move(params)), inner_(std::move(inner)) {
  const std::size_t n = inner_.size();
  switch (outer_) {
    case Outer::tanh:
      if (params_.size() != n + 1) fail(ErrorCode::InvalidArgument, "tanh needs n weights and an offset");
      break;
    case Outer::gaussian_bump:
      if (params_.size() != n + 1 || !(params_.back() > 0.0))
        fail(ErrorCode::InvalidArgument, "gaussian_bump needs n centres and a positive width");
      break;
    case Outer::polynomial:
      if (params_.size() < n + 1) fail(ErrorCode::InvalidArgument, "polynomial needs n weights and coefficients");
      break;
  }
}

CylindricalFunctional CylindricalFunctional::constant(double c) { return {Outer::polynomial, {c}, {}}; }

double CylindricalFunctional::outer_value(std::span<const double> s) const {
  const std::size_t n = inner_.size();
  double u = 0.0;
  switch (outer_) {
    case Outer::tanh:
      for (std::size_t i = 0; i < n; ++i) u += params_[i] * s[i];
      return std::tanh(u + params_[n]);
    case Outer::gaussian_bump: {
      const double w = params_[n];
      for (std::size_t i = 0; i < n; ++i) u += (s[i] - params_[i]) * (s[i] - params_[i]);
      return std::exp(-u / (2.0 * w * w));
    }
    case Outer::polynomial: {
      for (std::size_t i = 0; i < n; ++i) u += params_[i] * s[i];
      double v = 0.0;
      for (std::size_t k = params_.size(); k-- > n;) v = v * u + params_[k];
      return v;
    }
  }
  return 0.0;
}

void CylindricalFunctional::outer_gradient(std::span<const double> s, std::span<double> g) const {
  const std::size_t n = inner_.size();
  double u = 0.0;
  switch (outer_) {
    case Outer::tanh: {
      for (std::size_t i = 0; i < n; ++i) u += params_[i] * s[i];
      const double th = std::tanh(u + params_[n]);
      for (std::size_t i = 0; i < n; ++i) g[i] = params_[i] * (1.0 - th * th);
      return;
    }
    case Outer::gaussian_bump: {
      const double w = params_[n];
      const double f = outer_value(s);
      for (std::size_t i = 0; i < n; ++i) g[i] = -(s[i] - params_[i]) / (w * w) * f;
      return;
    }
    case Outer::polynomial: {
      for (std::size_t i = 0; i < n; ++i) u += params_[i] * s[i];
      double dv = 0.0;
      for (std::size_t k = params_.size(); k-- > n + 1;) dv = dv * u + params_[k] * static_cast<double>(k - n);
      for (std::size_t i = 0; i < n; ++i) g[i] = params_[i] * dv;
      return;
    }
  }
}

double CylindricalFunctional::operator()(std::span<const double> positions) const {
  std::vector<double> s(inner_.size(), 0.0);
  for (std::size_t i = 0; i < inner_.size(); ++i)
    for (double x : positions) s[i] += inner_[i](x);
  return outer_value(s);
}

double CylindricalFunctional::gradient(std::span<const double> positions, const VectorField& v) const {
  const std::size_t n = inner_.size();
  if (n == 0) return 0.0;
  std::vector<double> s(n, 0.0), g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (double x : positions) s[i] += inner_[i](x);
  outer_gradient(s, g);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dh = 0.0;
    for (double x : positions) dh += inner_[i].d1(x) * v(x);
    total += g[i] * dh;
  }
  return total;
}

}  // namespace dppp
