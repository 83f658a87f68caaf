#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/alpha_det.hpp"
#include "core/configuration.hpp"
#include "core/kernel.hpp"

namespace dppp {

// Smooth scalar profile on [0,1] vanishing outside [lo, hi] together with its
// first derivative. Serves as vector field v and as inner test function h.
struct Profile {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;

  double operator()(double x) const { return inside(x) ? f(x) : 0.0; }
  double d1(double x) const { return inside(x) ? df(x) : 0.0; }
  double d2(double x) const { return inside(x) ? d2f(x) : 0.0; }
  bool inside(double x) const noexcept { return x > lo && x < hi; }

  static Profile zero();
  // A exp(1 - 1/(1 - u^2)), u = (x - c)/r
  static Profile bump(double center, double radius, double amplitude);
  // A sin^2(pi (x - a)/(b - a)) on [a, b]
  static Profile sine_window(double a, double b, double amplitude);
  // (x - a)^2 (b - x)^2 sum_k c_k x^k on [a, b]
  static Profile polynomial(double a, double b, std::vector<double> coefficients);
};

using VectorField = Profile;

// Flow of dx/dt = v(x) by classical RK4 with step t / ceil(|t| / max_step).
class Flow {
 public:
  explicit Flow(VectorField v, double t_max = 1.0, double max_step = 0.01);

  const VectorField& field() const noexcept { return v_; }
  double t_max() const noexcept { return t_max_; }

  double forward(double t, double x) const;
  double inverse(double t, double y) const { return forward(-t, y); }
  // eta_{r,t}(x) = x - int_r^t v(eta_{s,t}(x)) ds
  double inverse_flow(double r, double t, double x) const { return forward(r - t, x); }
  // phi_t'(x) = exp(int_0^t v'(phi_s x) ds)
  double jacobian(double t, double x) const;
  // exp(int_0^t v'(eta_{r,t}(x)) dr), i.e. phi_t' evaluated at phi_t^{-1}(x)
  double image_jacobian(double t, double x) const;

  Diffeomorphism at(double t) const;

 private:
  void integrate(double t, double& x, double* log_jac) const;

  VectorField v_;
  double t_max_;
  double max_step_;
};

// p(x) = d lambda_phi / d lambda = rho(phi^{-1} x) / rho(x) / phi'(phi^{-1} x).
double density_p(const Flow& flow, double t, const GroundSpace& space, double x);
// Discrete regime: p_i = mu_{sigma^{-1}(i)} / mu_i.
std::vector<double> density_p(std::span<const std::size_t> sigma, const GroundSpace& space);

// det_alpha J(x_i, x_j) at arbitrary positions (off-node via the resolvent form).
double det_alpha_j(const JKernel& j, std::span<const double> positions, const AlphaDetLimits& limits = {});

// L(xi) = prod p(x) det_alpha J^phi(xi) / det_alpha J(xi) for node configurations.
double radon_nikodym_L(const JKernel& j, std::span<const std::size_t> sigma, const Configuration& xi);
double radon_nikodym_L(const JKernel& j, const Flow& flow, double t, const Configuration& xi);

// B_v(xi) = sum_x beta(x) v(x) + v'(x)
double b_v(const GroundSpace& space, const VectorField& v, std::span<const double> positions);

// U(xi) = -log det_alpha J(xi)
double potential_U(const JKernel& j, std::span<const double> positions, const AlphaDetLimits& limits = {});
double potential_U(const JKernel& j, const Configuration& xi, const AlphaDetLimits& limits = {});
// d/dt U(phi_t xi) at t = 0 from the closed-form derivative of J.
double grad_U(const JKernel& j, std::span<const double> positions, const VectorField& v,
              const AlphaDetLimits& limits = {});
// Same for atoms on the nodes, using the cached node derivative matrix.
double grad_U(const JKernel& j, const Configuration& xi, const VectorField& v, const AlphaDetLimits& limits = {});
// Central difference (U(phi_h xi) - U(phi_{-h} xi)) / 2h.
double grad_U_fd(const JKernel& j, std::span<const double> positions, const Flow& flow, double h = 1e-4,
                 const AlphaDetLimits& limits = {});

// Dual matrix J(x_i, x_j) + eps (d1 J(x_i,x_j) v(x_i) + d1 J(x_j,x_i) v(x_j)).
SquareMatrix<Dual> j_directional(const JKernel& j, std::span<const double> positions, const VectorField& v);
SquareMatrix<Dual> j_directional(const JKernel& j, std::span<const std::size_t> nodes, const VectorField& v);

std::vector<double> positions_of(const GroundSpace& space, const Configuration& xi);

// F(xi) = f(<h_1, xi>, ..., <h_n, xi>)
class CylindricalFunctional {
 public:
  enum class Outer { tanh, gaussian_bump, polynomial };

  CylindricalFunctional(Outer outer, std::vector<double> params, std::vector<Profile> inner);
  CylindricalFunctional(const CylindricalFunctional&) = default;
  CylindricalFunctional& operator=(const CylindricalFunctional&) = default;

  static CylindricalFunctional constant(double c);

  double operator()(std::span<const double> positions) const;
  // sum_i d_i f(...) sum_x h_i'(x) v(x)
  double gradient(std::span<const double> positions, const VectorField& v) const;

  std::size_t arity() const noexcept { return inner_.size(); }
  Outer outer() const noexcept { return outer_; }
  const std::vector<double>& params() const noexcept { return params_; }
  const std::vector<Profile>& inner() const noexcept { return inner_; }

 private:
  double outer_value(std::span<const double> s) const;
  void outer_gradient(std::span<const double> s, std::span<double> g) const;

  Outer outer_;
  std::vector<double> params_;
  std::vector<Profile> inner_;
};

}  // namespace dppp
