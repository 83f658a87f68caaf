#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/alpha.hpp"
#include "core/ground_space.hpp"

namespace dppp {

// Symmetric kernel K(x, y) on [0,1] with its first-argument partial derivative.
struct KernelFunction {
  std::string name;
  std::function<double(double, double)> value;
  std::function<double(double, double)> d1;  // empty when not differentiable

  bool differentiable() const noexcept { return static_cast<bool>(d1); }
  KernelFunction scaled(double c) const;

  // c exp(-(x-y)^2 / l^2)
  static KernelFunction gaussian(double c, double length);
  // c exp(-|x-y| / l); d1 taken as 0 on the diagonal
  static KernelFunction exponential(double c, double length);
  // sum_k c_k phi_k(x) phi_k(y), phi_0 = 1, phi_k = sqrt(2) cos(k pi x)
  static KernelFunction finite_rank(std::vector<double> coefficients);
  static KernelFunction constant(double c);
};

enum class FredholmMethod { eigen, trace_series };

// Weighted kernel operator on a GroundSpace:
//   raw_ij = K(x_i, x_j),  weighted_ij = sqrt(mu_i) K(x_i, x_j) sqrt(mu_j).
// The spectral decomposition is computed and validated at construction.
class KernelMatrix {
 public:
  static KernelMatrix build(SpacePtr space, KernelFunction fn);
  // Node values only; no off-node evaluation.
  static KernelMatrix from_raw(SpacePtr space, Eigen::MatrixXd raw, std::string name = "explicit_matrix");

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(raw_.rows()); }
  const Eigen::MatrixXd& raw() const noexcept { return raw_; }
  const Eigen::MatrixXd& weighted() const noexcept { return weighted_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }
  double max_eigenvalue() const;
  double trace() const { return weighted_.trace(); }
  const std::string& name() const noexcept { return name_; }

  const std::optional<KernelFunction>& function() const noexcept { return fn_; }
  bool has_function() const noexcept { return fn_.has_value(); }
  // Off-node evaluation; throws InvalidArgument without a kernel function.
  double eval(double x, double y) const;
  double d1(double x, double y) const;

  KernelMatrix scaled(double c) const;

 private:
  KernelMatrix(SpacePtr space, Eigen::MatrixXd raw, std::optional<KernelFunction> fn, std::string name);

  SpacePtr space_;
  Eigen::MatrixXd raw_;
  Eigen::MatrixXd weighted_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  std::optional<KernelFunction> fn_;
  std::string name_;
};

// Builds K and rescales it so that the largest weighted eigenvalue equals target.
KernelMatrix build_kernel(SpacePtr space, const KernelFunction& fn, std::optional<double> target_max_eigenvalue = {});

// Det(I + T) for a symmetric matrix T.
double fredholm_det_matrix(const Eigen::MatrixXd& t, FredholmMethod method = FredholmMethod::eigen);
// Trace series for Det(I + T) given an interval containing the spectrum of T;
// shifts by a scalar multiple of I when the interval reaches 1.
double fredholm_det_series(const Eigen::MatrixXd& t, double lower, double upper);
// Det(I + alpha K~).
double fredholm_det(const KernelMatrix& k, double alpha, FredholmMethod method = FredholmMethod::eigen);
double fredholm_det(const KernelMatrix& k, const AlphaParameter& alpha, FredholmMethod method = FredholmMethod::eigen);

// J = (I + alpha K)^{-1} K. Off the nodes J is extended by the resolvent form
//   J(x, y) = K(x, y) - alpha k_x^T D^{1/2} (I + alpha K~)^{-1} D^{1/2} k_y,
// which reproduces the raw node values exactly.
class JKernel {
 public:
  JKernel(const KernelMatrix& k, double alpha);

  double alpha() const noexcept { return alpha_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(raw_.rows()); }
  const Eigen::MatrixXd& weighted() const noexcept { return weighted_; }
  const Eigen::MatrixXd& raw() const noexcept { return raw_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  double condition_number() const noexcept { return condition_; }
  const KernelMatrix& kernel() const noexcept { return k_; }

  double at(std::size_t i, std::size_t j) const { return raw_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
  double eval(double x, double y) const;
  double d1(double x, double y) const;
  bool has_function() const noexcept { return k_.has_function(); }

  // [J(x_r, x_c)] and [d1 J(x_r, x_c)] for a list of points.
  Eigen::MatrixXd eval_matrix(std::span<const double> xs) const;
  Eigen::MatrixXd d1_matrix(std::span<const double> xs) const;
  // d1 J(x_i, x_j) on the nodes; empty when the kernel has no derivative.
  const Eigen::MatrixXd& d1_nodes() const noexcept { return d1_nodes_; }

 private:
  Eigen::MatrixXd columns(std::span<const double> xs) const;
  Eigen::MatrixXd columns_d1(std::span<const double> xs) const;

  Eigen::VectorXd column(double x) const;
  Eigen::VectorXd column_d1(double x) const;

  KernelMatrix k_;
  double alpha_;
  Eigen::MatrixXd weighted_;
  Eigen::MatrixXd raw_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd resolvent_;  // D^{1/2} (I + alpha K~)^{-1} D^{1/2}
  Eigen::MatrixXd d1_nodes_;
  double condition_;
};

JKernel j_operator(const KernelMatrix& k, double alpha);
JKernel j_operator(const KernelMatrix& k, const AlphaParameter& alpha);

// raw'(x, y) = sqrt(g(x)) K(x, y) sqrt(g(y)) on the nodes.
KernelMatrix rescale(const KernelMatrix& k, std::span<const double> g);
// Weighted matrix of K[g]: sqrt(g_i) K~_ij sqrt(g_j), without spectral checks.
Eigen::MatrixXd rescaled_weighted(const KernelMatrix& k, std::span<const double> g);

// (K, lambda = rho dm) -> (K[rho], m) on the same nodes and Lebesgue weights.
KernelMatrix transfer_density(const KernelMatrix& k);

// Discrete regime: phi acts as the index permutation i -> sigma[i].
// Returns K^phi with raw'_ij = raw_{sigma^{-1}(i), sigma^{-1}(j)} over the
// image space whose masses are mu'_i = mu_{sigma^{-1}(i)}.
KernelMatrix pushforward(const KernelMatrix& k, std::span<const std::size_t> sigma);

// A diffeomorphism of [0,1] with its inverse and the inverse's derivative.
struct Diffeomorphism {
  std::function<double(double)> forward;
  std::function<double(double)> inverse;
  std::function<double(double)> inverse_derivative;
};

// Continuum regime: nodes move to phi(x_j) and keep their masses.
KernelMatrix pushforward(const KernelMatrix& k, const Diffeomorphism& phi);
// Continuum regime on the original nodes: kernel K(phi^{-1} x, phi^{-1} y)
// against the image measure lambda_phi = p lambda, i.e. masses mu_j p(x_j).
KernelMatrix pushforward_resampled(const KernelMatrix& k, const Diffeomorphism& phi);

}  // namespace dppp
