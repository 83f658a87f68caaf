#include "core/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace dppp {

namespace {

constexpr double kSpectrumTol = 1e-12;
constexpr double kSymmetryTol = 1e-10;
constexpr double kSeriesTol = 1e-15;
constexpr int kSeriesCap = 10000;

Eigen::VectorXd sqrt_masses(const GroundSpace& space) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(space.size()));
  for (std::size_t j = 0; j < space.size(); ++j) s(static_cast<Eigen::Index>(j)) = std::sqrt(space.mass(j));
  return s;
}

double log_det_series(const Eigen::MatrixXd& t) {
  const auto n = static_cast<double>(t.rows());
  Eigen::MatrixXd power = t;
  double sum = 0.0;
  int small_run = 0;
  for (int k = 1; k <= kSeriesCap; ++k) {
    const double tr = power.trace();
    const double term = (k % 2 == 1 ? 1.0 : -1.0) * tr / k;
    sum += term;
    if (k % 2 == 0 && tr / n >= 1.0) {
      // Even powers bound the spectral radius from below.
      fail(ErrorCode::SeriesDivergence, "trace series diverges: spectral radius >= 1");
    }
    small_run = std::abs(term) < kSeriesTol ? small_run + 1 : 0;
    if (small_run >= 2) return sum;
    power = power * t;
  }
  fail(ErrorCode::SeriesDivergence, "trace series did not converge within 10^4 terms");
}

}  // namespace

KernelFunction KernelFunction::scaled(double c) const {
  KernelFunction out{name, [v = value, c](double x, double y) { return c * v(x, y); }, {}};
  if (d1) out.d1 = [d = d1, c](double x, double y) { return c * d(x, y); };
  return out;
}

KernelFunction KernelFunction::gaussian(double c, double length) {
  if (!(length > 0.0)) fail(ErrorCode::InvalidArgument, "gaussian length must be positive");
  const double inv = 1.0 / (length * length);
  return {"gaussian",
          [c, inv](double x, double y) { return c * std::exp(-(x - y) * (x - y) * inv); },
          [c, inv](double x, double y) { return -2.0 * (x - y) * inv * c * std::exp(-(x - y) * (x - y) * inv); }};
}

KernelFunction KernelFunction::exponential(double c, double length) {
  if (!(length > 0.0)) fail(ErrorCode::InvalidArgument, "exponential length must be positive");
  return {"exponential",
          [c, length](double x, double y) { return c * std::exp(-std::abs(x - y) / length); },
          [c, length](double x, double y) {
            if (x == y) return 0.0;
            const double s = x > y ? -1.0 : 1.0;
            return s / length * c * std::exp(-std::abs(x - y) / length);
          }};
}

KernelFunction KernelFunction::finite_rank(std::vector<double> coefficients) {
  if (coefficients.empty()) fail(ErrorCode::InvalidArgument, "finite_rank needs at least one coefficient");
  for (double c : coefficients)
    if (c < 0.0) fail(ErrorCode::SpectrumViolation, "finite_rank coefficients must be nonnegative");
  auto basis = [](std::size_t k, double x) {
    return k == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(static_cast<double>(k) * std::numbers::pi * x);
  };
  auto basis_d = [](std::size_t k, double x) {
    const double kp = static_cast<double>(k) * std::numbers::pi;
    return k == 0 ? 0.0 : -std::numbers::sqrt2 * kp * std::sin(kp * x);
  };
  return {"finite_rank",
          [coefficients, basis](double x, double y) {
            double s = 0.0;
            for (std::size_t k = 0; k < coefficients.size(); ++k) s += coefficients[k] * basis(k, x) * basis(k, y);
            return s;
          },
          [coefficients, basis, basis_d](double x, double y) {
            double s = 0.0;
            for (std::size_t k = 0; k < coefficients.size(); ++k) s += coefficients[k] * basis_d(k, x) * basis(k, y);
            return s;
          }};
}

KernelFunction KernelFunction::constant(double c) {
  return {"constant", [c](double, double) { return c; }, [](double, double) { return 0.0; }};
}

KernelMatrix::KernelMatrix(SpacePtr space, Eigen::MatrixXd raw, std::optional<KernelFunction> fn, std::string name)
    : space_(std::move(space)), raw_(std::move(raw)), fn_(std::move(fn)), name_(std::move(name)) {
  const auto n = static_cast<Eigen::Index>(space_->size());
  if (raw_.rows() != n || raw_.cols() != n) fail(ErrorCode::InvalidArgument, "kernel matrix size does not match space");
  if (!raw_.allFinite()) fail(ErrorCode::InvalidArgument, "kernel matrix has non-finite entries");
  const double scale = raw_.cwiseAbs().maxCoeff();
  if ((raw_ - raw_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * std::max(scale, 1e-300) && scale > 0.0)
    fail(ErrorCode::AsymmetryError, "kernel is not symmetric");
  raw_ = (0.5 * (raw_ + raw_.transpose())).eval();
  const Eigen::VectorXd s = sqrt_masses(*space_);
  weighted_ = s.asDiagonal() * raw_ * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(weighted_);
  if (es.info() != Eigen::Success) fail(ErrorCode::SpectrumViolation, "eigendecomposition failed");
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double l = eigenvalues_(j);
    if (l < -kSpectrumTol) fail(ErrorCode::SpectrumViolation, "negative eigenvalue " + std::to_string(l));
    if (l >= 1.0 - kSpectrumTol) fail(ErrorCode::SpectrumViolation, "eigenvalue " + std::to_string(l) + " >= 1");
    eigenvalues_(j) = std::max(l, 0.0);
  }
}

KernelMatrix KernelMatrix::build(SpacePtr space, KernelFunction fn) {
  const std::size_t n = space->size();
  Eigen::MatrixXd raw(n, n);
  double scale = 0.0, asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = fn.value(space->node(i), space->node(j));
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      scale = std::max(scale, std::abs(v));
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      asym = std::max(asym, std::abs(raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                     raw(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))));
  if (asym > kSymmetryTol * scale && scale > 0.0) fail(ErrorCode::AsymmetryError, "kernel function is not symmetric");
  std::string name = fn.name;
  return KernelMatrix(std::move(space), std::move(raw), std::move(fn), std::move(name));
}

KernelMatrix KernelMatrix::from_raw(SpacePtr space, Eigen::MatrixXd raw, std::string name) {
  return KernelMatrix(std::move(space), std::move(raw), std::nullopt, std::move(name));
}

double KernelMatrix::max_eigenvalue() const {
  return eigenvalues_.size() == 0 ? 0.0 : eigenvalues_.maxCoeff();
}

double KernelMatrix::eval(double x, double y) const {
  if (!fn_) fail(ErrorCode::InvalidArgument, "kernel '" + name_ + "' has no off-node evaluation");
  return fn_->value(x, y);
}

double KernelMatrix::d1(double x, double y) const {
  if (!fn_ || !fn_->differentiable()) fail(ErrorCode::InvalidArgument, "kernel '" + name_ + "' has no derivative");
  return fn_->d1(x, y);
}

KernelMatrix KernelMatrix::scaled(double c) const {
  if (fn_) return KernelMatrix(space_, c * raw_, fn_->scaled(c), name_);
  return KernelMatrix(space_, c * raw_, std::nullopt, name_);
}

KernelMatrix build_kernel(SpacePtr space, const KernelFunction& fn, std::optional<double> target_max_eigenvalue) {
  if (!target_max_eigenvalue) return KernelMatrix::build(std::move(space), fn);
  const double target = *target_max_eigenvalue;
  if (!(target >= 0.0 && target < 1.0)) fail(ErrorCode::SpectrumViolation, "target_max_eigenvalue must lie in [0,1)");
  // Spectrum is linear in the scale, so probe the unit-scale operator without validation.
  const std::size_t n = space->size();
  Eigen::MatrixXd w(n, n);
  const Eigen::VectorXd s = sqrt_masses(*space);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          s(static_cast<Eigen::Index>(i)) * fn.value(space->node(i), space->node(j)) * s(static_cast<Eigen::Index>(j));
  w = (0.5 * (w + w.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  if (top <= 0.0) return KernelMatrix::build(std::move(space), fn);
  return KernelMatrix::build(std::move(space), fn.scaled(target / top));
}

double fredholm_det_matrix(const Eigen::MatrixXd& t, FredholmMethod method) {
  const auto n = t.rows();
  if (n == 0) return 1.0;
  if (method == FredholmMethod::eigen) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    double det = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) det *= 1.0 + es.eigenvalues()(j);
    return det;
  }
  // Gershgorin interval for the spectrum of T.
  const Eigen::VectorXd radius = t.cwiseAbs().rowwise().sum() - t.diagonal().cwiseAbs();
  return fredholm_det_series(t, (t.diagonal() - radius).minCoeff(), (t.diagonal() + radius).maxCoeff());
}

double fredholm_det_series(const Eigen::MatrixXd& t, double lower, double upper) {
  const auto n = t.rows();
  if (n == 0) return 1.0;
  if (upper >= 1.0 && lower > -1.0) {
    // Det(I + T) = c^N Det(I + S), S = (I + T)/c - I has spectral radius < 1.
    const double c = 1.0 + 0.5 * (lower + upper);
    const Eigen::MatrixXd shifted = t / c - (1.0 - 1.0 / c) * Eigen::MatrixXd::Identity(n, n);
    return std::exp(static_cast<double>(n) * std::log(c) + log_det_series(shifted));
  }
  return std::exp(log_det_series(t));
}

double fredholm_det(const KernelMatrix& k, double alpha, FredholmMethod method) {
  if (alpha == 0.0) return 1.0;
  if (method == FredholmMethod::eigen) {
    double det = 1.0;
    for (Eigen::Index j = 0; j < k.eigenvalues().size(); ++j) det *= 1.0 + alpha * k.eigenvalues()(j);
    return det;
  }
  // K~ has spectrum in [0, 1), so alpha K~ lies between 0 and alpha.
  return fredholm_det_series(alpha * k.weighted(), std::min(alpha, 0.0), std::max(alpha, 0.0));
}

double fredholm_det(const KernelMatrix& k, const AlphaParameter& alpha, FredholmMethod method) {
  return fredholm_det(k, alpha.value(), method);
}

JKernel::JKernel(const KernelMatrix& k, double alpha) : k_(k), alpha_(alpha) {
  const auto n = static_cast<Eigen::Index>(k.size());
  const Eigen::MatrixXd& v = k.eigenvectors();
  const Eigen::VectorXd& lam = k.eigenvalues();
  Eigen::VectorXd inv(n), jl(n);
  double lo = 1e300, hi = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = 1.0 + alpha * lam(j);
    if (!(d > 0.0)) fail(ErrorCode::NotInvertible, "I + alpha K is not invertible");
    inv(j) = 1.0 / d;
    jl(j) = lam(j) / d;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  condition_ = hi / lo;
  eigenvalues_ = jl;
  weighted_ = v * jl.asDiagonal() * v.transpose();
  weighted_ = (0.5 * (weighted_ + weighted_.transpose())).eval();
  const Eigen::VectorXd s = sqrt_masses(*k.space());
  const Eigen::VectorXd sinv = s.cwiseInverse();
  raw_ = sinv.asDiagonal() * weighted_ * sinv.asDiagonal();
  resolvent_ = s.asDiagonal() * (v * inv.asDiagonal() * v.transpose()) * s.asDiagonal();
  if (k.has_function() && k.function()->differentiable()) {
    const auto nodes = k.space()->nodes();
    d1_nodes_ = d1_matrix(nodes);
  }
}

Eigen::MatrixXd JKernel::columns(std::span<const double> xs) const {
  const auto nodes = k_.space()->nodes();
  Eigen::MatrixXd c(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t r = 0; r < xs.size(); ++r)
    for (std::size_t j = 0; j < nodes.size(); ++j)
      c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = k_.eval(xs[r], nodes[j]);
  return c;
}

Eigen::MatrixXd JKernel::columns_d1(std::span<const double> xs) const {
  const auto nodes = k_.space()->nodes();
  Eigen::MatrixXd c(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t r = 0; r < xs.size(); ++r)
    for (std::size_t j = 0; j < nodes.size(); ++j)
      c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = k_.d1(xs[r], nodes[j]);
  return c;
}

Eigen::MatrixXd JKernel::eval_matrix(std::span<const double> xs) const {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = k_.eval(xs[static_cast<std::size_t>(r)], xs[static_cast<std::size_t>(c)]);
  if (alpha_ != 0.0 && n > 0) {
    const Eigen::MatrixXd cols = columns(xs);
    out.noalias() -= alpha_ * cols * resolvent_ * cols.transpose();
  }
  return out;
}

Eigen::MatrixXd JKernel::d1_matrix(std::span<const double> xs) const {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = k_.d1(xs[static_cast<std::size_t>(r)], xs[static_cast<std::size_t>(c)]);
  if (alpha_ != 0.0 && n > 0) out.noalias() -= alpha_ * columns_d1(xs) * resolvent_ * columns(xs).transpose();
  return out;
}

Eigen::VectorXd JKernel::column(double x) const {
  const auto& nodes = k_.space()->nodes();
  Eigen::VectorXd c(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) c(static_cast<Eigen::Index>(j)) = k_.eval(x, nodes[j]);
  return c;
}

Eigen::VectorXd JKernel::column_d1(double x) const {
  const auto& nodes = k_.space()->nodes();
  Eigen::VectorXd c(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) c(static_cast<Eigen::Index>(j)) = k_.d1(x, nodes[j]);
  return c;
}

double JKernel::eval(double x, double y) const {
  if (alpha_ == 0.0) return k_.eval(x, y);
  return k_.eval(x, y) - alpha_ * column(x).dot(resolvent_ * column(y));
}

double JKernel::d1(double x, double y) const {
  if (alpha_ == 0.0) return k_.d1(x, y);
  return k_.d1(x, y) - alpha_ * column_d1(x).dot(resolvent_ * column(y));
}

JKernel j_operator(const KernelMatrix& k, double alpha) { return JKernel(k, alpha); }
JKernel j_operator(const KernelMatrix& k, const AlphaParameter& alpha) { return JKernel(k, alpha.value()); }

Eigen::MatrixXd rescaled_weighted(const KernelMatrix& k, std::span<const double> g) {
  if (g.size() != k.size()) fail(ErrorCode::InvalidArgument, "rescale function has wrong length");
  Eigen::VectorXd s(static_cast<Eigen::Index>(g.size()));
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!(g[j] >= 0.0)) fail(ErrorCode::NegativeWeight, "rescale function is negative at node " + std::to_string(j));
    s(static_cast<Eigen::Index>(j)) = std::sqrt(g[j]);
  }
  return s.asDiagonal() * k.weighted() * s.asDiagonal();
}

KernelMatrix rescale(const KernelMatrix& k, std::span<const double> g) {
  (void)rescaled_weighted(k, g);
  Eigen::VectorXd s(static_cast<Eigen::Index>(g.size()));
  for (std::size_t j = 0; j < g.size(); ++j) s(static_cast<Eigen::Index>(j)) = std::sqrt(g[j]);
  return KernelMatrix::from_raw(k.space(), s.asDiagonal() * k.raw() * s.asDiagonal(), k.name() + "[g]");
}

KernelMatrix transfer_density(const KernelMatrix& k) {
  const auto& sp = *k.space();
  std::vector<double> nodes(sp.nodes().begin(), sp.nodes().end());
  std::vector<double> weights(sp.weights().begin(), sp.weights().end());
  auto lebesgue = GroundSpace::create(nodes, weights, Density::uniform(), sp.rule());
  const Density rho = sp.density();
  if (k.has_function()) {
    const KernelFunction f = *k.function();
    KernelFunction t{f.name + "[rho]",
                     [f, rho](double x, double y) { return std::sqrt(rho.value(x)) * f.value(x, y) * std::sqrt(rho.value(y)); },
                     {}};
    if (f.differentiable()) {
      t.d1 = [f, rho](double x, double y) {
        const double sx = std::sqrt(rho.value(x));
        return sx * (f.d1(x, y) + 0.5 * rho.log_derivative(x) * f.value(x, y)) * std::sqrt(rho.value(y));
      };
    }
    return KernelMatrix::build(lebesgue, std::move(t));
  }
  Eigen::VectorXd s(static_cast<Eigen::Index>(sp.size()));
  for (std::size_t j = 0; j < sp.size(); ++j) s(static_cast<Eigen::Index>(j)) = std::sqrt(sp.rho(sp.node(j)));
  return KernelMatrix::from_raw(lebesgue, s.asDiagonal() * k.raw() * s.asDiagonal(), k.name() + "[rho]");
}

KernelMatrix pushforward(const KernelMatrix& k, std::span<const std::size_t> sigma) {
  const std::size_t n = k.size();
  if (sigma.size() != n) fail(ErrorCode::InvalidArgument, "permutation has wrong length");
  std::vector<std::size_t> inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (sigma[i] >= n || inv[sigma[i]] != n) fail(ErrorCode::NotInvertible, "map sends two nodes to one");
    inv[sigma[i]] = i;
  }
  Eigen::MatrixXd raw(n, n);
  std::vector<double> masses(n);
  for (std::size_t i = 0; i < n; ++i) {
    masses[i] = k.space()->mass(inv[i]);
    for (std::size_t j = 0; j < n; ++j)
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          k.raw()(static_cast<Eigen::Index>(inv[i]), static_cast<Eigen::Index>(inv[j]));
  }
  return KernelMatrix::from_raw(GroundSpace::discrete(std::move(masses)), std::move(raw), k.name() + "^sigma");
}

namespace {

KernelFunction composed(const KernelMatrix& k, const Diffeomorphism& phi) {
  if (!k.has_function()) fail(ErrorCode::InvalidArgument, "flow pushforward needs a kernel function");
  const KernelFunction f = *k.function();
  KernelFunction out{f.name + "^phi",
                     [f, phi](double x, double y) { return f.value(phi.inverse(x), phi.inverse(y)); },
                     {}};
  if (f.differentiable()) {
    out.d1 = [f, phi](double x, double y) {
      return f.d1(phi.inverse(x), phi.inverse(y)) * phi.inverse_derivative(x);
    };
  }
  return out;
}

// Density of the image measure lambda_phi w.r.t. Lebesgue measure.
Density image_density(const Density& rho, const Diffeomorphism& phi) {
  auto value = [rho, phi](double y) { return rho.value(phi.inverse(y)) * phi.inverse_derivative(y); };
  auto logd = [value](double y) {
    const double h = 1e-6;
    return (std::log(value(y + h)) - std::log(value(y - h))) / (2.0 * h);
  };
  return {rho.name + "^phi", value, logd};
}

}  // namespace

KernelMatrix pushforward(const KernelMatrix& k, const Diffeomorphism& phi) {
  const auto& sp = *k.space();
  const Density rho = image_density(sp.density(), phi);
  std::vector<double> nodes(sp.size()), weights(sp.size());
  for (std::size_t j = 0; j < sp.size(); ++j) {
    nodes[j] = phi.forward(sp.node(j));
    if (j > 0 && !(nodes[j] > nodes[j - 1])) fail(ErrorCode::NotInvertible, "flow maps two nodes to one");
    weights[j] = sp.mass(j) / rho.value(nodes[j]);
  }
  auto image = GroundSpace::create(std::move(nodes), std::move(weights), rho, sp.rule());
  return KernelMatrix::build(image, composed(k, phi));
}

KernelMatrix pushforward_resampled(const KernelMatrix& k, const Diffeomorphism& phi) {
  const auto& sp = *k.space();
  std::vector<double> nodes(sp.nodes().begin(), sp.nodes().end());
  std::vector<double> weights(sp.weights().begin(), sp.weights().end());
  auto image = GroundSpace::create(std::move(nodes), std::move(weights), image_density(sp.density(), phi), sp.rule());
  return KernelMatrix::build(image, composed(k, phi));
}

}  // namespace dppp
