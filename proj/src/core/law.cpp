#include "core/law.hpp"

#include <cmath>
#include <limits>

#include "core/error.hpp"

namespace dppp {

namespace {

std::atomic<std::uint64_t> g_clamped{0};

constexpr double kClampTol = 1e-12;

Eigen::MatrixXd raw_submatrix(const Eigen::MatrixXd& raw, std::span<const std::size_t> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = raw(static_cast<Eigen::Index>(points[static_cast<std::size_t>(i)]),
                    static_cast<Eigen::Index>(points[static_cast<std::size_t>(j)]));
  return a;
}

void check_points(std::span<const std::size_t> points, std::size_t n) {
  for (std::size_t p : points)
    if (p >= n) fail(ErrorCode::InvalidArgument, "point index " + std::to_string(p) + " out of range");
}

// Visits every count vector with entries in [0, cap] and total <= max_total.
template <class F>
void for_each_count_vector(std::size_t n, unsigned cap, std::size_t max_total, F&& visit) {
  std::vector<unsigned> c(n, 0);
  std::size_t total = 0;
  while (true) {
    visit(c, total);
    std::size_t i = 0;
    while (i < n) {
      if (c[i] < cap && total < max_total) {
        ++c[i];
        ++total;
        break;
      }
      total -= c[i];
      c[i] = 0;
      ++i;
    }
    if (i == n) return;
  }
}

double log_binom_real(double top, double k) {
  return std::lgamma(top + 1.0) - std::lgamma(k + 1.0) - std::lgamma(top - k + 1.0);
}

}  // namespace

double laplace_functional(const KernelMatrix& k, double alpha, std::span<const double> f) {
  if (alpha == 0.0) fail(ErrorCode::InvalidArgument, "use poisson_limit_functional for alpha = 0");
  if (f.size() != k.size()) fail(ErrorCode::InvalidArgument, "test function has wrong length");
  std::vector<double> g(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (f[j] < 0.0) fail(ErrorCode::InvalidArgument, "test function must be nonnegative");
    g[j] = -std::expm1(-f[j]);
  }
  const double det = fredholm_det_matrix(alpha * rescaled_weighted(k, g));
  return std::pow(det, -1.0 / alpha);
}

double poisson_limit_functional(const KernelMatrix& k, std::span<const double> f) {
  if (f.size() != k.size()) fail(ErrorCode::InvalidArgument, "test function has wrong length");
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j)
    s += -std::expm1(-f[j]) * k.weighted()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
  return std::exp(-s);
}

double correlation(const KernelMatrix& k, double alpha, std::span<const std::size_t> points,
                   const AlphaDetLimits& limits) {
  check_points(points, k.size());
  return alpha_determinant(raw_submatrix(k.raw(), points), alpha, limits);
}

JanossyLaw::JanossyLaw(const KernelMatrix& k, double alpha, AlphaDetLimits limits)
    : j_(k, alpha), limits_(limits) {
  if (alpha == 0.0) {
    prefactor_ = std::exp(-k.trace());
  } else {
    prefactor_ = std::pow(fredholm_det(k, alpha), -1.0 / alpha);
  }
}

double JanossyLaw::density(std::span<const std::size_t> points) const {
  check_points(points, j_.size());
  if (points.empty()) return prefactor_;
  double v = prefactor_ * alpha_determinant(raw_submatrix(j_.raw(), points), j_.alpha(), limits_);
  if (v < 0.0 && v >= -kClampTol) {
    ++g_clamped;
    v = 0.0;
  }
  return v;
}

double JanossyLaw::density(const Configuration& c) const {
  const auto p = c.points();
  return density(p);
}

double JanossyLaw::probability(const Configuration& c) const {
  double w = density(c);
  const auto& space = *kernel().space();
  for (const auto& a : c.atoms()) {
    w *= std::pow(space.mass(a.index), static_cast<double>(a.multiplicity)) / std::tgamma(a.multiplicity + 1.0);
  }
  return w;
}

std::uint64_t janossy_clamp_count() noexcept { return g_clamped.load(); }

double janossy(const KernelMatrix& k, double alpha, std::span<const std::size_t> points) {
  return JanossyLaw(k, alpha).density(points);
}

Pmf exact_pmf(const KernelMatrix& k, const AlphaParameter& alpha) {
  if (alpha.numerator() != -1) fail(ErrorCode::UnsupportedAlpha, "exact_pmf supports alpha = -1/m only");
  const auto m = static_cast<unsigned>(alpha.denominator());
  const std::size_t n = k.size();
  if (n > 12) fail(ErrorCode::SizeLimit, "exact_pmf needs N <= 12");
  const AlphaDetLimits limits;
  if (m > 1 && n * m > limits.colouring)
    fail(ErrorCode::SizeLimit, "exact_pmf: N*m exceeds the colouring size limit");
  if (std::pow(m + 1.0, static_cast<double>(n)) > 2e6) fail(ErrorCode::SizeLimit, "exact_pmf: too many configurations");
  const JanossyLaw law(k, alpha.value(), limits);
  Pmf pmf;
  for_each_count_vector(n, m, n * m, [&](const std::vector<unsigned>& c, std::size_t) {
    const auto conf = Configuration::from_counts(c);
    pmf.emplace(conf, law.probability(conf));
  });
  return pmf;
}

double pmf_laplace(const Pmf& pmf, std::span<const double> f) {
  double s = 0.0;
  for (const auto& [c, p] : pmf) {
    double e = 0.0;
    for (const auto& a : c.atoms()) e += a.multiplicity * f[a.index];
    s += p * std::exp(-e);
  }
  return s;
}

double pmf_mean_count(const Pmf& pmf) {
  double s = 0.0;
  for (const auto& [c, p] : pmf) s += p * static_cast<double>(c.total());
  return s;
}

ExpansionResult expansion_check(const KernelMatrix& k, double alpha, std::size_t n_max) {
  if (n_max > 8) fail(ErrorCode::SizeLimit, "expansion_check needs n_max <= 8");
  const std::size_t n = k.size();
  const double lmax = k.max_eigenvalue();
  const double a = std::abs(alpha);
  if (a * lmax >= 1.0) fail(ErrorCode::NormViolation, "||alpha K|| >= 1");

  ExpansionResult r{0.0, 0.0, 0.0, n_max};
  double magnitude_sum = 0.0;
  const auto& space = *k.space();
  for_each_count_vector(n, static_cast<unsigned>(n_max), n_max, [&](const std::vector<unsigned>& c, std::size_t) {
    const auto conf = Configuration::from_counts(c);
    const auto pts = conf.points();
    double w = pts.empty() ? 1.0 : correlation(k, alpha, pts);
    for (const auto& at : conf.atoms())
      w *= std::pow(space.mass(at.index), static_cast<double>(at.multiplicity)) / std::tgamma(at.multiplicity + 1.0);
    r.truncated_sum += w;
    magnitude_sum += std::abs(w);
  });

  if (alpha == 0.0) {
    const double tr = k.trace();
    r.fredholm_value = std::exp(tr);
    double term = 1.0;
    for (std::size_t m = 1; m <= n_max; ++m) term *= tr / static_cast<double>(m);
    for (std::size_t m = n_max + 1; m < n_max + 2000; ++m) {
      term *= tr / static_cast<double>(m);
      r.tail_bound += term;
      if (term < 1e-300) break;
    }
  } else {
    r.fredholm_value = std::pow(fredholm_det(k, -alpha), -1.0 / alpha);
    // Majorant: coefficients of (1 - |alpha| lmax x)^{-N/|alpha|}, or of the
    // polynomial (1 + |alpha| lmax x)^{N/|alpha|} when alpha = -1/m.
    const double r_exp = static_cast<double>(n) / a;
    const bool polynomial = alpha < 0.0 && std::abs(r_exp - std::round(r_exp)) < 1e-12;
    if (lmax > 0.0) {
      const double x = a * lmax;
      for (std::size_t m = n_max + 1; m < n_max + 100000; ++m) {
        const double md = static_cast<double>(m);
        double term;
        if (polynomial) {
          if (md > std::round(r_exp)) break;
          term = std::exp(log_binom_real(std::round(r_exp), md) + md * std::log(x));
        } else {
          term = std::exp(log_binom_real(md + r_exp - 1.0, md) + md * std::log(x));
        }
        r.tail_bound += term;
        if (term < 1e-18 * std::max(1.0, r.tail_bound) && md > r_exp) break;
      }
    }
  }
  // Floating-point allowance for the summation itself.
  r.tail_bound += 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + magnitude_sum);
  return r;
}

std::vector<double> subset_determinants(const JKernel& j1, std::span<const std::size_t> points) {
  const std::size_t n = points.size();
  if (n > 20) fail(ErrorCode::SizeLimit, "thinning needs at most 20 atoms");
  const std::size_t full = std::size_t{1} << n;
  std::vector<double> d(full);
  std::vector<std::size_t> idx;
  for (std::size_t mask = 0; mask < full; ++mask) {
    idx.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) idx.push_back(points[i]);
    d[mask] = idx.empty() ? 1.0 : determinant_lu(SquareMatrix<double>::from_eigen(raw_submatrix(j1.raw(), idx)));
  }
  return d;
}

template <class T>
std::vector<T> thinning_table(std::span<const T> det_j1_subsets, std::size_t n, int s) {
  if (s < 1) fail(ErrorCode::InvalidArgument, "thinning needs s >= 1");
  const std::size_t full = std::size_t{1} << n;
  const auto g = subset_convolution_powers<T>(det_j1_subsets, n, static_cast<std::size_t>(s));
  const T denom = g[static_cast<std::size_t>(s)][full - 1];
  if (!(value_of(denom) > 1e-300)) fail(ErrorCode::ZeroDenominator, "j_{alpha,sK1}(omega) vanishes");
  std::vector<T> out(full);
  for (std::size_t mask = 0; mask < full; ++mask)
    out[mask] = det_j1_subsets[mask] * g[static_cast<std::size_t>(s - 1)][(full - 1) ^ mask] / denom;
  return out;
}

template std::vector<double> thinning_table<double>(std::span<const double>, std::size_t, int);
template std::vector<Dual> thinning_table<Dual>(std::span<const Dual>, std::size_t, int);

double thinning_weight(const Configuration& eta, const Configuration& omega, int s, const KernelMatrix& k1) {
  if (s < 1) fail(ErrorCode::InvalidArgument, "thinning needs s >= 1");
  if (!omega.contains(eta)) fail(ErrorCode::InvalidArgument, "eta is not a sub-configuration of omega");
  const double alpha = -1.0 / s;
  const JanossyLaw top(k1.scaled(static_cast<double>(s)), alpha);
  const double denom = top.density(omega);
  if (!(denom > 1e-300)) fail(ErrorCode::ZeroDenominator, "j_{alpha,sK1}(omega) vanishes");
  const Configuration rest = omega.minus(eta);
  double rest_density;
  if (s == 1) {
    rest_density = rest.empty() ? 1.0 : 0.0;
  } else {
    rest_density = JanossyLaw(k1.scaled(static_cast<double>(s - 1)), -1.0 / (s - 1)).density(rest);
  }
  if (rest_density == 0.0) return 0.0;
  double binom = 1.0;
  for (const auto& a : eta.atoms()) {
    const unsigned total = omega.multiplicity(a.index);
    binom *= std::tgamma(total + 1.0) / (std::tgamma(a.multiplicity + 1.0) * std::tgamma(total - a.multiplicity + 1.0));
  }
  const double first = JanossyLaw(k1, -1.0).density(eta);
  return binom * first * rest_density / denom;
}

std::vector<std::pair<Configuration, double>> thinning_weights(const Configuration& omega, int s,
                                                               const KernelMatrix& k1) {
  std::vector<std::pair<Configuration, double>> out;
  const auto& atoms = omega.atoms();
  std::vector<unsigned> c(atoms.size(), 0);
  while (true) {
    std::vector<std::size_t> pts;
    for (std::size_t i = 0; i < atoms.size(); ++i)
      for (unsigned r = 0; r < c[i]; ++r) pts.push_back(atoms[i].index);
    const auto eta = Configuration::from_indices(pts);
    out.emplace_back(eta, thinning_weight(eta, omega, s, k1));
    std::size_t i = 0;
    while (i < atoms.size() && c[i] == atoms[i].multiplicity) c[i++] = 0;
    if (i == atoms.size()) break;
    ++c[i];
  }
  return out;
}

}  // namespace dppp
