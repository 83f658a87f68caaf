#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "core/error.hpp"
#include "core/kernel.hpp"
#include "oracles.hpp"

using namespace dppp;

namespace {

KernelMatrix spectral_kernel(const std::vector<double>& eig, std::mt19937_64& gen) {
  const int n = static_cast<int>(eig.size());
  auto space = GroundSpace::discrete(std::vector<double>(static_cast<std::size_t>(n), 1.0));
  return KernelMatrix::from_raw(space, oracle::spectral_matrix(eig, gen));
}

double max_eig_of_scale(const SpacePtr& space, double c) {
  const auto n = static_cast<Eigen::Index>(space->size());
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      w(i, j) = std::sqrt(space->mass(i)) * c * std::exp(-std::pow(space->node(i) - space->node(j), 2) / 0.04) *
                std::sqrt(space->mass(j));
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(w).eigenvalues().maxCoeff();
}

}  // namespace

TEST_CASE("rank one and zero kernels") {
  auto one = GroundSpace::discrete({1.0});
  const auto k = KernelMatrix::build(one, KernelFunction::constant(0.5));
  CHECK(k.weighted()(0, 0) == doctest::Approx(0.5));
  CHECK(k.eigenvalues()(0) == doctest::Approx(0.5));
  const auto z = KernelMatrix::build(GroundSpace::midpoint(8), KernelFunction::constant(0.0));
  CHECK(z.eigenvalues().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("target eigenvalue scaling agrees with bisection") {
  auto space = GroundSpace::midpoint(16);
  const auto k = build_kernel(space, KernelFunction::gaussian(1.0, 0.2), 0.9);
  CHECK(k.max_eigenvalue() == doctest::Approx(0.9).epsilon(1e-12));
  double lo = 0.0, hi = 100.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (max_eig_of_scale(space, mid) < 0.9 ? lo : hi) = mid;
  }
  CHECK(k.raw()(0, 0) == doctest::Approx(lo).epsilon(1e-10));
  CHECK_THROWS_AS(KernelMatrix::build(space, KernelFunction::gaussian(2.0 * lo, 0.2)), Error);
  try {
    (void)KernelMatrix::build(space, KernelFunction::gaussian(2.0 * lo, 0.2));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpectrumViolation);
  }
}

TEST_CASE("asymmetric kernel is rejected") {
  KernelFunction f{"skew", [](double x, double y) { return 0.1 + 0.05 * x; }, {}};
  try {
    (void)KernelMatrix::build(GroundSpace::midpoint(4), f);
    FAIL("expected AsymmetryError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AsymmetryError);
  }
}

TEST_CASE("trace matches quadrature sum") {
  auto space = GroundSpace::midpoint(20, Density::exponential(1.0));
  const auto k = build_kernel(space, KernelFunction::gaussian(1.0, 0.3), 0.8);
  double s = 0.0;
  for (std::size_t j = 0; j < space->size(); ++j) s += space->mass(j) * k.eval(space->node(j), space->node(j));
  CHECK(oracle::rel_diff(k.trace(), s) < 1e-10);
}

TEST_CASE("Fredholm determinant examples") {
  auto one = GroundSpace::discrete({1.0});
  const auto k = KernelMatrix::build(one, KernelFunction::constant(0.5));
  CHECK(fredholm_det(k, -1.0) == doctest::Approx(0.5));
  CHECK(fredholm_det(k, 0.0) == 1.0);
  std::mt19937_64 gen(1);
  const auto k4 = spectral_kernel({0.1, 0.2, 0.3, 0.4}, gen);
  CHECK(fredholm_det(k4, 1.0) == doctest::Approx(2.4024).epsilon(1e-12));
  CHECK(oracle::rel_diff(fredholm_det(k4, 1.0, FredholmMethod::trace_series), 2.4024) < 1e-10);
}

TEST_CASE("eigen and trace series agree") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 0.9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 15;
    std::vector<double> eig(static_cast<std::size_t>(n));
    for (auto& e : eig) e = u(gen);
    eig[0] = 0.9;
    const auto k = spectral_kernel(eig, gen);
    for (double alpha : {-1.0, -0.5, 0.5, 1.0, 2.0}) {
      const double a = fredholm_det(k, alpha, FredholmMethod::eigen);
      const double b = fredholm_det(k, alpha, FredholmMethod::trace_series);
      CHECK(oracle::rel_diff(a, b) <= 1e-10);
    }
  }
}

TEST_CASE("trace series reports divergence") {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2, 2);
  t(0, 0) = -1.5;
  CHECK_THROWS_AS(fredholm_det_matrix(t, FredholmMethod::trace_series), Error);
}

TEST_CASE("J operator") {
  auto one = GroundSpace::discrete({1.0});
  const auto k = KernelMatrix::build(one, KernelFunction::constant(0.5));
  CHECK(j_operator(k, -1.0).eigenvalues()(0) == doctest::Approx(1.0));
  std::mt19937_64 gen(4);
  const auto k5 = spectral_kernel({0.05, 0.3, 0.5, 0.7, 0.85}, gen);
  CHECK((j_operator(k5, 0.0).weighted() - k5.weighted()).cwiseAbs().maxCoeff() < 1e-14);
  for (double alpha : {-1.0, -0.5, 0.5, 1.0, 2.0}) {
    const auto j = j_operator(k5, alpha);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(5, 5);
    const Eigen::MatrixXd prod = (id + alpha * k5.weighted()) * (id - alpha * j.weighted());
    CHECK((prod - id).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(j.eigenvalues().minCoeff() >= 0.0);
  }
}

TEST_CASE("J off-node extension reproduces node values") {
  auto space = GroundSpace::midpoint(12, Density::affine(1.0, 0.5));
  const auto k = build_kernel(space, KernelFunction::gaussian(1.0, 0.25), 0.85);
  for (double alpha : {-1.0, -0.5, 1.0}) {
    const auto j = j_operator(k, alpha);
    for (std::size_t a = 0; a < 12; a += 3)
      for (std::size_t b = 0; b < 12; b += 2)
        CHECK(std::abs(j.eval(space->node(a), space->node(b)) - j.at(a, b)) < 1e-10 * std::max(1.0, std::abs(j.at(a, b))));
    const double x = 0.37, y = 0.61, h = 1e-5;
    const double fd = (j.eval(x + h, y) - j.eval(x - h, y)) / (2 * h);
    CHECK(j.d1(x, y) == doctest::Approx(fd).epsilon(1e-6));
    CHECK(j.eval(x, y) == doctest::Approx(j.eval(y, x)).epsilon(1e-12));
  }
}

TEST_CASE("rescale") {
  auto space = GroundSpace::midpoint(10);
  const auto k = build_kernel(space, KernelFunction::gaussian(1.0, 0.3), 0.7);
  std::vector<double> ones(10, 1.0), zeros(10, 0.0), neg(10, 1.0);
  CHECK((rescale(k, ones).raw() - k.raw()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rescale(k, zeros).raw().cwiseAbs().maxCoeff() == 0.0);
  neg[3] = -0.1;
  CHECK_THROWS_AS(rescale(k, neg), Error);
  // K[1 - e^{-f}] against a directly assembled matrix.
  std::vector<double> g(10);
  for (std::size_t j = 0; j < 10; ++j) g[j] = 1.0 - std::exp(-3.0 * std::exp(-std::pow(space->node(j) - 0.5, 2) / 0.02));
  Eigen::MatrixXd direct(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      direct(i, j) = std::sqrt(g[i] * space->mass(i)) * k.eval(space->node(i), space->node(j)) * std::sqrt(g[j] * space->mass(j));
  for (double alpha : {-1.0, 0.5, 2.0}) {
    CHECK(oracle::rel_diff(fredholm_det(rescale(k, g), alpha), (Eigen::MatrixXd::Identity(10, 10) + alpha * direct).determinant()) < 1e-12);
  }
}

TEST_CASE("transfer lemma preserves the weighted operator") {
  auto space = GroundSpace::midpoint(6, Density::exponential(0.7));
  const auto k = build_kernel(space, KernelFunction::gaussian(1.0, 0.3), 0.6);
  const auto t = transfer_density(k);
  CHECK((t.weighted() - k.weighted()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(oracle::rel_diff(t.trace(), k.trace()) < 1e-12);
  const double x = 0.3, y = 0.8, h = 1e-6;
  CHECK(t.d1(x, y) == doctest::Approx((t.eval(x + h, y) - t.eval(x - h, y)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("permutation pushforward") {
  std::mt19937_64 gen(8);
  auto space = GroundSpace::discrete({0.3, 0.5, 0.2, 0.9, 0.4, 0.6});
  const auto k = KernelMatrix::from_raw(space, oracle::spectral_matrix({0.1, 0.2, 0.3, 0.35, 0.45, 0.5}, gen) * 0.5);
  std::vector<std::size_t> id{0, 1, 2, 3, 4, 5}, sigma{2, 0, 5, 1, 4, 3}, bad{0, 0, 1, 2, 3, 4};
  CHECK((pushforward(k, id).raw() - k.raw()).cwiseAbs().maxCoeff() == 0.0);
  const auto p = pushforward(k, sigma);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(p.raw()(sigma[i], sigma[j]) == k.raw()(i, j));
  CHECK(std::abs(p.trace() - k.trace()) < 1e-12);
  for (double alpha : {-1.0, -0.5, 1.0}) CHECK(std::abs(fredholm_det(p, alpha) - fredholm_det(k, alpha)) < 1e-12);
  CHECK_THROWS_AS(pushforward(k, bad), Error);
}

TEST_CASE("smooth pushforward keeps the Fredholm determinant") {
  auto space = GroundSpace::gauss_legendre(32);
  const auto k = build_kernel(space, KernelFunction::gaussian(1.0, 0.3), 0.8);
  // phi(x) = x + 0.05 sin(pi x)^2 x(1-x)-style monotone map with explicit inverse by Newton.
  auto fwd = [](double x) { return x + 0.08 * x * (1 - x) * (0.5 - x); };
  auto dfwd = [](double x) { return 1 + 0.08 * ((1 - x) * (0.5 - x) - x * (0.5 - x) - x * (1 - x)); };
  auto inv = [=](double y) {
    double x = y;
    for (int i = 0; i < 60; ++i) x -= (fwd(x) - y) / dfwd(x);
    return x;
  };
  Diffeomorphism phi{fwd, inv, [=](double y) { return 1.0 / dfwd(inv(y)); }};
  const auto moved = pushforward(k, phi);
  const auto resampled = pushforward_resampled(k, phi);
  CHECK(std::abs(moved.trace() - k.trace()) < 1e-10);
  for (double alpha : {-1.0, 1.0}) {
    CHECK(oracle::rel_diff(fredholm_det(moved, alpha), fredholm_det(k, alpha)) < 1e-8);
    CHECK(oracle::rel_diff(fredholm_det(resampled, alpha), fredholm_det(k, alpha)) < 1e-8);
  }
}
