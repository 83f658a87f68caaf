#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>

#include "core/error.hpp"
#include "core/law.hpp"
#include "oracles.hpp"

using namespace dppp;

namespace {

KernelMatrix random_kernel(std::size_t n, double top, std::mt19937_64& gen, Density rho = Density::uniform()) {
  std::uniform_real_distribution<double> len(0.15, 0.5);
  return build_kernel(GroundSpace::midpoint(n, std::move(rho)), KernelFunction::gaussian(1.0, len(gen)), top);
}

std::vector<double> random_f(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> f(n);
  for (auto& v : f) v = u(gen);
  return f;
}

Configuration from_mask(std::size_t mask, std::size_t n) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i)
    if (mask & (std::size_t{1} << i)) idx.push_back(i);
  return Configuration::from_indices(idx);
}

}  // namespace

TEST_CASE("Laplace functional basics") {
  std::mt19937_64 gen(1);
  const auto k = random_kernel(8, 0.7, gen);
  std::vector<double> zero(8, 0.0);
  for (double alpha : {-1.0, -0.5, 0.5, 1.0, 2.0}) CHECK(laplace_functional(k, alpha, zero) == doctest::Approx(1.0));
  auto one = GroundSpace::discrete({1.0});
  const auto r1 = KernelMatrix::build(one, KernelFunction::constant(0.5));
  const double c = 0.8;
  for (double alpha : {-1.0, -0.5, 1.0, 2.0}) {
    const double expected = std::pow(1.0 + alpha * (1.0 - std::exp(-c)) * 0.5, -1.0 / alpha);
    CHECK(laplace_functional(r1, alpha, std::vector<double>{c}) == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK_THROWS_AS(laplace_functional(k, 0.0, zero), Error);
}

TEST_CASE("Janossy basics") {
  std::mt19937_64 gen(2);
  const auto k = random_kernel(6, 0.8, gen);
  for (double alpha : {-1.0, -0.5, 1.0}) {
    const JanossyLaw law(k, alpha);
    CHECK(law.density(std::vector<std::size_t>{}) == doctest::Approx(std::pow(fredholm_det(k, alpha), -1.0 / alpha)));
  }
  CHECK(janossy(k, -1.0, std::vector<std::size_t>{2, 2, 4}) == doctest::Approx(0.0));
}

TEST_CASE("Janossy normalisation and L-ensemble oracle") {
  std::mt19937_64 gen(3);
  for (std::size_t n : {4, 7, 10}) {
    const auto k = random_kernel(n, 0.85, gen, Density::affine(1.0, 0.6));
    const JanossyLaw law(k, -1.0);
    const auto ref = oracle::lensemble_pmf(k.weighted());
    double total = 0.0;
    for (std::size_t mask = 0; mask < ref.size(); ++mask) {
      const double p = law.probability(from_mask(mask, n));
      CHECK(std::abs(p - ref[mask]) < 1e-12);
      total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
}

TEST_CASE("pmf reproduces Laplace functional and mean count") {
  std::mt19937_64 gen(4);
  const auto k = random_kernel(6, 0.8, gen);
  const auto pmf = exact_pmf(k, AlphaParameter(-1, 1));
  for (int t = 0; t < 5; ++t) {
    const auto f = random_f(6, gen);
    CHECK(std::abs(pmf_laplace(pmf, f) - laplace_functional(k, -1.0, f)) < 1e-10);
  }
  CHECK(std::abs(pmf_mean_count(pmf) - k.trace()) < 1e-10);
  std::vector<double> big(6, 50.0);
  CHECK(laplace_functional(k, -1.0, big) == doctest::Approx(pmf.at(Configuration{})).epsilon(1e-12));
}

TEST_CASE("correlation") {
  std::mt19937_64 gen(5);
  const auto k = random_kernel(5, 0.8, gen);
  CHECK(correlation(k, -1.0, std::vector<std::size_t>{3}) == k.raw()(3, 3));
  CHECK(correlation(k, -1.0, std::vector<std::size_t>{1, 1}) == doctest::Approx(0.0));
  const auto pmf = exact_pmf(k, AlphaParameter(-1, 1));
  double s = 0.0;
  for (std::size_t j = 0; j < 5; ++j) s += correlation(k, -1.0, std::vector<std::size_t>{j}) * k.space()->mass(j);
  CHECK(std::abs(pmf_mean_count(pmf) - s) < 1e-10);
}

TEST_CASE("exact pmf edge cases") {
  const auto z = KernelMatrix::build(GroundSpace::midpoint(5), KernelFunction::constant(0.0));
  const auto pz = exact_pmf(z, AlphaParameter(-1, 1));
  CHECK(pz.at(Configuration{}) == doctest::Approx(1.0));
  auto one = GroundSpace::discrete({1.0});
  const auto r1 = KernelMatrix::build(one, KernelFunction::constant(0.3));
  const auto p1 = exact_pmf(r1, AlphaParameter(-1, 1));
  CHECK(p1.at(Configuration{}) == doctest::Approx(0.7));
  CHECK(p1.at(Configuration::from_indices(std::vector<std::size_t>{0})) == doctest::Approx(0.3));
  CHECK_THROWS_AS(exact_pmf(z, AlphaParameter(2, 1)), Error);
  const auto big = KernelMatrix::build(GroundSpace::midpoint(13), KernelFunction::constant(0.0));
  CHECK_THROWS_AS(exact_pmf(big, AlphaParameter(-1, 1)), Error);
}

TEST_CASE("alpha = -1/2 pmf equals the superposition of two DPPs") {
  std::mt19937_64 gen(6);
  const auto k = random_kernel(5, 0.9, gen);
  const auto half = oracle::lensemble_pmf(0.5 * k.weighted());
  std::map<std::vector<unsigned>, double> conv;
  for (std::size_t a = 0; a < half.size(); ++a)
    for (std::size_t b = 0; b < half.size(); ++b) {
      std::vector<unsigned> c(5, 0);
      for (std::size_t i = 0; i < 5; ++i) c[i] = ((a >> i) & 1) + ((b >> i) & 1);
      conv[c] += half[a] * half[b];
    }
  const auto pmf = exact_pmf(k, AlphaParameter(-1, 2));
  double total = 0.0;
  for (const auto& [conf, p] : pmf) {
    CHECK(std::abs(p - conv[conf.counts(5)]) < 1e-12);
    total += p;
  }
  CHECK(std::abs(total - 1.0) < 1e-10);
  const auto f = random_f(5, gen);
  CHECK(std::abs(pmf_laplace(pmf, f) - laplace_functional(k, -0.5, f)) < 1e-10);
}

TEST_CASE("factorisation through J") {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 10; ++t) {
    const auto k = random_kernel(9, 0.85, gen);
    const auto f = random_f(9, gen);
    std::vector<double> ef(9);
    for (std::size_t j = 0; j < 9; ++j) ef[j] = std::exp(-f[j]);
    for (double alpha : {-1.0, -0.5, 1.0}) {
      const auto j = j_operator(k, alpha);
      Eigen::VectorXd s(9);
      for (int i = 0; i < 9; ++i) s(i) = std::sqrt(ef[static_cast<std::size_t>(i)]);
      const Eigen::MatrixXd jf = s.asDiagonal() * j.weighted() * s.asDiagonal();
      const double rhs = std::pow(fredholm_det(k, alpha), -1.0 / alpha) *
                         std::pow((Eigen::MatrixXd::Identity(9, 9) - alpha * jf).determinant(), -1.0 / alpha);
      CHECK(oracle::rel_diff(laplace_functional(k, alpha, f), rhs) < 1e-9);
    }
  }
}

TEST_CASE("Cox identity at alpha = 2") {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 10; ++t) {
    const auto k = random_kernel(7, 0.9, gen);
    const auto f = random_f(7, gen);
    Eigen::VectorXd d(7);
    for (int i = 0; i < 7; ++i) d(i) = 1.0 - std::exp(-f[static_cast<std::size_t>(i)]);
    const double gauss = std::pow((Eigen::MatrixXd::Identity(7, 7) + 2.0 * k.weighted() * d.asDiagonal()).determinant(), -0.5);
    CHECK(oracle::rel_diff(gauss, laplace_functional(k, 2.0, f)) < 1e-10);
  }
}

TEST_CASE("transfer lemma on Janossy probabilities") {
  std::mt19937_64 gen(9);
  const auto k = random_kernel(6, 0.8, gen, Density::exponential(1.3));
  const auto t = transfer_density(k);
  for (double alpha : {-1.0, -0.5, 1.0}) {
    const JanossyLaw a(k, alpha), b(t, alpha);
    for (std::size_t mask = 0; mask < 64; ++mask) {
      const auto c = from_mask(mask, 6);
      CHECK(std::abs(a.probability(c) - b.probability(c)) < 1e-10);
    }
  }
}

TEST_CASE("expansion identity") {
  std::mt19937_64 gen(10);
  auto space = GroundSpace::midpoint(3);
  const auto k = build_kernel(space, KernelFunction::gaussian(1.0, 0.4), 0.4);
  for (double alpha : {1.0, 0.5, -1.0, -0.5}) {
    const auto r = expansion_check(k, alpha, 8);
    CHECK(std::abs(r.truncated_sum - r.fredholm_value) <= r.tail_bound);
  }
  const auto exact = expansion_check(k, -1.0, 8);
  CHECK(exact.tail_bound < 1e-12);
  const auto z = KernelMatrix::build(space, KernelFunction::constant(0.0));
  const auto rz = expansion_check(z, 1.0, 4);
  CHECK(rz.truncated_sum == 1.0);
  CHECK(rz.fredholm_value == 1.0);
  const auto big = build_kernel(space, KernelFunction::gaussian(1.0, 0.4), 0.6);
  CHECK_THROWS_AS(expansion_check(big, 2.0, 4), Error);
}

TEST_CASE("thinning weights match the joint law of independent layers") {
  std::mt19937_64 gen(11);
  const std::size_t n = 5;
  for (int s : {2, 3}) {
    const auto k = build_kernel(GroundSpace::midpoint(n), KernelFunction::gaussian(1.0, 0.3), 0.9);
    const auto k1 = k.scaled(1.0 / s);
    const auto layer = oracle::lensemble_pmf(k1.weighted());
    // joint[(omega counts, eta counts)] by enumerating all layer tuples
    std::map<std::pair<std::vector<unsigned>, std::vector<unsigned>>, double> joint;
    std::map<std::vector<unsigned>, double> marginal;
    const std::size_t full = std::size_t{1} << n;
    std::vector<std::size_t> masks(static_cast<std::size_t>(s), 0);
    while (true) {
      double p = 1.0;
      std::vector<unsigned> omega(n, 0), eta(n, 0);
      for (int l = 0; l < s; ++l) {
        p *= layer[masks[static_cast<std::size_t>(l)]];
        for (std::size_t i = 0; i < n; ++i) {
          const unsigned b = (masks[static_cast<std::size_t>(l)] >> i) & 1;
          omega[i] += b;
          if (l == 0) eta[i] += b;
        }
      }
      joint[{omega, eta}] += p;
      marginal[omega] += p;
      std::size_t l = 0;
      while (l < masks.size() && ++masks[l] == full) masks[l++] = 0;
      if (l == masks.size()) break;
    }
    double worst = 0.0;
    for (const auto& [key, p] : joint) {
      const auto omega = Configuration::from_counts(key.first);
      if (s == 2 && omega.total() != 3) continue;
      const auto eta = Configuration::from_counts(key.second);
      worst = std::max(worst, std::abs(p / marginal[key.first] - thinning_weight(eta, omega, s, k1)));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("thinning completeness and conventions") {
  std::mt19937_64 gen(12);
  const std::size_t n = 6;
  const auto k = build_kernel(GroundSpace::midpoint(n), KernelFunction::gaussian(1.0, 0.35), 0.9);
  for (int s : {1, 2, 3}) {
    const auto k1 = k.scaled(1.0 / s);
    const auto j1 = j_operator(k1, -1.0);
    std::vector<unsigned> c(n, 0);
    // every omega with multiplicities <= s and |omega| <= 6
    std::size_t checked = 0;
    while (true) {
      const auto omega = Configuration::from_counts(c);
      if (omega.total() <= 6) {
        double sum = 0.0;
        for (const auto& [eta, r] : thinning_weights(omega, s, k1)) {
          CHECK(r >= -1e-14);
          sum += r;
          if (s == 1) CHECK(r == doctest::Approx(eta == omega ? 1.0 : 0.0));
        }
        CHECK(std::abs(sum - 1.0) < 1e-10);
        // labelled table agrees after summing over labellings
        const auto pts = omega.points();
        const auto d = subset_determinants(j1, pts);
        const auto table = thinning_table<double>(d, pts.size(), s);
        double tsum = 0.0;
        for (double v : table) tsum += v;
        CHECK(std::abs(tsum - 1.0) < 1e-10);
        ++checked;
      }
      std::size_t i = 0;
      while (i < n && ++c[i] > static_cast<unsigned>(s)) c[i++] = 0;
      if (i == n) break;
    }
    CHECK(checked > 0);
  }
  const auto k1 = k.scaled(0.5);
  const auto w = thinning_weights(Configuration{}, 2, k1);
  REQUIRE(w.size() == 1);
  CHECK(w[0].second == doctest::Approx(1.0));
}

TEST_CASE("thinning weights approach binomial thinning for a near-diagonal kernel") {
  auto space = GroundSpace::midpoint(8);
  const auto k = build_kernel(space, KernelFunction::gaussian(1.0, 0.005), 0.05);
  const auto omega = Configuration::from_indices(std::vector<std::size_t>{1, 3, 4, 6});
  for (const auto& [eta, r] : thinning_weights(omega, 2, k.scaled(0.5))) {
    // Binomial(|omega|, 1/2) spread evenly over the subsets of each size.
    CHECK(r == doctest::Approx(1.0 / 16.0).epsilon(0.05));
  }
}

TEST_CASE("Poisson limit functional") {
  std::mt19937_64 gen(13);
  const auto k = random_kernel(8, 0.7, gen);
  CHECK(poisson_limit_functional(k, std::vector<double>(8, 0.0)) == 1.0);
  auto one = GroundSpace::discrete({1.0});
  const auto r1 = KernelMatrix::build(one, KernelFunction::constant(0.4));
  CHECK(poisson_limit_functional(r1, std::vector<double>{1.2}) == doctest::Approx(std::exp(-(1 - std::exp(-1.2)) * 0.4)));
  const auto f = random_f(8, gen);
  double prev = 1e300;
  for (double alpha : {-0.5, -0.25, -0.125}) {
    const double e = std::abs(laplace_functional(k, alpha, f) - poisson_limit_functional(k, f));
    CHECK(e < prev);
    if (prev < 1e300) CHECK(e / prev == doctest::Approx(0.5).epsilon(0.2));
    prev = e;
  }
}
