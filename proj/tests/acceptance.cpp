// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Suite-backed criteria run the named checks of configs/default_suite.json.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "core/flow.hpp"
#include "core/law.hpp"
#include "core/sampler.hpp"
#include "core/stats.hpp"
#include "core/verify.hpp"

using namespace dppp;

namespace {

const std::string kSuite = std::string(DPPP_SOURCE_DIR) + "/configs/default_suite.json";

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) passed = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const SuiteConfig& suite() {
  static const SuiteConfig s = load_suite(kSuite);
  return s;
}

std::vector<VerificationReport> run_checks(std::vector<std::string> names) {
  RunOptions o;
  o.only = std::move(names);
  return run_suite(suite(), o).reports;
}

void require_reports(Outcome& o, const std::vector<VerificationReport>& reports) {
  for (const auto& r : reports) {
    std::string what = r.check_name + " err " + fmt("%.3g", r.abs_error) + " tol " + fmt("%.3g", r.tolerance);
    if (r.regime == Regime::monte_carlo) what += " se " + fmt("%.3g", r.std_error);
    if (r.extra.contains("error")) what += " (" + r.extra["error"].get<std::string>() + ")";
    o.require(r.passed, what);
  }
}

// Random weighted kernel: orthogonal basis, spectrum in [0, top], masses in [0.5, 1.5].
KernelMatrix random_kernel(std::mt19937_64& gen, int n, double top) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0), unit(0.0, 1.0), mass(0.5, 1.5);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = sym(gen);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd lam(n);
  for (int i = 0; i < n; ++i) lam(i) = top * unit(gen);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& v : w) v = mass(gen);
  const Eigen::MatrixXd kt = q * lam.asDiagonal() * q.transpose();
  Eigen::MatrixXd raw(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) raw(i, j) = kt(i, j) / std::sqrt(w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)]);
  return KernelMatrix::from_raw(GroundSpace::discrete(w), raw, "random");
}

std::vector<double> random_f(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> f(n);
  for (auto& v : f) v = u(gen);
  return f;
}

KernelMatrix gaussian_kernel(std::size_t n, double length, double top) {
  return build_kernel(GroundSpace::midpoint(n, Density::exponential(0.8)), KernelFunction::gaussian(1.0, length), top);
}

Outcome fredholm() {
  Outcome o;
  require_reports(o, run_checks({"fredholm_consistency"}));
  return o;
}

Outcome expansion() {
  Outcome o;
  require_reports(o, run_checks({"expansion_alpha_-1", "expansion_alpha_1/2"}));
  return o;
}

Outcome janossy_pmf() {
  Outcome o;
  std::mt19937_64 gen(303);
  std::uniform_int_distribution<int> size(2, 8);
  double worst_mass = 0.0, worst_laplace = 0.0;
  for (int t = 0; t < 10; ++t) {
    const KernelMatrix k = random_kernel(gen, size(gen), 0.9);
    const Pmf pmf = exact_pmf(k, AlphaParameter(-1, 1));
    double total = 0.0;
    for (const auto& [c, p] : pmf) total += p;
    const auto f = random_f(gen, k.size());
    worst_mass = std::max(worst_mass, std::abs(total - 1.0));
    worst_laplace = std::max(worst_laplace, std::abs(pmf_laplace(pmf, f) - laplace_functional(k, -1.0, f)));
  }
  o.require(worst_mass <= 1e-10, "|sum P - 1| " + fmt("%.3g", worst_mass));
  o.require(worst_laplace <= 1e-10, "Laplace mismatch " + fmt("%.3g", worst_laplace));
  return o;
}

Outcome factorization() {
  Outcome o;
  std::mt19937_64 gen(404);
  std::uniform_int_distribution<int> size(2, 10);
  double worst = 0.0;
  for (double alpha : {-1.0, -0.5, 1.0}) {
    for (int t = 0; t < 10; ++t) {
      const KernelMatrix k = random_kernel(gen, size(gen), 0.9);
      const auto f = random_f(gen, k.size());
      const JKernel j = j_operator(k, alpha);
      Eigen::VectorXd ef(static_cast<Eigen::Index>(k.size()));
      for (std::size_t i = 0; i < k.size(); ++i) ef(static_cast<Eigen::Index>(i)) = std::exp(-f[i]);
      const auto n = static_cast<Eigen::Index>(k.size());
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      const double rhs = std::pow((id + alpha * k.weighted()).determinant(), -1.0 / alpha) *
                         std::pow((id - alpha * j.weighted() * ef.asDiagonal()).determinant(), -1.0 / alpha);
      const double lhs = laplace_functional(k, alpha, f);
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
  }
  o.require(worst <= 1e-9, "max rel deviation " + fmt("%.3g", worst));
  return o;
}

Outcome cox() {
  Outcome o;
  std::mt19937_64 gen(505);
  std::uniform_int_distribution<int> size(2, 12);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const KernelMatrix k = random_kernel(gen, size(gen), 0.9);
    const auto f = random_f(gen, k.size());
    const auto n = static_cast<Eigen::Index>(k.size());
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = 1.0 - std::exp(-f[static_cast<std::size_t>(i)]);
    // E exp(-X^T D X), X ~ N(0, Sigma): det(I + 2 Sigma D)^{-1/2}
    const double gauss = 1.0 / std::sqrt((Eigen::MatrixXd::Identity(n, n) + 2.0 * k.weighted() * d.asDiagonal()).determinant());
    worst = std::max(worst, std::abs(gauss - laplace_functional(k, 2.0, f)));
  }
  o.require(worst <= 1e-10, "max deviation " + fmt("%.3g", worst));
  return o;
}

Outcome sampler() {
  Outcome o;
  const KernelMatrix k = gaussian_kernel(6, 0.3, 0.8);
  const Pmf pmf = exact_pmf(k, AlphaParameter(-1, 1));
  std::vector<Configuration> cells;
  std::vector<double> probs;
  for (const auto& [c, p] : pmf) {
    cells.push_back(c);
    probs.push_back(p);
  }
  std::vector<double> observed(cells.size(), 0.0);
  const std::size_t draws = 100000;
  for (std::size_t i = 0; i < draws; ++i) {
    RngStream rng(42, i);
    const Configuration c = sample_dpp(k, rng);
    const auto it = std::lower_bound(cells.begin(), cells.end(), c);
    observed[static_cast<std::size_t>(it - cells.begin())] += 1.0;
  }
  const ChiSquareResult chi = chi_square(observed, probs);
  o.require(chi.passed, "chi2 z " + fmt("%.2f", chi.z) + " (dof " + std::to_string(chi.dof) + ")");
  for (const auto& alpha : {AlphaParameter(-1, 1), AlphaParameter(-1, 2), AlphaParameter(2, 1)}) {
    RunningStats count;
    for (std::size_t i = 0; i < draws; ++i) {
      RngStream rng(43, i);
      const Configuration c = alpha == AlphaParameter(-1, 1) ? sample_dpp(k, rng) : sample_alpha(k, alpha, rng).merged;
      count.add(static_cast<double>(c.total()));
    }
    const double dev = std::abs(count.mean() - k.trace());
    o.require(dev <= 3.0 * count.std_error(),
              "E|xi| alpha=" + alpha.to_string() + " off by " + fmt("%.2f", dev / count.std_error()) + " se");
  }
  return o;
}

Outcome thinning() {
  Outcome o;
  require_reports(o, run_checks({"thinning_exact", "thinning_monte_carlo"}));
  return o;
}

Outcome quasi_discrete() {
  Outcome o;
  require_reports(o, run_checks({"quasi_invariance_discrete_alpha_-1", "quasi_invariance_discrete_alpha_-1/2"}));
  return o;
}

Outcome quasi_continuum() {
  Outcome o;
  require_reports(o, run_checks({"quasi_invariance_continuum", "quasi_invariance_monte_carlo"}));
  return o;
}

Outcome gradients() {
  Outcome o;
  const KernelMatrix k = gaussian_kernel(32, 0.2, 0.8);
  const Profile v = Profile::bump(0.5, 0.35, 0.4);
  const Flow flow(v);
  std::mt19937_64 gen(1010);
  std::uniform_real_distribution<double> pos(0.05, 0.95);
  std::uniform_int_distribution<int> size(1, 5);
  double worst = 0.0;
  for (double alpha : {-1.0, 1.0}) {
    const JKernel j = j_operator(k, alpha);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> xs(static_cast<std::size_t>(size(gen)));
      for (auto& x : xs) x = pos(gen);
      worst = std::max(worst, std::abs(grad_U(j, xs, v) - grad_U_fd(j, xs, flow)));
    }
  }
  o.require(worst <= 1e-6, "grad U vs FD " + fmt("%.3g", worst));
  double jac = 0.0;
  const double h = 1e-6;
  for (double t : {0.3, 1.0}) {
    for (int i = 1; i < 20; ++i) {
      const double x = i / 20.0;
      const double fd = (flow.forward(t, x + h) - flow.forward(t, x - h)) / (2.0 * h);
      jac = std::max(jac, std::abs(flow.jacobian(t, x) - fd));
      // image form: exp(int v'(eta_{r,t} x) dr) = phi_t'(phi_t^{-1} x)
      const double y = flow.inverse(t, x);
      const double fdy = (flow.forward(t, y + h) - flow.forward(t, y - h)) / (2.0 * h);
      jac = std::max(jac, std::abs(flow.image_jacobian(t, x) - fdy));
    }
  }
  o.require(jac <= 1e-6, "Jacobian vs FD " + fmt("%.3g", jac));
  return o;
}

Outcome ibp() {
  Outcome o;
  require_reports(o, run_checks({"ibp_alpha_-1", "ibp_bias_sweep", "ibp_alpha_-1/2", "ibp_permanental"}));
  return o;
}

Outcome poisson() {
  Outcome o;
  const auto r = run_checks({"poisson_limit"});
  require_reports(o, r);
  for (const auto& row : r.front().extra["series"]["rows"])
    o.detail += " e(" + fmt("%g", row[0].get<double>()) + ")=" + fmt("%.3g", row[1].get<double>());
  return o;
}

Outcome reproducibility() {
  Outcome o;
  RunOptions opts;
  opts.seed = 42;
  const std::string a = suite_json(suite(), run_suite(suite(), opts)).dump(2);
  const std::string b = suite_json(suite(), run_suite(suite(), opts)).dump(2);
  o.require(a == b, "two seed-42 runs " + std::string(a == b ? "byte-identical" : "differ"));
  opts.parallel = true;
  const std::string c = suite_json(suite(), run_suite(suite(), opts)).dump(2);
  o.require(a == c, "parallel run " + std::string(a == c ? "byte-identical" : "differs"));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"Fredholm consistency", 10, fredholm},
      {"Expansion identity", 30, expansion},
      {"Janossy/pmf exactness", 30, janossy_pmf},
      {"Laplace factorization through J", 0, factorization},
      {"Cox identity", 0, cox},
      {"Sampler exactness", 120, sampler},
      {"Thinning law", 0, thinning},
      {"Quasi-invariance discrete-exact", 0, quasi_discrete},
      {"Quasi-invariance continuum", 0, quasi_continuum},
      {"Gradient correctness", 0, gradients},
      {"IBP residual", 600, ibp},
      {"Poisson limit", 0, poisson},
      {"Reproducibility", 0, reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.passed = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0) out.require(secs <= c.budget_s, "runtime " + fmt("%.1f", secs) + " s <= " + fmt("%g", c.budget_s) + " s");
    if (!out.passed) ++failed;
    std::printf("%s  %2zu  %-34s %s [%.2f s]\n", out.passed ? "PASS" : "FAIL", i + 1, c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
