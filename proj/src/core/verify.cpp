#include "core/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "core/error.hpp"
#include "core/law.hpp"
#include "core/sampler.hpp"
#include "core/stats.hpp"

namespace dppp {

using OJson = nlohmann::ordered_json;

const char* to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::discrete_exact: return "discrete_exact";
    case Regime::continuum_quadrature: return "continuum_quadrature";
    case Regime::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

void VerificationReport::decide() {
  const bool within = abs_error <= tolerance;
  const bool mc = regime == Regime::monte_carlo && std::abs(lhs - rhs) <= 3.0 * std_error;
  passed = within || mc;
}

OJson to_json(const VerificationReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? OJson(v) : OJson(nullptr); };
  OJson j;
  j["check_name"] = r.check_name;
  j["regime"] = to_string(r.regime);
  j["lhs"] = num(r.lhs);
  j["rhs"] = num(r.rhs);
  j["abs_error"] = num(r.abs_error);
  j["rel_error"] = num(r.rel_error);
  j["tolerance"] = num(r.tolerance);
  j["n_samples"] = r.n_samples;
  j["std_error"] = num(r.std_error);
  j["passed"] = r.passed;
  j["seed"] = r.seed;
  j["config_digest"] = r.config_digest;
  if (!r.extra.empty()) j["extra"] = r.extra;
  return j;
}

namespace {

constexpr std::size_t kChunk = 1024;

double rel(double abs_error, double lhs, double rhs) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  return scale > 0.0 ? abs_error / scale : abs_error;
}

VerificationReport base_report(const std::string& name, Regime regime, const RunContext& ctx) {
  VerificationReport r;
  r.check_name = name;
  r.regime = regime;
  r.seed = std::to_string(ctx.seed);
  r.config_digest = ctx.config_digest;
  return r;
}

void set_values(VerificationReport& r, double lhs, double rhs, double tolerance) {
  r.lhs = lhs;
  r.rhs = rhs;
  r.abs_error = std::abs(lhs - rhs);
  r.rel_error = rel(r.abs_error, lhs, rhs);
  r.tolerance = tolerance;
}

OJson series(std::vector<std::string> columns, const std::vector<std::vector<double>>& rows) {
  OJson s;
  s["columns"] = columns;
  s["rows"] = rows;
  return s;
}

// Runs body(chunk) for every chunk, on all hardware threads when parallel.
// The exception of the lowest failing chunk is rethrown.
void for_chunks(std::size_t chunks, bool parallel, const std::function<void(std::size_t)>& body) {
  const std::size_t threads =
      parallel ? std::min<std::size_t>(chunks, std::max(1u, std::thread::hardware_concurrency())) : 1;
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) {
        try {
          body(c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct McResult {
  std::vector<RunningStats> stats;
  std::size_t skipped = 0;
};

// Sample i draws from stream (salt << 32) | i, so the result does not depend
// on scheduling; chunk statistics are merged in chunk order.
McResult monte_carlo(std::size_t n, std::size_t width, std::uint64_t seed, std::uint64_t salt, bool parallel,
                     const std::function<bool(RngStream&, std::span<double>)>& sample) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<McResult> parts(chunks, McResult{std::vector<RunningStats>(width), 0});
  for_chunks(chunks, parallel, [&](std::size_t c) {
    std::vector<double> out(width);
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      RngStream rng(seed, (salt << 32) | i);
      if (sample(rng, out)) {
        for (std::size_t w = 0; w < width; ++w) parts[c].stats[w].add(out[w]);
      } else {
        ++parts[c].skipped;
      }
    }
  });
  McResult total{std::vector<RunningStats>(width), 0};
  for (const auto& p : parts) {
    for (std::size_t w = 0; w < width; ++w) total.stats[w].merge(p.stats[w]);
    total.skipped += p.skipped;
  }
  return total;
}

std::uint64_t salt_of(const std::string& name) {
  return fnv1a(name) & 0xffffffffULL;
}

Configuration draw(const KernelMatrix& k, const AlphaParameter& alpha, RngStream& rng) {
  if (alpha == AlphaParameter(-1, 1)) return sample_dpp(k, rng);
  if (alpha.kind() == AlphaParameter::Kind::poisson_limit) return sample_poisson(k, rng);
  return sample_alpha(k, alpha, rng).merged;
}

// Common fields of a check entry.
struct Header {
  std::string name;
  Regime regime;
};

Regime parse_regime(const ConfigNode& node, Regime fallback) {
  if (!node.has("regime")) return fallback;
  const std::string r = node.string("regime");
  if (r == "discrete_exact") return Regime::discrete_exact;
  if (r == "continuum_quadrature") return Regime::continuum_quadrature;
  if (r == "monte_carlo") return Regime::monte_carlo;
  node.child("regime").error("unknown regime '" + r + "'");
}

Header header(const ConfigNode& node, Regime fallback, std::initializer_list<Regime> allowed) {
  Header h{node.string("name"), parse_regime(node, fallback)};
  if (std::find(allowed.begin(), allowed.end(), h.regime) == allowed.end())
    node.child("regime").error(std::string("regime '") + to_string(h.regime) + "' is not supported by this check");
  return h;
}

std::size_t samples_for(const ConfigNode& node, const RunContext& ctx) {
  if (ctx.samples_override) return ctx.samples;
  const std::int64_t n = node.integer("samples", static_cast<std::int64_t>(ctx.samples));
  if (n < 1) node.child("samples").error("samples must be positive");
  return static_cast<std::size_t>(n);
}

KernelMatrix kernel_of(const ConfigNode& node, const RunContext& ctx) {
  return kernel_from_config(node.child("kernel"), ctx.base_dir);
}

using Prepared = std::function<VerificationReport(const RunContext&)>;

// ---------------------------------------------------------------- fredholm

Prepared prepare_fredholm(const ConfigNode& node, const RunContext&) {
  node.only({"name", "type", "regime", "description", "cases", "max_nodes", "max_eigenvalue", "alphas",
             "instance_seed", "tolerance"});
  const Header h = header(node, Regime::discrete_exact, {Regime::discrete_exact});
  const auto cases = node.integer("cases", 100);
  const auto max_nodes = node.integer("max_nodes", 16);
  const double max_eig = node.number("max_eigenvalue", 0.9);
  if (cases < 1) node.child("cases").error("must be positive");
  if (max_nodes < 2 || max_nodes > 64) node.child("max_nodes").error("must lie in [2, 64]");
  if (!(max_eig > 0.0 && max_eig < 1.0)) node.child("max_eigenvalue").error("must lie in (0, 1)");
  std::vector<AlphaParameter> alphas = node.has("alphas")
                                           ? node.alphas("alphas")
                                           : std::vector<AlphaParameter>{{-1, 1}, {-1, 2}, {1, 2}, {1, 1}, {2, 1}};
  for (const auto& a : alphas)
    if (a.value() == 0.0) node.child("alphas").error("alpha = 0 has no Fredholm power");
  const auto instance_seed = static_cast<std::uint64_t>(node.integer("instance_seed", 1));
  const double tol = node.number("tolerance", 1e-10);

  return [=](const RunContext& ctx) {
    std::mt19937_64 gen(instance_seed);
    std::uniform_int_distribution<int> size(2, static_cast<int>(max_nodes));
    std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0), mass(0.5, 1.5);
    double worst = -1.0, worst_eigen = 1.0, worst_series = 1.0;
    std::string worst_case;
    std::vector<std::vector<double>> rows;
    for (std::int64_t c = 0; c < cases; ++c) {
      const int n = size(gen);
      Eigen::MatrixXd g(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = sym(gen);
      const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
      Eigen::VectorXd lam(n);
      for (int i = 0; i < n; ++i) lam(i) = max_eig * unit(gen);
      lam(0) = max_eig;
      std::vector<double> w(static_cast<std::size_t>(n));
      for (auto& v : w) v = mass(gen);
      const Eigen::MatrixXd kt = q * lam.asDiagonal() * q.transpose();
      Eigen::MatrixXd raw(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) raw(i, j) = kt(i, j) / std::sqrt(w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)]);
      const KernelMatrix k = KernelMatrix::from_raw(GroundSpace::discrete(w), raw, "random");
      for (const auto& a : alphas) {
        const double p = -1.0 / a.value();
        const double e = std::pow(fredholm_det(k, a, FredholmMethod::eigen), p);
        const double s = std::pow(fredholm_det(k, a, FredholmMethod::trace_series), p);
        const double err = std::abs(s / e - 1.0);
        rows.push_back({static_cast<double>(c), static_cast<double>(n), a.value(), err});
        if (err > worst) {
          worst = err;
          worst_eigen = e;
          worst_series = s;
          worst_case = "case " + std::to_string(c) + ", N=" + std::to_string(n) + ", alpha=" + a.to_string();
        }
      }
    }
    VerificationReport r = base_report(h.name, h.regime, ctx);
    set_values(r, worst_series / worst_eigen, 1.0, tol);
    r.extra["worst_case"] = worst_case;
    r.extra["eigen_value"] = worst_eigen;
    r.extra["series_value"] = worst_series;
    r.extra["comparisons"] = rows.size();
    r.extra["series"] = series({"case", "nodes", "alpha", "rel_error"}, rows);
    r.decide();
    return r;
  };
}

// ---------------------------------------------------------------- expansion

Prepared prepare_expansion(const ConfigNode& node, const RunContext& ctx) {
  node.only({"name", "type", "regime", "description", "kernel", "alpha", "n_max"});
  const Header h = header(node, Regime::discrete_exact, {Regime::discrete_exact});
  const KernelMatrix k = kernel_of(node, ctx);
  const AlphaParameter alpha = node.alpha("alpha");
  const auto n_max = node.integer("n_max", 8);
  if (n_max < 0 || n_max > 8) node.child("n_max").error("must lie in [0, 8]");
  if (k.size() > 8) node.child("kernel").error("expansion enumerates node tuples; use at most 8 nodes");
  return [=](const RunContext& ctx) {
    const ExpansionResult e = expansion_check(k, alpha.value(), static_cast<std::size_t>(n_max));
    VerificationReport r = base_report(h.name, h.regime, ctx);
    set_values(r, e.truncated_sum, e.fredholm_value, e.tail_bound);
    r.extra["alpha"] = alpha.to_string();
    r.extra["n_max"] = e.n_max;
    r.extra["nodes"] = k.size();
    r.decide();
    return r;
  };
}

// ---------------------------------------------------------------- quasi-invariance

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  RngStream rng(seed, index);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

Prepared prepare_quasi_invariance(const ConfigNode& node, const RunContext& ctx) {
  const Header h = header(node, Regime::discrete_exact,
                          {Regime::discrete_exact, Regime::continuum_quadrature, Regime::monte_carlo});
  const KernelMatrix k = kernel_of(node, ctx);
  const AlphaParameter alpha = node.alpha("alpha");
  if (alpha.value() == 0.0) node.child("alpha").error("alpha = 0 is the Poisson limit; use check poisson_limit");
  const Profile f = profile_from_config(node.child("test_function"));

  if (h.regime == Regime::discrete_exact) {
    node.only({"name", "type", "regime", "description", "kernel", "alpha", "test_function", "permutations",
               "permutation_seed", "tolerance"});
    const auto perms = node.integer("permutations", 5);
    const auto perm_seed = static_cast<std::uint64_t>(node.integer("permutation_seed", 1));
    const double tol = node.number("tolerance", 1e-10);
    if (perms < 1) node.child("permutations").error("must be positive");
    if (k.size() > 10) node.child("kernel").error("discrete_exact enumeration needs at most 10 nodes");
    if (alpha.value() > 0.0 || alpha.numerator() != -1)
      node.child("alpha").error("discrete_exact enumeration supports alpha = -1/m");
    return [=](const RunContext& ctx) {
      const Pmf pmf = exact_pmf(k, alpha);
      const JKernel j = j_operator(k, alpha);
      const auto nodes = k.space()->nodes();
      std::vector<double> fv(k.size());
      for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = f(nodes[i]);
      VerificationReport r = base_report(h.name, h.regime, ctx);
      double worst = -1.0;
      std::vector<std::vector<double>> rows;
      for (std::int64_t t = 0; t < perms; ++t) {
        const auto sigma = random_permutation(k.size(), perm_seed, static_cast<std::uint64_t>(t));
        double lhs = 0.0, rhs = 0.0;
        for (const auto& [c, p] : pmf) {
          double ef = 0.0, efs = 0.0;
          for (const auto& a : c.atoms()) {
            efs += a.multiplicity * fv[sigma[a.index]];
            ef += a.multiplicity * fv[a.index];
          }
          lhs += p * std::exp(-efs);
          if (p > 0.0) rhs += p * std::exp(-ef) * radon_nikodym_L(j, sigma, c);
        }
        const double err = std::abs(lhs - rhs);
        rows.push_back({static_cast<double>(t), lhs, rhs, err});
        if (err > worst) {
          worst = err;
          set_values(r, lhs, rhs, tol);
        }
      }
      r.extra["alpha"] = alpha.to_string();
      r.extra["permutations"] = perms;
      r.extra["support_size"] = pmf.size();
      r.extra["series"] = series({"permutation", "lhs", "rhs", "abs_error"}, rows);
      r.decide();
      return r;
    };
  }

  node.only({"name", "type", "regime", "description", "kernel", "alpha", "test_function", "field", "t",
             "tolerance", "samples"});
  if (!k.has_function()) node.child("kernel").error("continuum checks need a kernel function, not a matrix");
  const Profile v = profile_from_config(node.child("field"));
  const double t = node.number("t", 0.2);
  const double tol = node.number("tolerance", 1e-6);
  const Flow flow = [&] {
    try {
      return Flow(v, std::max(1.0, std::abs(t)));
    } catch (const Error& e) {
      node.child("field").error(e.what());
    }
  }();
  const std::size_t n = h.regime == Regime::monte_carlo ? samples_for(node, ctx) : 0;
  return [=](const RunContext& ctx) {
    const auto nodes = k.space()->nodes();
    std::vector<double> f_phi(k.size()), f_id(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
      f_phi[i] = f(flow.forward(t, nodes[i]));
      f_id[i] = f(nodes[i]);
    }
    const double lhs = laplace_functional(k, alpha.value(), f_phi);
    VerificationReport r = base_report(h.name, h.regime, ctx);
    r.extra["alpha"] = alpha.to_string();
    r.extra["t"] = t;
    r.extra["nodes"] = k.size();
    if (h.regime == Regime::continuum_quadrature) {
      const KernelMatrix pushed = pushforward_resampled(k, flow.at(t));
      set_values(r, lhs, laplace_functional(pushed, alpha.value(), f_id), tol);
      r.decide();
      return r;
    }
    const JKernel j = j_operator(k, alpha);
    const auto mc = monte_carlo(n, 1, ctx.seed, salt_of(h.name), ctx.parallel, [&](RngStream& rng, std::span<double> out) {
      const Configuration xi = draw(k, alpha, rng);
      double ef = 0.0;
      for (const auto& a : xi.atoms()) ef += a.multiplicity * f_id[a.index];
      try {
        out[0] = std::exp(-ef) * radon_nikodym_L(j, flow, t, xi);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateDenominator) throw;
        return false;
      }
      return true;
    });
    set_values(r, lhs, mc.stats[0].mean(), tol);
    r.n_samples = mc.stats[0].count();
    r.std_error = mc.stats[0].std_error();
    r.extra["degenerate_skipped"] = mc.skipped;
    r.decide();
    return r;
  };
}

// ---------------------------------------------------------------- integration by parts

struct IbpSetup {
  KernelMatrix k;
  AlphaParameter alpha;
  Profile v;
  CylindricalFunctional F;
  CylindricalFunctional G;
};

IbpSetup parse_ibp(const ConfigNode& node, const KernelMatrix& k, const AlphaParameter& alpha) {
  if (!k.has_function() || !k.function()->differentiable())
    node.child("kernel").error("IBP needs a differentiable kernel function");
  return IbpSetup{k, alpha, profile_from_config(node.child("field")),
                  functional_from_config(node.child("F")), functional_from_config(node.child("G"))};
}

// Per-configuration terms of E[grad F G] = -E[F grad G] + E[F G (grad U - B)].
// For alpha = -1/s the last factor is s sum_eta R(eta, omega) (grad U_1(eta) - B(eta)).
class IbpTerms {
 public:
  explicit IbpTerms(const IbpSetup& s)
      : s_(s),
        j_(j_operator(s.k, s.alpha)),
        layers_(s.alpha.numerator() == -1 && s.alpha.denominator() > 1 ? s.alpha.denominator() : 0),
        j1_(layers_ ? j_operator(s.k.scaled(1.0 / static_cast<double>(layers_)), -1.0) : j_) {}

  // out = {grad F G, F grad G, boundary}; false for degenerate configurations.
  bool operator()(const Configuration& xi, std::span<double> out) const {
    const auto& space = *s_.k.space();
    const auto pos = positions_of(space, xi);
    const double F = s_.F(pos), G = s_.G(pos);
    out[0] = s_.F.gradient(pos, s_.v) * G;
    out[1] = F * s_.G.gradient(pos, s_.v);
    if (F * G == 0.0) {
      out[2] = 0.0;
      return true;
    }
    try {
      out[2] = F * G * (layers_ ? thinned_boundary(xi) : grad_U(j_, xi, s_.v) - b_v(space, s_.v, pos));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateConfiguration && e.code() != ErrorCode::ZeroDenominator) throw;
      return false;
    }
    return true;
  }

 private:
  double thinned_boundary(const Configuration& omega) const {
    const auto pts = omega.points();
    const std::size_t n = pts.size();
    if (n == 0) return 0.0;
    if (n > 20) fail(ErrorCode::SizeLimit, "thinned boundary term needs at most 20 atoms");
    const auto& space = *s_.k.space();
    const SquareMatrix<Dual> full = j_directional(j1_, std::span<const std::size_t>(pts), s_.v);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = space.node(pts[i]);
      b[i] = space.beta(x) * s_.v(x) + s_.v.d1(x);
    }
    const std::size_t masks = std::size_t{1} << n;
    std::vector<Dual> d(masks);
    std::vector<double> dv(masks);
    std::vector<std::size_t> idx;
    for (std::size_t m = 0; m < masks; ++m) {
      idx.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (m & (std::size_t{1} << i)) idx.push_back(i);
      d[m] = idx.empty() ? Dual(1.0, 0.0) : determinant_lu(full.principal(idx));
      dv[m] = d[m].v;
    }
    const auto s = static_cast<std::size_t>(layers_);
    const auto g = subset_convolution_powers<double>(dv, n, s);
    const double denom = g[s][masks - 1];
    if (!(denom > 1e-300)) fail(ErrorCode::ZeroDenominator, "j_{alpha,K}(omega) vanishes");
    double acc = 0.0;
    for (std::size_t m = 1; m < masks; ++m) {
      const double rest = g[s - 1][(masks - 1) ^ m];
      if (rest == 0.0) continue;
      double bm = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (m & (std::size_t{1} << i)) bm += b[i];
      // R grad U_1 = -d'[mask] g_{s-1}[rest] / g_s[full]; no division by det J1[mask].
      acc += (-d[m].d - d[m].v * bm) * rest;
    }
    return static_cast<double>(s) * acc / denom;
  }

  const IbpSetup& s_;
  JKernel j_;
  std::int64_t layers_;
  JKernel j1_;
};

Prepared prepare_ibp(const ConfigNode& node, const RunContext& ctx) {
  node.only({"name", "type", "regime", "description", "kernel", "alpha", "field", "F", "G", "samples",
             "bias_allowance"});
  const Header h = header(node, Regime::monte_carlo, {Regime::monte_carlo});
  const IbpSetup setup = parse_ibp(node, kernel_of(node, ctx), node.alpha("alpha"));
  const AlphaParameter& a = setup.alpha;
  if (a.value() == 0.0) node.child("alpha").error("alpha = 0 is not covered by the IBP formula");
  const double allowance = node.number("bias_allowance", 0.05);
  const std::size_t n = samples_for(node, ctx);
  return [=](const RunContext& ctx) {
    const IbpTerms terms(setup);
    const auto mc = monte_carlo(n, 4, ctx.seed, salt_of(h.name), ctx.parallel, [&](RngStream& rng, std::span<double> out) {
      const Configuration xi = draw(setup.k, setup.alpha, rng);
      if (!terms(xi, out.first(3))) return false;
      out[3] = out[0] + out[1] - out[2];
      return true;
    });
    const double ea = mc.stats[0].mean(), eb = mc.stats[1].mean(), ec = mc.stats[2].mean();
    const double scale = std::max({std::abs(ea), std::abs(eb), std::abs(ec)});
    VerificationReport r = base_report(h.name, h.regime, ctx);
    r.lhs = ea;
    r.rhs = -eb + ec;
    r.abs_error = std::abs(mc.stats[3].mean());
    r.rel_error = rel(r.abs_error, r.lhs, r.rhs);
    r.std_error = mc.stats[3].std_error();
    r.n_samples = mc.stats[3].count();
    r.tolerance = std::max(3.0 * r.std_error, allowance * scale);
    r.extra["alpha"] = a.to_string();
    r.extra["nodes"] = setup.k.size();
    r.extra["grad_F_G"] = ea;
    r.extra["F_grad_G"] = eb;
    r.extra["boundary"] = ec;
    r.extra["scale"] = scale;
    r.extra["degenerate_skipped"] = mc.skipped;
    r.decide();
    return r;
  };
}

// Exact E[grad F G + F grad G - F G (grad U - B)] for alpha = -1 by enumerating
// all subsets up to the kernel's numerical rank.
struct BiasPoint {
  double residual;
  double scale;
  double mass;
  std::uint64_t subsets;
};

BiasPoint ibp_enumerated(const IbpSetup& s, std::size_t max_atoms) {
  const auto& space = *s.k.space();
  const JKernel j = j_operator(s.k, -1.0);
  const double prefactor = fredholm_det(s.k, -1.0);
  const std::size_t n = s.k.size();
  double ea = 0.0, eb = 0.0, ec = 0.0, mass = prefactor;
  std::uint64_t count = 1;
  std::vector<std::size_t> idx;
  std::vector<double> pos;
  std::function<void(std::size_t, double)> visit = [&](std::size_t start, double mu) {
    for (std::size_t i = start; i < n; ++i) {
      idx.push_back(i);
      pos.push_back(space.node(i));
      const double m = mu * space.mass(i);
      const Dual d = determinant_lu(j_directional(j, std::span<const std::size_t>(idx), s.v));
      const double w = prefactor * m;
      const double F = s.F(pos), G = s.G(pos);
      ea += w * d.v * s.F.gradient(pos, s.v) * G;
      eb += w * d.v * F * s.G.gradient(pos, s.v);
      // P (grad U - B) with grad U = -d'/d
      ec += w * F * G * (-d.d - d.v * b_v(space, s.v, pos));
      mass += w * d.v;
      ++count;
      if (idx.size() < max_atoms) visit(i + 1, m);
      idx.pop_back();
      pos.pop_back();
    }
  };
  visit(0, 1.0);
  return {std::abs(ea + eb - ec), std::max({std::abs(ea), std::abs(eb), std::abs(ec)}), mass, count};
}

double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

Prepared prepare_ibp_bias(const ConfigNode& node, const RunContext& ctx) {
  node.only({"name", "type", "regime", "description", "kernel", "alpha", "field", "F", "G", "nodes", "max_atoms"});
  const Header h = header(node, Regime::discrete_exact, {Regime::discrete_exact});
  if (node.alpha("alpha", AlphaParameter(-1, 1)) != AlphaParameter(-1, 1))
    node.child("alpha").error("the enumerated bias sweep supports alpha = -1");
  const auto sizes = node.numbers("nodes", {32, 64, 128});
  if (sizes.size() < 2) node.child("nodes").error("need at least two resolutions");
  std::vector<IbpSetup> setups;
  std::vector<std::size_t> atoms;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1 || sizes[i] != std::floor(sizes[i])) node.child("nodes").element(i).error("expected positive integer");
    Json kj = node.child("kernel").json();
    if (!kj.is_object()) node.child("kernel").error("expected object");
    kj["space"]["nodes"] = static_cast<std::int64_t>(sizes[i]);
    const KernelMatrix k = kernel_from_config(ConfigNode(kj, node.child("kernel").path()), ctx.base_dir);
    IbpSetup s = parse_ibp(node, k, AlphaParameter(-1, 1));
    std::size_t rank = 0;
    for (Eigen::Index e = 0; e < k.eigenvalues().size(); ++e)
      if (k.eigenvalues()(e) > 1e-12) ++rank;
    const std::size_t max_atoms = static_cast<std::size_t>(node.integer("max_atoms", static_cast<std::int64_t>(rank)));
    double log_total = 0.0;
    for (std::size_t m = 1; m <= max_atoms && m <= k.size(); ++m)
      log_total = std::max(log_total, log_binomial(k.size(), m) + std::log(static_cast<double>(max_atoms)));
    if (log_total > std::log(2e7))
      node.child("kernel").error("subset enumeration too large (use a finite-rank kernel of rank <= 3 or set max_atoms)");
    setups.push_back(std::move(s));
    atoms.push_back(max_atoms);
  }
  return [=](const RunContext& ctx) {
    std::vector<BiasPoint> pts;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < setups.size(); ++i) {
      pts.push_back(ibp_enumerated(setups[i], atoms[i]));
      rows.push_back({sizes[i], pts.back().residual, pts.back().scale, pts.back().mass});
    }
    double worst_ratio = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double ratio = pts[i - 1].residual > 0.0 ? pts[i].residual / pts[i - 1].residual
                                                      : (pts[i].residual > 0.0 ? INFINITY : 0.0);
      worst_ratio = std::max(worst_ratio, ratio);
    }
    VerificationReport r = base_report(h.name, h.regime, ctx);
    r.lhs = pts.back().residual;
    r.rhs = pts.front().residual;
    r.abs_error = worst_ratio;
    r.rel_error = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
    r.tolerance = 1.0;
    r.extra["statistic"] = "largest ratio of successive residuals; passes when below 1";
    r.extra["max_atoms"] = atoms.back();
    r.extra["series"] = series({"nodes", "residual", "scale", "mass"}, rows);
    r.decide();
    return r;
  };
}

// ---------------------------------------------------------------- thinning

Prepared prepare_thinning(const ConfigNode& node, const RunContext& ctx) {
  node.only({"name", "type", "regime", "description", "kernel", "s", "samples", "tolerance"});
  const Header h = header(node, Regime::discrete_exact, {Regime::discrete_exact, Regime::monte_carlo});
  const KernelMatrix k = kernel_of(node, ctx);
  const auto s = node.integer("s", 2);
  if (s < 1 || s > 3) node.child("s").error("s must lie in {1, 2, 3}");
  const std::size_t limit = h.regime == Regime::discrete_exact ? 6 : 10;
  if (k.size() > limit)
    node.child("kernel").error("thinning " + std::string(to_string(h.regime)) + " supports at most " +
                               std::to_string(limit) + " nodes");
  const double tol = node.number("tolerance", 1e-10);
  const std::size_t n = h.regime == Regime::monte_carlo ? samples_for(node, ctx) : 0;
  const int si = static_cast<int>(s);

  if (h.regime == Regime::discrete_exact) {
    return [=](const RunContext& ctx) {
      const KernelMatrix k1 = k.scaled(1.0 / si);
      const Pmf layer = exact_pmf(k1, AlphaParameter(-1, 1));
      std::vector<std::pair<Configuration, double>> support(layer.begin(), layer.end());
      std::map<Configuration, std::map<Configuration, double>> joint;
      std::function<void(int, const Configuration&, const Configuration&, double)> rec =
          [&](int depth, const Configuration& first, const Configuration& merged, double p) {
            if (depth == si) {
              joint[merged][first] += p;
              return;
            }
            for (const auto& [c, q] : support) {
              if (q == 0.0) continue;
              rec(depth + 1, depth == 0 ? c : first, merged.plus(c), p * q);
            }
          };
      rec(0, Configuration{}, Configuration{}, 1.0);
      double worst = -1.0, worst_joint = 0.0, worst_r = 0.0, completeness = 0.0;
      std::size_t zero_denominator = 0;
      for (const auto& [omega, row] : joint) {
        double p_omega = 0.0;
        for (const auto& [eta, p] : row) p_omega += p;
        std::vector<std::pair<Configuration, double>> weights;
        try {
          weights = thinning_weights(omega, si, k1);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ZeroDenominator) throw;
          ++zero_denominator;
          continue;
        }
        double total = 0.0;
        for (const auto& [eta, rw] : weights) {
          total += rw;
          const auto it = row.find(eta);
          const double cond = it == row.end() ? 0.0 : it->second / p_omega;
          const double err = std::abs(cond - rw);
          if (err > worst) {
            worst = err;
            worst_joint = cond;
            worst_r = rw;
          }
        }
        for (const auto& [eta, p] : row) {
          const bool listed = std::any_of(weights.begin(), weights.end(), [&](const auto& w) { return w.first == eta; });
          if (!listed && p / p_omega > worst) {
            worst = p / p_omega;
            worst_joint = p / p_omega;
            worst_r = 0.0;
          }
        }
        completeness = std::max(completeness, std::abs(total - 1.0));
      }
      VerificationReport r = base_report(h.name, h.regime, ctx);
      set_values(r, worst_joint, worst_r, tol);
      r.abs_error = std::max(r.abs_error, completeness);
      r.extra["s"] = s;
      r.extra["omega_count"] = joint.size();
      r.extra["completeness_error"] = completeness;
      r.extra["zero_denominator_skipped"] = zero_denominator;
      r.decide();
      return r;
    };
  }

  return [=](const RunContext& ctx) {
    using Counts = std::map<Configuration, std::map<Configuration, std::size_t>>;
    const AlphaParameter alpha(-1, s);
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Counts> parts(chunks);
    for_chunks(chunks, ctx.parallel, [&](std::size_t c) {
      const std::size_t end = std::min(n, (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) {
        RngStream rng(ctx.seed, (salt_of(h.name) << 32) | i);
        const LayeredConfiguration lc = sample_alpha(k, alpha, rng);
        ++parts[c][lc.merged][lc.layers.front()];
      }
    });
    Counts counts;
    for (const auto& p : parts)
      for (const auto& [omega, row] : p)
        for (const auto& [eta, cnt] : row) counts[omega][eta] += cnt;
    const KernelMatrix k1 = k.scaled(1.0 / si);
    double stat = 0.0;
    std::size_t dof = 0, cells = 0, impossible = 0, zero_denominator = 0;
    for (const auto& [omega, row] : counts) {
      std::vector<std::pair<Configuration, double>> weights;
      try {
        weights = thinning_weights(omega, si, k1);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroDenominator) throw;
        ++zero_denominator;
        continue;
      }
      std::vector<double> obs, prob;
      std::size_t matched = 0;
      for (const auto& [eta, rw] : weights) {
        const auto it = row.find(eta);
        const double o = it == row.end() ? 0.0 : static_cast<double>(it->second);
        if (rw <= 0.0) {
          impossible += static_cast<std::size_t>(o);
          continue;
        }
        obs.push_back(o);
        prob.push_back(rw);
        if (it != row.end()) ++matched;
      }
      if (matched < row.size()) impossible += row.size() - matched;
      if (obs.size() < 2) continue;
      const ChiSquareResult c = chi_square(obs, prob);
      stat += c.statistic;
      dof += c.dof;
      cells += c.cells;
    }
    VerificationReport r = base_report(h.name, h.regime, ctx);
    const double sd = std::sqrt(2.0 * static_cast<double>(std::max<std::size_t>(dof, 1)));
    r.lhs = stat;
    r.rhs = static_cast<double>(dof);
    r.abs_error = impossible > 0 ? INFINITY : std::max(0.0, stat - static_cast<double>(dof));
    r.rel_error = dof > 0 ? r.abs_error / static_cast<double>(dof) : 0.0;
    r.tolerance = 3.0 * sd;
    r.std_error = impossible > 0 ? 0.0 : sd;
    r.n_samples = n;
    r.extra["s"] = s;
    r.extra["statistic"] = "conditional chi-square summed over omega; lhs = chi2, rhs = dof";
    r.extra["z"] = dof > 0 ? (stat - static_cast<double>(dof)) / sd : 0.0;
    r.extra["omega_count"] = counts.size();
    r.extra["cells"] = cells;
    r.extra["impossible_draws"] = impossible;
    r.extra["zero_denominator_skipped"] = zero_denominator;
    r.decide();
    return r;
  };
}

// ---------------------------------------------------------------- Poisson limit

Prepared prepare_poisson_limit(const ConfigNode& node, const RunContext& ctx) {
  node.only({"name", "type", "regime", "description", "kernel", "alphas", "test_function", "tolerance"});
  const KernelMatrix k = kernel_of(node, ctx);
  const Regime fallback = k.space()->rule() == QuadratureRule::discrete ? Regime::discrete_exact
                                                                       : Regime::continuum_quadrature;
  const Header h = header(node, fallback, {Regime::discrete_exact, Regime::continuum_quadrature});
  const auto alphas = node.has("alphas") ? node.alphas("alphas")
                                         : std::vector<AlphaParameter>{{-1, 2}, {-1, 4}, {-1, 8}, {-1, 16}};
  if (alphas.size() < 2) node.child("alphas").error("need at least two alpha values");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (alphas[i].value() == 0.0) node.child("alphas").element(i).error("alpha must be non-zero");
    if (i > 0 && !(std::abs(alphas[i].value()) < std::abs(alphas[i - 1].value())))
      node.child("alphas").error("sweep must move strictly toward 0");
  }
  const Profile f = profile_from_config(node.child("test_function"));
  const double tol = node.number("tolerance", 0.2);
  return [=](const RunContext& ctx) {
    const auto nodes = k.space()->nodes();
    std::vector<double> fv(k.size());
    for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = f(nodes[i]);
    const double poisson = poisson_limit_functional(k, fv);
    std::vector<double> e;
    std::vector<std::vector<double>> rows;
    double bound = 0.0;
    for (const auto& a : alphas) {
      e.push_back(std::abs(laplace_functional(k, a.value(), fv) - poisson));
      bound = std::max(bound, e.back() / std::abs(a.value()));
      rows.push_back({a.value(), e.back(), e.back() / std::abs(a.value())});
    }
    VerificationReport r = base_report(h.name, h.regime, ctx);
    bool monotone = true;
    double worst = 0.0, worst_obs = 0.0, worst_exp = 0.0;
    const bool silent = *std::max_element(e.begin(), e.end()) <= 1e-15;
    if (!silent) {
      for (std::size_t i = 1; i < e.size(); ++i) {
        if (!(e[i] < e[i - 1])) monotone = false;
        const double observed = e[i - 1] > 0.0 ? e[i] / e[i - 1] : INFINITY;
        const double expected = std::abs(alphas[i].value() / alphas[i - 1].value());
        const double dev = std::abs(observed / expected - 1.0);
        if (dev >= worst) {
          worst = dev;
          worst_obs = observed;
          worst_exp = expected;
        }
      }
    }
    r.lhs = worst_obs;
    r.rhs = worst_exp;
    r.abs_error = monotone ? worst : INFINITY;
    r.rel_error = worst;
    r.tolerance = tol;
    r.extra["statistic"] = "worst relative deviation of e(alpha_k+1)/e(alpha_k) from |alpha_k+1/alpha_k|";
    r.extra["poisson_value"] = poisson;
    r.extra["monotone"] = monotone;
    r.extra["max_e_over_alpha"] = bound;
    r.extra["series"] = series({"alpha", "e", "e_over_abs_alpha"}, rows);
    r.decide();
    return r;
  };
}

Prepared prepare(const CheckSpec& spec, const RunContext& ctx) {
  const ConfigNode node(spec.params, "checks[" + std::to_string(spec.index) + "]");
  if (spec.type == "fredholm") return prepare_fredholm(node, ctx);
  if (spec.type == "expansion") return prepare_expansion(node, ctx);
  if (spec.type == "quasi_invariance") return prepare_quasi_invariance(node, ctx);
  if (spec.type == "ibp") return prepare_ibp(node, ctx);
  if (spec.type == "ibp_bias") return prepare_ibp_bias(node, ctx);
  if (spec.type == "thinning") return prepare_thinning(node, ctx);
  if (spec.type == "poisson_limit") return prepare_poisson_limit(node, ctx);
  node.child("type").error("unknown check type '" + spec.type + "'");
}

VerificationReport run_prepared(const Prepared& p, const CheckSpec& spec, const RunContext& ctx) {
  try {
    return p(ctx);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    VerificationReport r = base_report(spec.name, parse_regime(ConfigNode(spec.params, ""), Regime::discrete_exact), ctx);
    r.lhs = r.rhs = r.abs_error = r.rel_error = NAN;
    r.tolerance = 0.0;
    r.passed = false;
    r.extra["error"] = e.what();
    return r;
  }
}

VerificationReport check_single(const Json& params, const RunContext& ctx, const char* type) {
  CheckSpec spec;
  spec.params = params;
  spec.type = type;
  spec.name = params.is_object() && params.contains("name") && params["name"].is_string()
                  ? params["name"].get<std::string>()
                  : std::string(type);
  if (!spec.params.is_object()) fail(ErrorCode::ConfigError, "check: expected object");
  if (!spec.params.contains("name")) spec.params["name"] = spec.name;
  if (!spec.params.contains("type")) spec.params["type"] = type;
  return run_prepared(prepare(spec, ctx), spec, ctx);
}

}  // namespace

VerificationReport check_fredholm(const Json& p, const RunContext& c) { return check_single(p, c, "fredholm"); }
VerificationReport check_expansion(const Json& p, const RunContext& c) { return check_single(p, c, "expansion"); }
VerificationReport check_quasi_invariance(const Json& p, const RunContext& c) {
  return check_single(p, c, "quasi_invariance");
}
VerificationReport check_ibp(const Json& p, const RunContext& c) { return check_single(p, c, "ibp"); }
VerificationReport check_ibp_bias(const Json& p, const RunContext& c) { return check_single(p, c, "ibp_bias"); }
VerificationReport check_thinning(const Json& p, const RunContext& c) { return check_single(p, c, "thinning"); }
VerificationReport check_poisson_limit(const Json& p, const RunContext& c) {
  return check_single(p, c, "poisson_limit");
}

VerificationReport run_check(const CheckSpec& spec, const RunContext& ctx) {
  return run_prepared(prepare(spec, ctx), spec, ctx);
}

SuiteResult run_suite(const SuiteConfig& suite, const RunOptions& options) {
  RunContext ctx;
  ctx.seed = options.seed.value_or(suite.seed);
  ctx.samples = options.samples.value_or(suite.samples);
  ctx.samples_override = options.samples.has_value();
  ctx.parallel = options.parallel;
  ctx.config_digest = suite.digest;
  ctx.base_dir = suite.base_dir;
  if (ctx.samples == 0) fail(ErrorCode::ConfigError, "--samples must be positive");

  std::vector<const CheckSpec*> selected;
  for (const auto& name : options.only) {
    const bool known = std::any_of(suite.checks.begin(), suite.checks.end(), [&](const CheckSpec& c) { return c.name == name; });
    if (!known) fail(ErrorCode::ConfigError, "--check: no check named '" + name + "'");
  }
  for (const auto& c : suite.checks)
    if (options.only.empty() || std::find(options.only.begin(), options.only.end(), c.name) != options.only.end())
      selected.push_back(&c);

  std::vector<Prepared> prepared;
  for (const auto* c : selected) prepared.push_back(prepare(*c, ctx));

  SuiteResult result;
  result.reports.resize(selected.size());
  if (options.parallel && selected.size() > 1) {
    std::vector<std::future<VerificationReport>> futures;
    for (std::size_t i = 0; i < selected.size(); ++i)
      futures.push_back(std::async(std::launch::async, [&, i] { return run_prepared(prepared[i], *selected[i], ctx); }));
    for (std::size_t i = 0; i < selected.size(); ++i) result.reports[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < selected.size(); ++i) result.reports[i] = run_prepared(prepared[i], *selected[i], ctx);
  }
  result.exit_code = std::all_of(result.reports.begin(), result.reports.end(), [](const auto& r) { return r.passed; }) ? 0 : 1;
  return result;
}

SuiteResult run_suite(const std::filesystem::path& config, const RunOptions& options) {
  return run_suite(load_suite(config), options);
}

OJson suite_json(const SuiteConfig& suite, const SuiteResult& result) {
  OJson j;
  j["version"] = 1;
  j["config_digest"] = suite.digest;
  j["reports"] = OJson::array();
  for (const auto& r : result.reports) j["reports"].push_back(to_json(r));
  return j;
}

std::vector<std::filesystem::path> write_plot_series(const SuiteResult& result, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& r : result.reports) {
    if (!r.extra.contains("series")) continue;
    std::filesystem::create_directories(dir);
    std::string stem = r.check_name;
    for (char& c : stem)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    const auto path = dir / (stem + ".csv");
    std::ofstream out(path);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path.string());
    const auto& s = r.extra["series"];
    const auto& cols = s["columns"];
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].get<std::string>();
    out << "\n";
    char buf[32];
    for (const auto& row : s["rows"]) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", row[i].is_number() ? row[i].get<double>() : NAN);
        out << (i ? "," : "") << buf;
      }
      out << "\n";
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace dppp
