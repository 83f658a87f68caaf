#include "dppp/dppp.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/law.hpp"
#include "core/sampler.hpp"
#include "core/verify.hpp"

struct dppp_kernel {
  dppp::KernelMatrix k;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
dppp_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return DPPP_OK;
  } catch (const dppp::Error& e) {
    g_last_error = e.what();
    return static_cast<dppp_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DPPP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DPPP_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) dppp::fail(dppp::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

void need_size(const dppp_kernel* k, size_t n) {
  need(k, "kernel");
  if (n != k->k.size())
    dppp::fail(dppp::ErrorCode::InvalidArgument,
               "buffer has " + std::to_string(n) + " entries, kernel has " + std::to_string(k->k.size()) + " nodes");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

dppp::AlphaParameter alpha_of(const char* text) {
  need(text, "alpha");
  return dppp::AlphaParameter::parse(text);
}

dppp::Configuration configuration_of(const size_t* points, size_t count) {
  if (count > 0) need(points, "points");
  return dppp::Configuration::from_indices(std::span<const std::size_t>(points, count));
}

Eigen::MatrixXd matrix_of(const double* a, size_t n) {
  if (n > 0) need(a, "matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i * n + j];
  return m;
}

void check_points(const dppp_kernel* k, const dppp::Configuration& c) {
  for (const auto& a : c.atoms())
    if (a.index >= k->k.size())
      dppp::fail(dppp::ErrorCode::InvalidArgument, "node index " + std::to_string(a.index) + " out of range");
}

dppp::RunOptions options_of(const dppp_verify_options* o) {
  dppp::RunOptions r;
  if (!o) return r;
  if (o->has_seed) r.seed = o->seed;
  if (o->samples > 0) r.samples = o->samples;
  r.parallel = o->parallel != 0;
  for (size_t i = 0; i < o->check_count; ++i) {
    need(o->checks, "checks");
    need(o->checks[i], "check name");
    r.only.emplace_back(o->checks[i]);
  }
  return r;
}

}  // namespace

extern "C" {

const char* dppp_version(void) { return "1.0.0"; }

const char* dppp_status_name(dppp_status status) {
  if (status == DPPP_OK) return "Ok";
  if (status == DPPP_ERR_INTERNAL) return "Internal";
  return dppp::error_code_name(static_cast<dppp::ErrorCode>(static_cast<int>(status)));
}

const char* dppp_last_error(void) { return g_last_error.c_str(); }

void dppp_string_free(char* s) { std::free(s); }

void dppp_digest(const char* data, size_t length, char out[17]) {
  const std::string hex = dppp::hex_digest(std::string_view(data ? data : "", data ? length : 0));
  std::memcpy(out, hex.c_str(), 17);
}

dppp_status dppp_kernel_from_config(const char* json, const char* base_dir, dppp_kernel** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    const dppp::Json doc = dppp::parse_json(json, "kernel config");
    *out = new dppp_kernel{dppp::kernel_from_config(dppp::ConfigNode(doc, ""), base_dir ? base_dir : ".")};
  });
}

dppp_status dppp_kernel_from_config_file(const char* path, dppp_kernel** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new dppp_kernel{dppp::load_kernel_config(path)};
  });
}

dppp_status dppp_kernel_from_matrix(const double* raw, size_t n, const double* weights, dppp_kernel** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    if (n == 0) dppp::fail(dppp::ErrorCode::InvalidArgument, "empty matrix");
    std::vector<double> w(n, 1.0);
    if (weights) w.assign(weights, weights + n);
    *out = new dppp_kernel{dppp::KernelMatrix::from_raw(dppp::GroundSpace::discrete(std::move(w)), matrix_of(raw, n))};
  });
}

void dppp_kernel_free(dppp_kernel* k) { delete k; }

size_t dppp_kernel_size(const dppp_kernel* k) { return k ? k->k.size() : 0; }

dppp_status dppp_kernel_eigenvalues(const dppp_kernel* k, double* out, size_t n) {
  return guarded([&] {
    need_size(k, n);
    need(out, "out");
    for (size_t i = 0; i < n; ++i) out[i] = k->k.eigenvalues()(static_cast<Eigen::Index>(i));
  });
}

dppp_status dppp_kernel_nodes(const dppp_kernel* k, double* out, size_t n) {
  return guarded([&] {
    need_size(k, n);
    need(out, "out");
    for (size_t i = 0; i < n; ++i) out[i] = k->k.space()->node(i);
  });
}

dppp_status dppp_kernel_masses(const dppp_kernel* k, double* out, size_t n) {
  return guarded([&] {
    need_size(k, n);
    need(out, "out");
    for (size_t i = 0; i < n; ++i) out[i] = k->k.space()->mass(i);
  });
}

dppp_status dppp_profile_values(const dppp_kernel* k, const char* profile_json, double* out, size_t n) {
  return guarded([&] {
    need_size(k, n);
    need(profile_json, "profile_json");
    need(out, "out");
    const dppp::Json doc = dppp::parse_json(profile_json, "profile");
    const dppp::Profile p = dppp::profile_from_config(dppp::ConfigNode(doc, "profile"));
    for (size_t i = 0; i < n; ++i) out[i] = p(k->k.space()->node(i));
  });
}

dppp_status dppp_fredholm_det(const dppp_kernel* k, const char* alpha, dppp_fredholm_method method, double* out) {
  return guarded([&] {
    need(k, "kernel");
    need(out, "out");
    const auto m = method == DPPP_FREDHOLM_TRACE_SERIES ? dppp::FredholmMethod::trace_series : dppp::FredholmMethod::eigen;
    *out = dppp::fredholm_det(k->k, alpha_of(alpha), m);
  });
}

dppp_status dppp_laplace(const dppp_kernel* k, const char* alpha, const double* f, size_t n, double* out) {
  return guarded([&] {
    need_size(k, n);
    need(f, "f");
    need(out, "out");
    const auto a = alpha_of(alpha);
    const std::span<const double> fs(f, n);
    *out = a.value() == 0.0 ? dppp::poisson_limit_functional(k->k, fs) : dppp::laplace_functional(k->k, a.value(), fs);
  });
}

dppp_status dppp_poisson_limit(const dppp_kernel* k, const double* f, size_t n, double* out) {
  return guarded([&] {
    need_size(k, n);
    need(f, "f");
    need(out, "out");
    *out = dppp::poisson_limit_functional(k->k, std::span<const double>(f, n));
  });
}

dppp_status dppp_janossy(const dppp_kernel* k, const char* alpha, const size_t* points, size_t count, double* density,
                         double* probability) {
  return guarded([&] {
    need(k, "kernel");
    const auto c = configuration_of(points, count);
    check_points(k, c);
    const dppp::JanossyLaw law(k->k, alpha_of(alpha).value());
    if (density) *density = law.density(c);
    if (probability) *probability = law.probability(c);
  });
}

dppp_status dppp_correlation(const dppp_kernel* k, const char* alpha, const size_t* points, size_t count, double* out) {
  return guarded([&] {
    need(k, "kernel");
    need(out, "out");
    const auto c = configuration_of(points, count);
    check_points(k, c);
    const auto pts = c.points();
    *out = dppp::correlation(k->k, alpha_of(alpha).value(), pts);
  });
}

dppp_status dppp_alpha_determinant(const double* a, size_t n, double alpha, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = dppp::alpha_determinant(matrix_of(a, n), alpha);
  });
}

dppp_status dppp_permanent(const double* a, size_t n, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = dppp::permanent_ryser(matrix_of(a, n));
  });
}

dppp_status dppp_thinning_weights_json(const dppp_kernel* k, const size_t* omega, size_t count, int s, char** out_json) {
  return guarded([&] {
    need(k, "kernel");
    need(out_json, "out_json");
    *out_json = nullptr;
    if (s < 1) dppp::fail(dppp::ErrorCode::InvalidArgument, "s must be >= 1");
    const auto c = configuration_of(omega, count);
    check_points(k, c);
    const auto weights = dppp::thinning_weights(c, s, k->k.scaled(1.0 / s));
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [eta, w] : weights) {
      nlohmann::ordered_json e;
      e["eta"] = eta.points();
      e["weight"] = w;
      arr.push_back(e);
    }
    *out_json = copy_string(arr.dump());
  });
}

dppp_status dppp_sample_csv(const dppp_kernel* k, const char* alpha, size_t count, uint64_t seed, char** out_csv) {
  return guarded([&] {
    need(k, "kernel");
    need(out_csv, "out_csv");
    *out_csv = nullptr;
    const auto a = alpha_of(alpha);
    std::ostringstream csv;
    csv << "replica,node_indices,multiplicities\n";
    for (size_t r = 0; r < count; ++r) {
      dppp::RngStream rng(seed, r);
      dppp::Configuration c;
      if (a == dppp::AlphaParameter(-1, 1)) c = dppp::sample_dpp(k->k, rng);
      else if (a.value() == 0.0) c = dppp::sample_poisson(k->k, rng);
      else c = dppp::sample_alpha(k->k, a, rng).merged;
      csv << r << ',';
      for (size_t i = 0; i < c.atoms().size(); ++i) csv << (i ? ";" : "") << c.atoms()[i].index;
      csv << ',';
      for (size_t i = 0; i < c.atoms().size(); ++i) csv << (i ? ";" : "") << c.atoms()[i].multiplicity;
      csv << '\n';
    }
    *out_csv = copy_string(csv.str());
  });
}

dppp_status dppp_verify_run(const char* config_path, const dppp_verify_options* options, const char* plot_dir,
                            char** out_json, int* exit_code) {
  return guarded([&] {
    need(config_path, "config_path");
    need(out_json, "out_json");
    *out_json = nullptr;
    const auto suite = dppp::load_suite(config_path);
    const auto result = dppp::run_suite(suite, options_of(options));
    if (plot_dir) dppp::write_plot_series(result, plot_dir);
    *out_json = copy_string(dppp::suite_json(suite, result).dump(2) + "\n");
    if (exit_code) *exit_code = result.exit_code;
  });
}

dppp_status dppp_verify_run_json(const char* config_path, const dppp_verify_options* options, char** out_json,
                                 int* exit_code) {
  return dppp_verify_run(config_path, options, nullptr, out_json, exit_code);
}

}  // extern "C"
