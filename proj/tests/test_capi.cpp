#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "dppp/dppp.h"

namespace {

const char* kKernel = R"({"type": "gaussian", "parameters": {"length": 0.3}, "target_max_eigenvalue": 0.7,
                          "space": {"nodes": 5}})";

struct Handle {
  dppp_kernel* k = nullptr;
  Handle() { REQUIRE(dppp_kernel_from_config(kKernel, nullptr, &k) == DPPP_OK); }
  ~Handle() { dppp_kernel_free(k); }
};

std::string take(char* s) {
  std::string out(s ? s : "");
  dppp_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("kernel handle") {
  Handle h;
  CHECK(dppp_kernel_size(h.k) == 5);
  std::vector<double> eig(5), nodes(5), masses(5);
  CHECK(dppp_kernel_eigenvalues(h.k, eig.data(), eig.size()) == DPPP_OK);
  CHECK(eig.back() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(dppp_kernel_nodes(h.k, nodes.data(), nodes.size()) == DPPP_OK);
  CHECK(nodes[0] == doctest::Approx(0.1));
  CHECK(dppp_kernel_masses(h.k, masses.data(), masses.size()) == DPPP_OK);
  CHECK(masses[2] == doctest::Approx(0.2));
  CHECK(dppp_kernel_eigenvalues(h.k, eig.data(), 4) == DPPP_ERR_INVALID_ARGUMENT);
  CHECK(std::string(dppp_last_error()).find("4 entries") != std::string::npos);
  CHECK(dppp_kernel_size(nullptr) == 0);
}

TEST_CASE("status mapping and diagnostics") {
  dppp_kernel* k = nullptr;
  CHECK(dppp_kernel_from_config("{\"type\": \"gaussian\"", nullptr, &k) == DPPP_ERR_CONFIG);
  CHECK(k == nullptr);
  CHECK(dppp_kernel_from_config(R"({"type": "gaussian", "parameters": {}})", nullptr, &k) == DPPP_ERR_CONFIG);
  CHECK(std::string(dppp_last_error()).find("parameters.length") != std::string::npos);
  const double bad[] = {1.5, 0.0, 0.0, 0.2};
  CHECK(dppp_kernel_from_matrix(bad, 2, nullptr, &k) == DPPP_ERR_SPECTRUM_VIOLATION);
  const double asym[] = {0.5, 0.3, 0.0, 0.2};
  CHECK(dppp_kernel_from_matrix(asym, 2, nullptr, &k) == DPPP_ERR_ASYMMETRY);
  CHECK(std::string(dppp_status_name(DPPP_ERR_ASYMMETRY)) == "AsymmetryError");
  CHECK(std::string(dppp_status_name(DPPP_OK)) == "Ok");
  Handle h;
  double v = 0.0;
  CHECK(dppp_fredholm_det(h.k, "3/7", DPPP_FREDHOLM_EIGEN, &v) == DPPP_ERR_UNSUPPORTED_ALPHA);
  CHECK(dppp_fredholm_det(h.k, "-1", DPPP_FREDHOLM_EIGEN, nullptr) == DPPP_ERR_INVALID_ARGUMENT);
  CHECK(dppp_fredholm_det(h.k, "-1", DPPP_FREDHOLM_EIGEN, &v) == DPPP_OK);
  CHECK(std::string(dppp_last_error()).empty());
}

TEST_CASE("explicit matrix kernel") {
  const double raw[] = {0.5, 0.1, 0.1, 0.3};
  const double w[] = {1.0, 0.5};
  dppp_kernel* k = nullptr;
  REQUIRE(dppp_kernel_from_matrix(raw, 2, w, &k) == DPPP_OK);
  double det = 0.0, series = 0.0;
  CHECK(dppp_fredholm_det(k, "-1", DPPP_FREDHOLM_EIGEN, &det) == DPPP_OK);
  CHECK(dppp_fredholm_det(k, "-1", DPPP_FREDHOLM_TRACE_SERIES, &series) == DPPP_OK);
  // weighted matrix [[0.5, 0.1 sqrt(0.5)], [0.1 sqrt(0.5), 0.15]]
  const double expected = (1 - 0.5) * (1 - 0.15) - 0.01 * 0.5;
  CHECK(det == doctest::Approx(expected).epsilon(1e-14));
  CHECK(series == doctest::Approx(expected).epsilon(1e-12));
  const size_t pts[] = {0, 1};
  double dens = 0.0, prob = 0.0;
  CHECK(dppp_janossy(k, "-1", pts, 2, &dens, &prob) == DPPP_OK);
  CHECK(prob == doctest::Approx(dens * 0.5).epsilon(1e-14));
  double corr = 0.0;
  CHECK(dppp_correlation(k, "-1", pts, 2, &corr) == DPPP_OK);
  CHECK(corr == doctest::Approx(0.5 * 0.3 - 0.01).epsilon(1e-14));
  const size_t out_of_range[] = {2};
  CHECK(dppp_janossy(k, "-1", out_of_range, 1, &dens, &prob) == DPPP_ERR_INVALID_ARGUMENT);
  dppp_kernel_free(k);
}

TEST_CASE("laplace and poisson limit") {
  Handle h;
  std::vector<double> f(5, 0.0);
  double v = 0.0;
  CHECK(dppp_laplace(h.k, "-1/2", f.data(), f.size(), &v) == DPPP_OK);
  CHECK(v == 1.0);
  CHECK(dppp_profile_values(h.k, R"({"type": "bump", "center": 0.5, "radius": 0.45, "amplitude": 2})", f.data(),
                            f.size()) == DPPP_OK);
  CHECK(f[2] == doctest::Approx(2.0));
  double zero = 0.0, poisson = 0.0;
  CHECK(dppp_laplace(h.k, "0", f.data(), f.size(), &zero) == DPPP_OK);
  CHECK(dppp_poisson_limit(h.k, f.data(), f.size(), &poisson) == DPPP_OK);
  CHECK(zero == poisson);
  CHECK(dppp_profile_values(h.k, R"({"type": "spiral"})", f.data(), f.size()) == DPPP_ERR_CONFIG);
}

TEST_CASE("matrix functions") {
  const double a[] = {1, 2, 3, 4};
  double v = 0.0;
  CHECK(dppp_permanent(a, 2, &v) == DPPP_OK);
  CHECK(v == 10.0);
  CHECK(dppp_alpha_determinant(a, 2, -1.0, &v) == DPPP_OK);
  CHECK(v == doctest::Approx(-2.0));
  CHECK(dppp_alpha_determinant(a, 2, 0.5, &v) == DPPP_OK);
  CHECK(v == doctest::Approx(4.0 + 0.5 * 6.0));
  CHECK(dppp_alpha_determinant(nullptr, 2, 0.5, &v) == DPPP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("thinning weights JSON") {
  Handle h;
  const size_t omega[] = {1, 3};
  char* json = nullptr;
  REQUIRE(dppp_thinning_weights_json(h.k, omega, 2, 2, &json) == DPPP_OK);
  const std::string s = take(json);
  CHECK(s.find("\"eta\":[1,3]") != std::string::npos);
  CHECK(s.find("\"weight\"") != std::string::npos);
  CHECK(dppp_thinning_weights_json(h.k, omega, 2, 0, &json) == DPPP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("sample CSV") {
  Handle h;
  char* csv = nullptr;
  REQUIRE(dppp_sample_csv(h.k, "-1/2", 3, 9, &csv) == DPPP_OK);
  const std::string a = take(csv);
  CHECK(a.rfind("replica,node_indices,multiplicities\n0,", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 4);
  REQUIRE(dppp_sample_csv(h.k, "-1/2", 3, 9, &csv) == DPPP_OK);
  CHECK(take(csv) == a);
  REQUIRE(dppp_sample_csv(h.k, "-1/2", 1, 9, &csv) == DPPP_OK);
  CHECK(a.rfind(take(csv), 0) == 0);  // replica i depends only on (seed, i)
  CHECK(dppp_sample_csv(h.k, "3/7", 1, 9, &csv) == DPPP_ERR_UNSUPPORTED_ALPHA);
}

TEST_CASE("verify through the C API") {
  char* json = nullptr;
  int code = -1;
  CHECK(dppp_verify_run_json("/nonexistent/suite.json", nullptr, &json, &code) == DPPP_ERR_CONFIG);
  const std::string path = std::string(DPPP_SOURCE_DIR) + "/configs/default_suite.json";
  const char* names[] = {"poisson_limit", "expansion_alpha_-1"};
  dppp_verify_options opts{};
  opts.checks = names;
  opts.check_count = 2;
  REQUIRE(dppp_verify_run_json(path.c_str(), &opts, &json, &code) == DPPP_OK);
  const std::string report = take(json);
  CHECK(code == 0);
  CHECK(report.find("\"check_name\": \"expansion_alpha_-1\"") != std::string::npos);
  CHECK(report.find("\"check_name\": \"fredholm_consistency\"") == std::string::npos);
  const char* unknown[] = {"nope"};
  opts.checks = unknown;
  opts.check_count = 1;
  CHECK(dppp_verify_run_json(path.c_str(), &opts, &json, &code) == DPPP_ERR_CONFIG);
}

TEST_CASE("digest") {
  char a[17], b[17];
  dppp_digest("abc", 3, a);
  dppp_digest("abd", 3, b);
  CHECK(std::strlen(a) == 16);
  CHECK(std::string(a) != std::string(b));
  dppp_digest("", 0, a);
  CHECK(std::string(a) == "cbf29ce484222325");
}
