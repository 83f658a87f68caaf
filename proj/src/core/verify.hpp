#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"

namespace dppp {

enum class Regime { discrete_exact, continuum_quadrature, monte_carlo };

const char* to_string(Regime regime) noexcept;

struct VerificationReport {
  std::string check_name;
  Regime regime = Regime::discrete_exact;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t n_samples = 0;
  double std_error = 0.0;
  bool passed = false;
  std::string seed;
  std::string config_digest;
  // Check-specific diagnostics and series (kept out of the pass rule).
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  // passed = abs_error <= tolerance, or |lhs - rhs| <= 3 std_error for Monte Carlo.
  void decide();
};

nlohmann::ordered_json to_json(const VerificationReport& report);

struct RunContext {
  std::uint64_t seed = 0;
  std::size_t samples = 100000;
  bool samples_override = false;
  bool parallel = false;
  std::string config_digest;
  std::filesystem::path base_dir;
};

// Individual checks. `params` is one entry of the suite's `checks` array.
VerificationReport check_fredholm(const Json& params, const RunContext& ctx);
VerificationReport check_expansion(const Json& params, const RunContext& ctx);
VerificationReport check_quasi_invariance(const Json& params, const RunContext& ctx);
VerificationReport check_ibp(const Json& params, const RunContext& ctx);
VerificationReport check_ibp_bias(const Json& params, const RunContext& ctx);
VerificationReport check_thinning(const Json& params, const RunContext& ctx);
VerificationReport check_poisson_limit(const Json& params, const RunContext& ctx);

VerificationReport run_check(const CheckSpec& spec, const RunContext& ctx);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  bool parallel = false;
  std::vector<std::string> only;  // check names; empty selects all
};

struct SuiteResult {
  std::vector<VerificationReport> reports;
  int exit_code = 0;  // 0 all passed, 1 some check failed
};

// Validates every selected check before running any of them; ConfigError on
// the first invalid entry.
SuiteResult run_suite(const SuiteConfig& suite, const RunOptions& options = {});
SuiteResult run_suite(const std::filesystem::path& config, const RunOptions& options = {});

// {version, config_digest, reports: [...]}
nlohmann::ordered_json suite_json(const SuiteConfig& suite, const SuiteResult& result);

// One CSV per report that carries a `series` object in extra; returns the files written.
std::vector<std::filesystem::path> write_plot_series(const SuiteResult& result, const std::filesystem::path& dir);

}  // namespace dppp
