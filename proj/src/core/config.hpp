#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core/alpha.hpp"
#include "core/flow.hpp"
#include "core/kernel.hpp"

namespace dppp {

using Json = nlohmann::json;

// Typed access to a JSON object; every failure raises ConfigError naming the
// offending field path.
class ConfigNode {
 public:
  ConfigNode(const Json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const Json& json() const noexcept { return *value_; }
  const std::string& path() const noexcept { return path_; }

  bool has(const char* key) const;
  ConfigNode child(const char* key) const;
  ConfigNode element(std::size_t i) const;
  std::size_t size() const;

  double number(const char* key) const;
  double number(const char* key, double fallback) const;
  std::int64_t integer(const char* key) const;
  std::int64_t integer(const char* key, std::int64_t fallback) const;
  std::string string(const char* key) const;
  std::string string(const char* key, const std::string& fallback) const;
  std::vector<double> numbers(const char* key) const;
  std::vector<double> numbers(const char* key, std::vector<double> fallback) const;
  AlphaParameter alpha(const char* key) const;
  AlphaParameter alpha(const char* key, const AlphaParameter& fallback) const;
  std::vector<AlphaParameter> alphas(const char* key) const;

  // Rejects keys outside the allowed set.
  void only(std::initializer_list<const char*> keys) const;

  [[noreturn]] void error(const std::string& what) const;

 private:
  const Json& at(const char* key) const;
  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* value_;
  std::string path_;
};

Json parse_json(std::string_view text, const std::string& source);
Json load_json(const std::filesystem::path& file);

// Row-major CSV with a header line holding n.
Eigen::MatrixXd parse_matrix_csv(std::string_view text, const std::string& source);

// {type, parameters, target_max_eigenvalue, space}; explicit CSV paths are
// resolved against base_dir.
KernelMatrix kernel_from_config(const ConfigNode& node, const std::filesystem::path& base_dir);
KernelMatrix load_kernel_config(const std::filesystem::path& file);

SpacePtr space_from_config(const ConfigNode& node);
Profile profile_from_config(const ConfigNode& node);
CylindricalFunctional functional_from_config(const ConfigNode& node);

std::uint64_t fnv1a(std::string_view data) noexcept;
std::string hex_digest(std::string_view data);

struct CheckSpec {
  std::string name;
  std::string type;
  std::size_t index = 0;
  Json params;
};

struct SuiteConfig {
  Json document;
  std::string digest;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::vector<CheckSpec> checks;
  std::filesystem::path base_dir;
};

SuiteConfig parse_suite(std::string_view text, const std::filesystem::path& base_dir, const std::string& source);
SuiteConfig load_suite(const std::filesystem::path& file);

}  // namespace dppp
