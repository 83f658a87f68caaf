#include "core/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "core/error.hpp"

namespace dppp {

namespace {

const char* type_name(const Json& v) {
  return v.type_name();
}

}  // namespace

void ConfigNode::error(const std::string& what) const {
  fail(ErrorCode::ConfigError, (path_.empty() ? std::string("<root>") : path_) + ": " + what);
}

bool ConfigNode::has(const char* key) const {
  return value_->is_object() && value_->contains(key);
}

const Json& ConfigNode::at(const char* key) const {
  if (!value_->is_object()) error(std::string("expected object, got ") + type_name(*value_));
  const auto it = value_->find(key);
  if (it == value_->end()) fail(ErrorCode::ConfigError, field(key) + ": missing required field");
  return *it;
}

ConfigNode ConfigNode::child(const char* key) const {
  return ConfigNode(at(key), field(key));
}

ConfigNode ConfigNode::element(std::size_t i) const {
  if (!value_->is_array()) error(std::string("expected array, got ") + type_name(*value_));
  if (i >= value_->size()) error("index " + std::to_string(i) + " out of range");
  return ConfigNode((*value_)[i], path_ + "[" + std::to_string(i) + "]");
}

std::size_t ConfigNode::size() const {
  if (!value_->is_array()) error(std::string("expected array, got ") + type_name(*value_));
  return value_->size();
}

double ConfigNode::number(const char* key) const {
  const Json& v = at(key);
  if (!v.is_number()) fail(ErrorCode::ConfigError, field(key) + ": expected number, got " + type_name(v));
  return v.get<double>();
}

double ConfigNode::number(const char* key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t ConfigNode::integer(const char* key) const {
  const Json& v = at(key);
  if (!v.is_number_integer()) fail(ErrorCode::ConfigError, field(key) + ": expected integer, got " + type_name(v));
  return v.get<std::int64_t>();
}

std::int64_t ConfigNode::integer(const char* key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::string ConfigNode::string(const char* key) const {
  const Json& v = at(key);
  if (!v.is_string()) fail(ErrorCode::ConfigError, field(key) + ": expected string, got " + type_name(v));
  return v.get<std::string>();
}

std::string ConfigNode::string(const char* key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

std::vector<double> ConfigNode::numbers(const char* key) const {
  const Json& v = at(key);
  if (!v.is_array()) fail(ErrorCode::ConfigError, field(key) + ": expected array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      fail(ErrorCode::ConfigError, field(key) + "[" + std::to_string(i) + "]: expected number, got " + type_name(v[i]));
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<double> ConfigNode::numbers(const char* key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

namespace {

AlphaParameter alpha_from(const Json& v, const std::string& where) {
  try {
    if (v.is_string()) return AlphaParameter::parse(v.get<std::string>());
    if (v.is_number_integer()) return AlphaParameter(v.get<std::int64_t>(), 1);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, where + ": " + e.what());
  }
  fail(ErrorCode::ConfigError, where + ": expected rational string such as \"-1/2\"");
}

}  // namespace

AlphaParameter ConfigNode::alpha(const char* key) const {
  return alpha_from(at(key), field(key));
}

AlphaParameter ConfigNode::alpha(const char* key, const AlphaParameter& fallback) const {
  return has(key) ? alpha(key) : fallback;
}

std::vector<AlphaParameter> ConfigNode::alphas(const char* key) const {
  const Json& v = at(key);
  if (!v.is_array()) fail(ErrorCode::ConfigError, field(key) + ": expected array of alpha values");
  std::vector<AlphaParameter> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(alpha_from(v[i], field(key) + "[" + std::to_string(i) + "]"));
  return out;
}

void ConfigNode::only(std::initializer_list<const char*> keys) const {
  if (!value_->is_object()) error(std::string("expected object, got ") + type_name(*value_));
  for (const auto& [k, v] : value_->items()) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; });
    if (!known) fail(ErrorCode::ConfigError, field(k.c_str()) + ": unknown field");
  }
}

Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ConfigError, source + ": " + e.what());
  }
}

namespace {

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::ConfigError, file.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Json load_json(const std::filesystem::path& file) {
  return parse_json(read_file(file), file.string());
}

Eigen::MatrixXd parse_matrix_csv(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };
  auto where = [&]() { return source + ": line " + std::to_string(lineno); };
  if (!next()) fail(ErrorCode::ConfigError, source + ": empty matrix file");
  std::size_t n = 0;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(line, &used);
    if (v <= 0 || line.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("n");
    n = static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigError, where() + ": header must be the matrix size n");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    if (!next()) fail(ErrorCode::ConfigError, source + ": expected " + std::to_string(n) + " rows, got " + std::to_string(r));
    std::istringstream row(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(row, cell, ',')) {
      if (c >= n) fail(ErrorCode::ConfigError, where() + ": more than " + std::to_string(n) + " columns");
      try {
        std::size_t used = 0;
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = std::stod(cell, &used);
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("cell");
      } catch (const std::exception&) {
        fail(ErrorCode::ConfigError, where() + ", column " + std::to_string(c + 1) + ": not a number");
      }
      ++c;
    }
    if (c != n) fail(ErrorCode::ConfigError, where() + ": expected " + std::to_string(n) + " columns, got " + std::to_string(c));
  }
  if (next()) fail(ErrorCode::ConfigError, where() + ": trailing data after " + std::to_string(n) + " rows");
  return m;
}

SpacePtr space_from_config(const ConfigNode& node) {
  node.only({"nodes", "rule", "density"});
  const std::int64_t n = node.integer("nodes", 32);
  if (n < 1 || n > 4096) node.error("nodes must be in [1, 4096]");
  Density density = Density::uniform();
  if (node.has("density")) {
    const ConfigNode d = node.child("density");
    const std::string type = d.string("type");
    if (type == "uniform") {
      d.only({"type"});
    } else if (type == "exponential") {
      d.only({"type", "rate"});
      density = Density::exponential(d.number("rate"));
    } else if (type == "affine") {
      d.only({"type", "a", "b"});
      const double a = d.number("a"), b = d.number("b");
      if (a <= 0.0 || a + b <= 0.0) d.error("affine density must be positive on [0,1]");
      density = Density::affine(a, b);
    } else {
      d.error("unknown density type '" + type + "'");
    }
  }
  const std::string rule = node.string("rule", "midpoint");
  if (rule == "midpoint") return GroundSpace::midpoint(static_cast<std::size_t>(n), density);
  if (rule == "gauss_legendre") return GroundSpace::gauss_legendre(static_cast<std::size_t>(n), density);
  node.error("unknown quadrature rule '" + rule + "'");
}

KernelMatrix kernel_from_config(const ConfigNode& node, const std::filesystem::path& base_dir) {
  node.only({"type", "parameters", "target_max_eigenvalue", "space"});
  const std::string type = node.string("type");
  const ConfigNode params = node.child("parameters");
  std::optional<double> target;
  if (node.has("target_max_eigenvalue")) {
    target = node.number("target_max_eigenvalue");
    if (!(*target > 0.0 && *target < 1.0)) node.error("target_max_eigenvalue must lie in (0, 1)");
  }
  try {
    if (type == "explicit_matrix") {
      params.only({"csv", "matrix", "weights"});
      if (node.has("space")) node.error("explicit_matrix kernels define their own discrete space");
      Eigen::MatrixXd raw;
      if (params.has("csv")) {
        const std::filesystem::path file = base_dir / params.string("csv");
        raw = parse_matrix_csv(read_file(file), file.string());
      } else {
        const ConfigNode rows = params.child("matrix");
        const std::size_t n = rows.size();
        if (n == 0) rows.error("empty matrix");
        raw.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r) {
          const ConfigNode row = rows.element(r);
          if (row.size() != n) row.error("expected " + std::to_string(n) + " entries");
          for (std::size_t c = 0; c < n; ++c) {
            const Json& v = row.json()[c];
            if (!v.is_number()) row.element(c).error("expected number");
            raw(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v.get<double>();
          }
        }
      }
      std::vector<double> weights =
          params.numbers("weights", std::vector<double>(static_cast<std::size_t>(raw.rows()), 1.0));
      if (weights.size() != static_cast<std::size_t>(raw.rows()))
        params.error("weights must have one entry per matrix row");
      KernelMatrix k = KernelMatrix::from_raw(GroundSpace::discrete(std::move(weights)), std::move(raw));
      if (target) {
        const double top = k.max_eigenvalue();
        if (top <= 0.0) node.error("cannot rescale a kernel with zero spectrum");
        k = k.scaled(*target / top);
      }
      return k;
    }
    const SpacePtr space = node.has("space") ? space_from_config(node.child("space")) : GroundSpace::midpoint(32);
    KernelFunction fn;
    if (type == "gaussian" || type == "exponential") {
      params.only({"scale", "length"});
      const double c = params.number("scale", 1.0);
      const double len = params.number("length");
      if (len <= 0.0) params.error("length must be positive");
      if (c <= 0.0) params.error("scale must be positive");
      fn = type == "gaussian" ? KernelFunction::gaussian(c, len) : KernelFunction::exponential(c, len);
    } else if (type == "finite_rank") {
      params.only({"coefficients"});
      const auto coeffs = params.numbers("coefficients");
      if (coeffs.empty()) params.error("coefficients must be non-empty");
      for (double v : coeffs)
        if (v < 0.0) params.error("coefficients must be non-negative");
      fn = KernelFunction::finite_rank(coeffs);
    } else {
      node.error("unknown kernel type '" + type + "'");
    }
    return build_kernel(space, fn, target);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, node.path() + (node.path().empty() ? "" : ": ") + e.what());
  }
}

KernelMatrix load_kernel_config(const std::filesystem::path& file) {
  const Json doc = load_json(file);
  return kernel_from_config(ConfigNode(doc, ""), file.parent_path());
}

Profile profile_from_config(const ConfigNode& node) {
  const std::string type = node.string("type");
  if (type == "zero") {
    node.only({"type"});
    return Profile::zero();
  }
  if (type == "bump") {
    node.only({"type", "center", "radius", "amplitude"});
    const double r = node.number("radius");
    if (r <= 0.0) node.error("radius must be positive");
    return Profile::bump(node.number("center"), r, node.number("amplitude", 1.0));
  }
  if (type == "sine_window") {
    node.only({"type", "a", "b", "amplitude"});
    const double a = node.number("a"), b = node.number("b");
    if (!(a < b)) node.error("sine_window needs a < b");
    return Profile::sine_window(a, b, node.number("amplitude", 1.0));
  }
  if (type == "polynomial") {
    node.only({"type", "a", "b", "coefficients"});
    const double a = node.number("a"), b = node.number("b");
    if (!(a < b)) node.error("polynomial window needs a < b");
    return Profile::polynomial(a, b, node.numbers("coefficients"));
  }
  node.error("unknown profile type '" + type + "'");
}

CylindricalFunctional functional_from_config(const ConfigNode& node) {
  const std::string outer = node.string("outer");
  if (outer == "constant") {
    node.only({"outer", "value"});
    return CylindricalFunctional::constant(node.number("value", 1.0));
  }
  node.only({"outer", "params", "inner"});
  const ConfigNode inner_node = node.child("inner");
  std::vector<Profile> inner;
  for (std::size_t i = 0; i < inner_node.size(); ++i) inner.push_back(profile_from_config(inner_node.element(i)));
  CylindricalFunctional::Outer kind;
  if (outer == "tanh") kind = CylindricalFunctional::Outer::tanh;
  else if (outer == "gaussian_bump") kind = CylindricalFunctional::Outer::gaussian_bump;
  else if (outer == "polynomial") kind = CylindricalFunctional::Outer::polynomial;
  else node.error("unknown outer function '" + outer + "'");
  try {
    return CylindricalFunctional(kind, node.numbers("params"), std::move(inner));
  } catch (const Error& e) {
    node.error(e.what());
  }
}

std::uint64_t fnv1a(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

namespace {

const std::set<std::string>& check_types() {
  static const std::set<std::string> types{"fredholm",   "expansion", "quasi_invariance", "ibp",
                                           "ibp_bias",   "thinning",  "poisson_limit"};
  return types;
}

}  // namespace

SuiteConfig parse_suite(std::string_view text, const std::filesystem::path& base_dir, const std::string& source) {
  SuiteConfig suite;
  suite.document = parse_json(text, source);
  suite.base_dir = base_dir;
  suite.digest = hex_digest(suite.document.dump());
  const ConfigNode root(suite.document, "");
  root.only({"version", "seed", "samples", "checks", "description"});
  if (root.integer("version", 1) != 1) root.child("version").error("unsupported version");
  const std::int64_t seed = root.integer("seed", 0);
  if (seed < 0) root.child("seed").error("seed must be non-negative");
  suite.seed = static_cast<std::uint64_t>(seed);
  const std::int64_t samples = root.integer("samples", 100000);
  if (samples < 1) root.child("samples").error("samples must be positive");
  suite.samples = static_cast<std::size_t>(samples);
  if (!root.has("checks")) return suite;
  const ConfigNode checks = root.child("checks");
  std::set<std::string> names;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const ConfigNode c = checks.element(i);
    CheckSpec spec;
    spec.name = c.string("name");
    spec.type = c.string("type");
    spec.index = i;
    if (!check_types().count(spec.type)) c.child("type").error("unknown check type '" + spec.type + "'");
    if (!names.insert(spec.name).second) c.child("name").error("duplicate check name '" + spec.name + "'");
    spec.params = c.json();
    suite.checks.push_back(std::move(spec));
  }
  return suite;
}

SuiteConfig load_suite(const std::filesystem::path& file) {
  return parse_suite(read_file(file), file.parent_path(), file.string());
}

}  // namespace dppp
