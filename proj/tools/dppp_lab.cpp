// dppp-lab: command-line front end over the C API.
//
//   dppp-lab verify --config suite.json [--check NAME...] [--seed N] [--samples N]
//                   [--parallel] [--out report.json] [--emit-plots [--plots-dir DIR]]
//   dppp-lab sample --kernel k.json [--alpha=-1/2] [--count N] [--seed N] [--out draws.csv]
//   dppp-lab laplace --kernel k.json --alpha=-1 --f '{"type":"bump","center":0.5,"radius":0.3}'
//   dppp-lab janossy --kernel k.json --alpha=-1 --points 1,4
//   dppp-lab thinning-weights --kernel k.json --s 2 --omega 1,3,3
//
// Exit codes: 0 success (all checks passed), 1 a check failed,
// 2 configuration or usage error, 3 any other runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dppp/dppp.h"

namespace {

using OJson = nlohmann::ordered_json;

struct Failure {
  dppp_status status;
  std::string message;
};

void check(dppp_status s) {
  if (s != DPPP_OK) throw Failure{s, dppp_last_error()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{DPPP_ERR_CONFIG, path + ": cannot open"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{DPPP_ERR_INVALID_ARGUMENT, path + ": cannot write"};
  out << text;
}

std::vector<size_t> parse_indices(const std::string& text, const char* what) {
  std::vector<size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (v < 0 || used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<size_t>(v));
    } catch (const std::exception&) {
      throw Failure{DPPP_ERR_INVALID_ARGUMENT, std::string(what) + ": '" + item + "' is not a node index"};
    }
  }
  return out;
}

class Kernel {
 public:
  explicit Kernel(const std::string& path) : text_(read_file(path)) { check(dppp_kernel_from_config_file(path.c_str(), &k_)); }
  ~Kernel() { dppp_kernel_free(k_); }
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  const dppp_kernel* get() const { return k_; }
  size_t size() const { return dppp_kernel_size(k_); }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  dppp_kernel* k_ = nullptr;
};

std::string digest(const Kernel& k, const std::string& args) {
  const std::string data = k.text() + "\n" + args;
  char out[17];
  dppp_digest(data.data(), data.size(), out);
  return out;
}

std::string owned(char* s) {
  std::string out(s ? s : "");
  dppp_string_free(s);
  return out;
}

void emit(const std::string& check_name, const std::string& inputs_digest, const char* key, const OJson& value) {
  OJson j;
  j["check"] = check_name;
  j["inputs_digest"] = inputs_digest;
  j[key] = value;
  std::cout << j.dump(2) << "\n";
}

int exit_code_for(dppp_status s) { return s == DPPP_ERR_CONFIG ? 2 : 3; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for alpha-determinantal and permanental point processes"};
  app.require_subcommand(1);

  std::string config, out, plots_dir = "plots";
  std::vector<std::string> checks;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  bool parallel = false, emit_plots = false;
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_option("--config", config, "Suite config (JSON)")->required();
  verify->add_option("--check", checks, "Run only the named checks (repeatable)");
  auto* seed_opt = verify->add_option("--seed", seed, "Override the suite seed");
  verify->add_option("--samples", samples, "Override Monte Carlo sample counts")->check(CLI::PositiveNumber);
  verify->add_flag("--parallel", parallel, "Run checks and Monte Carlo replicas concurrently");
  verify->add_option("--out", out, "Write the JSON report here instead of stdout");
  verify->add_flag("--emit-plots", emit_plots, "Write per-check CSV series");
  verify->add_option("--plots-dir", plots_dir, "Directory for --emit-plots (default: plots)");

  std::string kernel, alpha = "-1", f_spec, points, omega;
  std::size_t count = 1;
  std::uint64_t sample_seed = 0;
  int s = 2;
  auto* sample = app.add_subcommand("sample", "Draw configurations as CSV");
  sample->add_option("--kernel", kernel, "Kernel config (JSON)")->required();
  sample->add_option("--alpha", alpha, "Rational alpha, e.g. --alpha=-1/2");
  sample->add_option("--count", count, "Number of replicas");
  sample->add_option("--seed", sample_seed, "Seed");
  sample->add_option("--out", out, "CSV output file (default stdout)");

  auto* laplace = app.add_subcommand("laplace", "Laplace functional E[exp(-<f, xi>)]");
  laplace->add_option("--kernel", kernel, "Kernel config (JSON)")->required();
  laplace->add_option("--alpha", alpha, "Rational alpha; 0 gives the Poisson limit");
  laplace->add_option("--f", f_spec, "Constant value or profile JSON for f")->required();

  auto* janossy = app.add_subcommand("janossy", "Janossy density of a node multiset");
  janossy->add_option("--kernel", kernel, "Kernel config (JSON)")->required();
  janossy->add_option("--alpha", alpha, "Rational alpha");
  janossy->add_option("--points", points, "Comma-separated node indices (repeat for multiplicity)");

  auto* thinning = app.add_subcommand("thinning-weights", "Conditional first-layer law R(eta, omega)");
  thinning->add_option("--kernel", kernel, "Kernel config of the alpha = -1/s law")->required();
  thinning->add_option("--s", s, "Number of layers")->check(CLI::PositiveNumber);
  thinning->add_option("--omega", omega, "Comma-separated node indices of omega");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) {
      std::vector<const char*> names;
      for (const auto& c : checks) names.push_back(c.c_str());
      dppp_verify_options opts{};
      opts.has_seed = *seed_opt ? 1 : 0;
      opts.seed = seed;
      opts.samples = samples;
      opts.parallel = parallel ? 1 : 0;
      opts.checks = names.empty() ? nullptr : names.data();
      opts.check_count = names.size();
      char* json = nullptr;
      int code = 0;
      check(dppp_verify_run(config.c_str(), &opts, emit_plots ? plots_dir.c_str() : nullptr, &json, &code));
      const std::string report = owned(json);
      write_text(out, report);
      if (!out.empty() && out != "-") {
        const OJson parsed = OJson::parse(report);
        for (const auto& r : parsed["reports"]) {
          std::printf("%s  %s\n", r["passed"].get<bool>() ? "PASS" : "FAIL", r["check_name"].get<std::string>().c_str());
        }
      }
      return code;
    }

    const Kernel k(kernel);
    if (*sample) {
      char* csv = nullptr;
      check(dppp_sample_csv(k.get(), alpha.c_str(), count, sample_seed, &csv));
      write_text(out, owned(csv));
      return 0;
    }
    if (*laplace) {
      std::vector<double> f(k.size());
      std::size_t used = 0;
      double constant = 0.0;
      bool is_number = false;
      try {
        constant = std::stod(f_spec, &used);
        is_number = used == f_spec.size();
      } catch (const std::exception&) {
      }
      if (is_number) f.assign(k.size(), constant);
      else check(dppp_profile_values(k.get(), f_spec.c_str(), f.data(), f.size()));
      double value = 0.0;
      check(dppp_laplace(k.get(), alpha.c_str(), f.data(), f.size(), &value));
      emit("laplace", digest(k, "laplace alpha=" + alpha + " f=" + f_spec), "value", value);
      return 0;
    }
    if (*janossy) {
      const auto pts = parse_indices(points, "--points");
      double density = 0.0, probability = 0.0;
      check(dppp_janossy(k.get(), alpha.c_str(), pts.data(), pts.size(), &density, &probability));
      OJson values;
      values["points"] = pts;
      values["density"] = density;
      values["probability"] = probability;
      emit("janossy", digest(k, "janossy alpha=" + alpha + " points=" + points), "values", values);
      return 0;
    }
    if (*thinning) {
      const auto om = parse_indices(omega, "--omega");
      char* json = nullptr;
      check(dppp_thinning_weights_json(k.get(), om.data(), om.size(), s, &json));
      emit("thinning-weights", digest(k, "thinning-weights s=" + std::to_string(s) + " omega=" + omega), "values",
           OJson::parse(owned(json)));
      return 0;
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "dppp-lab: %s\n", f.message.c_str());
    return exit_code_for(f.status);
  }
  return 0;
}
