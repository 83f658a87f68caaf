#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dppp {

// Reference density rho of lambda = rho dm, with its log-derivative beta = rho'/rho.
struct Density {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> log_derivative;

  static Density uniform();
  // rho(x) = exp(-rate x)
  static Density exponential(double rate);
  // rho(x) = a + b x, positive on [0,1]
  static Density affine(double a, double b);
};

enum class QuadratureRule { midpoint, gauss_legendre, discrete };

const char* to_string(QuadratureRule rule) noexcept;

// Discretization of E = [0,1]: nodes, Lebesgue quadrature weights w_j and the
// lambda-masses mu_j = rho(x_j) w_j that every matrix formula uses.
class GroundSpace {
 public:
  static std::shared_ptr<const GroundSpace> midpoint(std::size_t n, Density density = Density::uniform());
  static std::shared_ptr<const GroundSpace> gauss_legendre(std::size_t n, Density density = Density::uniform());
  // Abstract ground set: nodes (j+1/2)/N, rho = 1, masses equal to the given weights.
  static std::shared_ptr<const GroundSpace> discrete(std::vector<double> weights);
  // General constructor; validates positivity and strict ordering.
  static std::shared_ptr<const GroundSpace> create(std::vector<double> nodes, std::vector<double> weights,
                                                   Density density, QuadratureRule rule);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> masses() const noexcept { return masses_; }
  double node(std::size_t j) const { return nodes_.at(j); }
  double mass(std::size_t j) const { return masses_.at(j); }
  const Density& density() const noexcept { return density_; }
  QuadratureRule rule() const noexcept { return rule_; }

  double rho(double x) const { return density_.value(x); }
  double beta(double x) const { return density_.log_derivative(x); }

 private:
  GroundSpace(std::vector<double> nodes, std::vector<double> weights, Density density, QuadratureRule rule);

  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> masses_;
  Density density_;
  QuadratureRule rule_;
};

using SpacePtr = std::shared_ptr<const GroundSpace>;

// Gauss-Legendre nodes and weights mapped to [0,1].
void gauss_legendre_rule(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace dppp
