#pragma once

#include <atomic>
#include <map>
#include <span>
#include <vector>

#include "core/alpha_det.hpp"
#include "core/configuration.hpp"
#include "core/kernel.hpp"

namespace dppp {

// Det(I + alpha K~[1 - e^{-f}])^{-1/alpha}; alpha != 0.
double laplace_functional(const KernelMatrix& k, double alpha, std::span<const double> f);
// exp(-sum_j (1 - e^{-f_j}) K(x_j, x_j) mu_j)
double poisson_limit_functional(const KernelMatrix& k, std::span<const double> f);

// det_alpha(K(x_i, x_j)) on the raw kernel.
double correlation(const KernelMatrix& k, double alpha, std::span<const std::size_t> points,
                   const AlphaDetLimits& limits = {});

// Janossy densities of mu_{alpha,K,lambda} w.r.t. lambda^n, with J and the
// Fredholm prefactor cached.
class JanossyLaw {
 public:
  JanossyLaw(const KernelMatrix& k, double alpha, AlphaDetLimits limits = {});

  double alpha() const noexcept { return j_.alpha(); }
  const KernelMatrix& kernel() const noexcept { return j_.kernel(); }
  const JKernel& j() const noexcept { return j_; }
  // Det(I + alpha K~)^{-1/alpha}, i.e. j(empty).
  double void_probability() const noexcept { return prefactor_; }

  // Det(I + alpha K~)^{-1/alpha} det_alpha(J(x_i, x_j)); values in [-1e-12, 0) are clamped to 0.
  double density(std::span<const std::size_t> points) const;
  double density(const Configuration& c) const;
  // Probability of the multiset under the discrete lambda: j(c) prod mu^c / prod c!.
  double probability(const Configuration& c) const;

 private:
  JKernel j_;
  double prefactor_;
  AlphaDetLimits limits_;
};

// Count of Janossy values clamped from [-1e-12, 0) to 0 since process start.
std::uint64_t janossy_clamp_count() noexcept;

double janossy(const KernelMatrix& k, double alpha, std::span<const std::size_t> points);

using Pmf = std::map<Configuration, double>;

// Full law on a small node set. Supports alpha = -1/m (multiplicities <= m).
Pmf exact_pmf(const KernelMatrix& k, const AlphaParameter& alpha);
double pmf_laplace(const Pmf& pmf, std::span<const double> f);
double pmf_mean_count(const Pmf& pmf);

struct ExpansionResult {
  double truncated_sum;
  double fredholm_value;  // Det(I - alpha K~)^{-1/alpha}
  double tail_bound;
  std::size_t n_max;
};

// sum_{n <= n_max} 1/n! sum over node n-tuples of prod mu det_alpha(K(x_i, x_j))
// against Det(I - alpha K~)^{-1/alpha}.
ExpansionResult expansion_check(const KernelMatrix& k, double alpha, std::size_t n_max);

// R(eta, omega) for the superposition of s independent DPPs with kernel K1:
//   prod_x binom(c_omega(x), c_eta(x)) j_{-1,K1}(eta) j_{beta,(s-1)K1}(omega \ eta) / j_{alpha,sK1}(omega),
// alpha = -1/s, beta = -1/(s-1).
double thinning_weight(const Configuration& eta, const Configuration& omega, int s, const KernelMatrix& k1);

// All distinct sub-configurations eta of omega with their weights.
std::vector<std::pair<Configuration, double>> thinning_weights(const Configuration& omega, int s,
                                                               const KernelMatrix& k1);

// Labelled-atom table for omega given as a point list: weight[mask] is the
// probability that exactly the atoms in mask form the first layer.
template <class T>
std::vector<T> thinning_table(std::span<const T> det_j1_subsets, std::size_t n, int s);

// det J1[mask] for all masks of the atom list, J1 = J_{-1,K1} raw.
std::vector<double> subset_determinants(const JKernel& j1, std::span<const std::size_t> points);

}  // namespace dppp
