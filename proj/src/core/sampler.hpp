#pragma once

#include <vector>

#include "core/alpha.hpp"
#include "core/configuration.hpp"
#include "core/kernel.hpp"
#include "core/rng.hpp"

namespace dppp {

struct LayeredConfiguration {
  std::vector<Configuration> layers;
  Configuration merged;
};

// Spectral sampler: keep eigenvector k with probability lambda_k, then draw
// the projection DPP one node at a time.
Configuration sample_dpp(const KernelMatrix& k, RngStream& rng);
// Same with all eigenvalues multiplied by scale (scale <= 1).
Configuration sample_dpp_scaled(const KernelMatrix& k, double scale, RngStream& rng);

// One Cox layer: Y = sqrt(K~ scale) z, counts_j ~ Poisson(Y_j^2).
Configuration sample_cox(const KernelMatrix& k, double scale, RngStream& rng);

// alpha = -1/m: m DPP layers with kernel K/m.
// alpha = 2/m: m Cox layers with kernel K/m (alpha = 1 uses 2/2).
LayeredConfiguration sample_alpha(const KernelMatrix& k, const AlphaParameter& alpha, RngStream& rng);

// Independent counts with means K~_jj.
Configuration sample_poisson(const KernelMatrix& k, RngStream& rng);

// Draws eta subset of omega with probability R(eta, omega); j1 = J_{-1,K1}.
Configuration conditional_thin(const Configuration& omega, int s, const JKernel& j1, RngStream& rng);
Configuration conditional_thin(const Configuration& omega, int s, const KernelMatrix& k1, RngStream& rng);

}  // namespace dppp
