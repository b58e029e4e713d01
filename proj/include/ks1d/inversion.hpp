// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_INVERSION_HPP
#define KS1D_INVERSION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ks1d/density_algebra.hpp"
#include "ks1d/grid.hpp"
#include "ks1d/interaction.hpp"
#include "ks1d/linear_response.hpp"

namespace ks1d
{

struct InversionOptions
{
  double tol = 1e-9;  // first-order norm of the density residual
  int max_iter = 60;
  int max_halvings = 30;
  int threads = 1;
  SolverOptions solver;
};

struct InversionResult
{
  QuotientPotential v;
  int iterations = 0;
  std::vector<double> residual_history;  // includes the initial residual
  std::vector<double> gap_history;
  std::vector<int> halvings;  // damping halvings per accepted step
  DensityField final_density;
  std::shared_ptr<const SpectralSolution> solution;
};

// Damped Newton solve of dens(ground_state(v)) = rho_target over quotient
// potentials. Accepted steps strictly decrease the residual; the returned
// representative is gauge-fixed.
InversionResult invert_density(const Grid &grid, int N, const DensityField &rho_target,
                               const InteractionSpec &w, double lambda,
                               const std::optional<QuotientPotential> &v0 = std::nullopt,
                               const InversionOptions &opts = {});

struct LipschitzOptions
{
  int ensemble = 20;
  std::vector<double> amplitudes = {1e-2, 3e-3, 1e-3};
  std::uint64_t seed = 0;
  int threads = 1;
  InversionOptions inversion;
};

struct LipschitzSample
{
  int sample = 0;
  double amplitude = 0.0;
  bool ok = false;
  std::string error;
  double drho_h1 = 0.0;
  double dv_quotient = 0.0;
  double ratio = 0.0;
};

struct LipschitzReport
{
  std::vector<double> amplitudes;
  std::vector<LipschitzSample> samples;
  std::vector<double> max_ratio;  // per amplitude, over ok samples
  std::vector<double> min_ratio;
  // Relative variation of the max ratio across the ladder (reference: the
  // smallest amplitude).
  double stability = 0.0;
  // max/min spread of recovered potential distances at the largest amplitude.
  double norm_spread = 0.0;
  int rejected_draws = 0;
};

// Empirical local Lipschitz probe of the density-to-potential map: random
// mean-free first-order-normalized directions, one ladder of amplitudes per
// direction, ratio statistics of quotient distance over density distance.
LipschitzReport lipschitz_probe(const Grid &grid, int N, const DensityField &rho,
                                const InteractionSpec &w, double lambda,
                                const LipschitzOptions &opts = {});

struct HkReport
{
  bool skipped = false;  // potentials agree modulo a constant
  double quotient_distance = 0.0;
  double density_distance_h1 = 0.0;
  double ratio = 0.0;  // quotient distance / density distance
};

// Distinct quotient potentials must produce distinct densities; throws
// ConsistencyError if the forward solves collide.
HkReport hk_uniqueness_check(const Grid &grid, int N, const PotentialField &v1,
                             const PotentialField &v2, const InteractionSpec &w, double lambda,
                             const InversionOptions &opts = {});

}  // namespace ks1d

#endif  // KS1D_INVERSION_HPP
