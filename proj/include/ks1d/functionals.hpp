// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_FUNCTIONALS_HPP
#define KS1D_FUNCTIONALS_HPP

#include <memory>
#include <string>
#include <vector>

#include "ks1d/density_algebra.hpp"
#include "ks1d/grid.hpp"
#include "ks1d/interaction.hpp"
#include "ks1d/inversion.hpp"

namespace ks1d
{

struct FunctionalOptions
{
  InversionOptions inversion;
  int threads = 1;  // concurrency of coupling sweeps; inner solves use inversion.threads
};

struct LevyLiebResult
{
  double value = 0.0;  // kinetic + lambda * pair pairing at the recovered ground state
  QuotientPotential v;
  std::shared_ptr<const SpectralSolution> solution;
  double kinetic = 0.0;
  double pair_term = 0.0;  // quadrature of the pair density against the kernel
};

// Constrained-search value through the representability route: invert the
// density to its potential, then evaluate the interior (potential-free)
// energy at the recovered ground state. Cross-checked against the Legendre
// form E0 - <rho, v> to 1e-8 relative.
LevyLiebResult levy_lieb(const Grid &grid, int N, const DensityField &rho,
                         const InteractionSpec &w, double lambda,
                         const FunctionalOptions &opts = {});

// Non-interacting kinetic energy: the zero-coupling constrained-search value.
// Kernel-independent by construction.
double t_ks(const Grid &grid, int N, const DensityField &rho, const FunctionalOptions &opts = {});

// Mean-field energy h^2 rho^T W rho and its functional derivative 2 h W rho
// (for symmetric kernels). The potential has no atom part.
double hartree_energy(const Grid &grid, const DensityField &rho, const InteractionSpec &w);
PotentialField hartree_potential(const Grid &grid, const DensityField &rho,
                                 const InteractionSpec &w);

struct ExchangeReport
{
  double value = 0.0;             // exchange energy
  double pair_slope = 0.0;        // coupling derivative of the constrained search at 0
  double pair_slope_fd = 0.0;     // the same slope by Richardson finite differences
  double fd_error_estimate = 0.0; // stencil disagreement floored by solve noise
  double hartree = 0.0;
};

// Exchange energy: the coupling slope of the constrained-search value at zero
// coupling minus the mean-field energy. The slope is evaluated two ways
// (ground-state pairing vs finite differences of the value) and the routes
// must agree within 10x the finite-difference error estimate.
ExchangeReport exchange_energy(const Grid &grid, int N, const DensityField &rho,
                               const InteractionSpec &w, const FunctionalOptions &opts = {});

// Exchange potential: minus the coupling derivative of the inverted potential
// at zero coupling, minus the mean-field potential; gauge-fixed. The
// derivative uses central stencils at 1e-3 and 5e-4 with Richardson
// extrapolation.
QuotientPotential exchange_potential(const Grid &grid, int N, const DensityField &rho,
                                     const InteractionSpec &w, const FunctionalOptions &opts = {});

struct Gl2Result
{
  double value = 0.0;                // series sum; never positive
  std::vector<double> terms;         // -m_j^2 / omega_j per excited state
  std::vector<double> partial_sums;  // running sums, monotone non-increasing
  double tail_estimate = 0.0;        // geometric extrapolation of the dropped remainder
  int states_used = 0;               // eigenpairs entering the series, ground included
};

// Second-order correlation energy of the zero-coupling system: sum over
// excited states of -|<psi_0, W psi_j>|^2 / (E_j - E_0) where W is the pair
// operator minus the exchange and mean-field one-body potentials (zero-mass
// representatives). n_states <= 0 uses the full spectrum. Dense path only.
Gl2Result gl2_energy(const Grid &grid, int N, const DensityField &rho, const InteractionSpec &w,
                     int n_states, const FunctionalOptions &opts = {});

struct CouplingSample
{
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  QuotientPotential v;
  double f_value = 0.0;    // constrained-search value at this coupling
  double e_xc = 0.0;       // exchange-correlation energy at this coupling
  double e_hartree = 0.0;  // mean-field energy (coupling-independent)
  double gap = 0.0;        // spectral gap of the inverted system
};

struct CouplingSweep
{
  std::vector<CouplingSample> samples;  // in input-grid order
  double t_ks = 0.0;
  double e_hartree = 0.0;
  std::vector<int> fit_degrees;       // polynomial degrees fit to value(coupling)
  std::vector<double> fit_rms;        // RMS fit residual per degree
  std::vector<double> slope_defects;  // relative increments of consecutive potential slopes
  bool f_monotone = true;             // value non-decreasing along ascending couplings
};

// Per-coupling inversion and energy split, with smoothness diagnostics:
// polynomial fit-residual decay of the value curve and difference-quotient
// regularity of the potential path. Individual sample failures are recorded
// on the sample and do not abort the sweep.
CouplingSweep ac_sweep(const Grid &grid, int N, const DensityField &rho, const InteractionSpec &w,
                       const std::vector<double> &lambda_grid, const FunctionalOptions &opts = {});

}  // namespace ks1d

#endif  // KS1D_FUNCTIONALS_HPP
