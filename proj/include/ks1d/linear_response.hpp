// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_LINEAR_RESPONSE_HPP
#define KS1D_LINEAR_RESPONSE_HPP

#include <vector>

#include "ks1d/density_algebra.hpp"
#include "ks1d/grid.hpp"
#include "ks1d/manybody.hpp"

namespace ks1d
{

// First derivative of the potential-to-density map at a ground state,
// expressed in zero-mean cosine coordinates on both sides. Symmetric and
// strictly negative definite.
struct ResponseMatrix
{
  Eigen::MatrixXd M;  // (n-1) x (n-1)
  double sym_residual = 0.0;
  double eig_max = 0.0;  // largest (least negative) eigenvalue
  double eig_min = 0.0;  // smallest (most negative) eigenvalue
  double cond = 0.0;     // |eig_min| / |eig_max|
};

// Density response to a potential direction: 2 B(R_perp(B* u)). Constants in
// u are annihilated; the output integrates to zero.
ZeroMeanField lro_apply(const Grid &grid, const SpectralSolution &sol, const PotentialField &u);

// Column-by-column assembly over the zero-mean basis; verifies symmetry
// (1e-9 relative) and strict negative definiteness, then symmetrizes.
ResponseMatrix assemble_lro(const Grid &grid, const SpectralSolution &sol,
                            const ZeroMeanBasis &zbasis, int threads = 1);

// Solves M u = drho in basis coordinates and returns the gauge-fixed
// potential increment. Guards: condition number above 1e12, relative
// residual above 1e-10.
QuotientPotential invert_lro(const Grid &grid, const ResponseMatrix &rm,
                             const ZeroMeanField &drho, const ZeroMeanBasis &zbasis);

struct ProjectorDerivativeReport
{
  std::vector<double> eps;
  std::vector<double> residuals;  // max-abs entry gap, formula vs central FD
  std::vector<double> ratios;     // successive residual ratios (expect ~4)
  double trace_derivative = 0.0;  // exactly zero for a rank-one family
  double max_formula_entry = 0.0;
};

// First-order change of the rank-one ground projector under (v, lambda) ->
// (v + eps u, lambda + eps mu), compared entrywise against the central
// difference of the exactly recomputed projectors.
ProjectorDerivativeReport projector_derivative_check(const Grid &grid, int N,
                                                     const PotentialField &v,
                                                     const InteractionSpec &w, double lambda,
                                                     const PotentialField &u, double mu,
                                                     const std::vector<double> &eps_ladder,
                                                     const SolverOptions &opts = {});

}  // namespace ks1d

#endif  // KS1D_LINEAR_RESPONSE_HPP
