// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_DENSITY_ALGEBRA_HPP
#define KS1D_DENSITY_ALGEBRA_HPP

#include <Eigen/Dense>

#include "ks1d/grid.hpp"
#include "ks1d/manybody.hpp"

namespace ks1d
{

// One-body density: positive, integrates to the particle number.
struct DensityField
{
  Field values;
};

// rho_i = (1/h) sum over tuples containing node i of c_K^2. Integrates to N
// exactly (up to roundoff) for unit-norm coefficients.
DensityField dens(const Grid &grid, const FermionBasis &basis, const Eigen::VectorXd &psi);

// Transition density of phi against psi evaluated at the nodes:
// (1/h) sum over tuples containing node i of psi_K phi_K. Diagonal in the
// tuple basis; equals dens when phi == psi.
Field mixed_density(const Grid &grid, const FermionBasis &basis, const Eigen::VectorXd &phi,
                    const Eigen::VectorXd &psi);

// Adjoint of the transition-density map under <.,.>_h on fields and the
// Euclidean product on coefficients: c_K -> (sum over occupied nodes of f)
// times psi_K. f = 1 returns N psi.
Eigen::VectorXd apply_B_adjoint(const FermionBasis &basis, const Eigen::VectorXd &psi,
                                const Field &f);

// Two-body density on node pairs: (1/h^2) sum over tuples containing both
// nodes of c_K^2 off the diagonal, zero on the diagonal. Total mass N(N-1),
// marginal (N-1) rho. Requires N >= 2.
Eigen::MatrixXd pair_density(const Grid &grid, const FermionBasis &basis,
                             const Eigen::VectorXd &psi);

// <rho2, w> = h^2 sum_{i != j} rho2_ij W_ij, evaluated tuple-wise (exactly
// the interaction expectation of the state).
double pair_contraction(const Grid &grid, const FermionBasis &basis, const Eigen::VectorXd &psi,
                        const Eigen::MatrixXd &W);

// K_ij = rho2_ij / rho_j. Guarded: requires min rho > 1e-8 N. Acts on fields
// as (Kf)_i = sum_j h K_ij f_j; column quadrature sums are N-1.
Eigen::MatrixXd k_operator(const Grid &grid, const FermionBasis &basis,
                           const Eigen::VectorXd &psi);

Field apply_k(const Grid &grid, const Eigen::MatrixXd &K, const Field &f);

struct IplusKReport
{
  double sigma_min = 0.0;
  double cond = 0.0;
  // Max entrywise gap between the composition route B B*(f/rho) and the
  // direct route f + Kf over all zero-mean basis modes.
  double gram_residual_max = 0.0;
  // Set when psi did not come out of the ground-state solver; the positivity
  // theory behind invertibility assumes a ground state.
  bool not_ground_state_caveat = false;
  Eigen::MatrixXd restricted;  // (n-1) x (n-1) coordinates of I + K
};

// Verifies the factorization of the density Gram operator through I + K and
// reports the conditioning of its zero-mean restriction. Throws
// ConsistencyError if a ground state yields sigma_min below 1e-10.
IplusKReport check_IplusK_invertible(const Grid &grid, const FermionBasis &basis,
                                     const FermionState &psi, const ZeroMeanBasis &zbasis);

}  // namespace ks1d

#endif  // KS1D_DENSITY_ALGEBRA_HPP
