// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_GRID_HPP
#define KS1D_GRID_HPP

#include <utility>
#include <vector>
#include <Eigen/Dense>

#include "ks1d/errors.hpp"

namespace ks1d
{

// Sampled values on the cell midpoints of a Grid.
using Field = Eigen::VectorXd;

// Uniform cell-centered mesh of (0,1): x_i = (i + 1/2) h, h = 1/n.
struct Grid
{
  int n = 0;
  double h = 0.0;
  Field nodes;
};

// Throws ConfigError if n < 8 (below that the difference operators are too
// coarse for any of the solvers to be meaningful).
Grid make_grid(int n);

// Second-difference operator with mirror (reflecting) boundary closure; the
// output is -Laplacian applied to f. Constants map to exactly zero.
Field apply_neg_laplacian(const Grid &grid, const Field &f);

// Dense matrix of apply_neg_laplacian. Symmetric, positive semidefinite,
// one-dimensional kernel spanned by constants.
Eigen::MatrixXd neg_laplacian_matrix(const Grid &grid);

// Exact eigenvalue of apply_neg_laplacian on the mode cos(k*pi*x_i):
// (2/h^2) (1 - cos(k*pi*h)), k = 0..n-1.
double neg_laplacian_eigenvalue(const Grid &grid, int k);

// Midpoint quadrature: h * sum_i f_i.
double integrate(const Grid &grid, const Field &f);

double l2_inner(const Grid &grid, const Field &f, const Field &g);
double l2_norm(const Grid &grid, const Field &f);

// h * sum f_i g_i + h * sum over cell interfaces of one-sided difference
// quotients. This equals h * f^T (I - Laplacian) g, so the first-order norm
// and the dual norm below form an exact discrete duality pair.
double h1_inner(const Grid &grid, const Field &f, const Field &g);
double h1_norm(const Grid &grid, const Field &f);

// A field with exactly zero integral; produced by operators whose range is
// mean-free (density differences, response outputs).
struct ZeroMeanField
{
  Field values;
};

// Validates |integral| <= tol_rel * max(1, max|f|), then removes the residual
// mean so the stored invariant holds to machine precision.
ZeroMeanField make_zero_mean(const Grid &grid, Field f, double tol_rel = 1e-10);

// External potential: a smooth sampled part plus point atoms (node index,
// weight). An atom acts on fields as weight * f(node), i.e. its load-vector
// entry is weight / h.
struct PotentialField
{
  Field smooth;
  std::vector<std::pair<int, double>> atoms;
};

PotentialField make_potential(const Grid &grid, Field smooth,
                              std::vector<std::pair<int, double>> atoms = {});

// Node loads r_i = smooth_i + sum of colocated atom weights / h.
Field load_vector(const Grid &grid, const PotentialField &v);

// Duality pairing <f, v> = h * f . load_vector(v).
double potential_action(const Grid &grid, const PotentialField &v, const Field &f);

// <1, v> = integral of smooth part plus the sum of atom weights.
double total_mass(const Grid &grid, const PotentialField &v);

PotentialField potential_difference(const Grid &grid, const PotentialField &a,
                                    const PotentialField &b);

// a + s * b with atom lists merged.
PotentialField potential_add_scaled(const Grid &grid, const PotentialField &a, double s,
                                    const PotentialField &b);

// Dual (order -1) Sobolev norm: solve (I - Laplacian) u = load_vector(v) and
// return sqrt(<u, v>). Exact dual of h1_norm by construction.
double hneg1_norm(const Grid &grid, const PotentialField &v);

// Potential modulo additive constants, stored via the zero-mass representative.
struct QuotientPotential
{
  PotentialField rep;
};

// Subtracts the total mass uniformly from the smooth part. The subtracted
// constant is the exact minimizer of hneg1_norm(v - alpha).
QuotientPotential gauge_fix(const Grid &grid, PotentialField v);

// hneg1_norm of the gauge-fixed representative: inf over constants alpha of
// hneg1_norm(v - alpha).
double quotient_norm(const Grid &grid, const PotentialField &v);

double quotient_distance(const Grid &grid, const PotentialField &a,
                         const PotentialField &b);

// Orthonormal basis of the zero-integral subspace under the h-weighted dot
// product: columns q_k(x_i) = sqrt(2) cos(k*pi*x_i), k = 1..n-1. These modes
// diagonalize apply_neg_laplacian, so they double as a spectral coordinate
// system for the response operators.
struct ZeroMeanBasis
{
  Eigen::MatrixXd modes;  // n x (n-1)

  Eigen::VectorXd coords(const Grid &grid, const Field &f) const;
  Field synthesize(const Eigen::VectorXd &c) const;
};

ZeroMeanBasis make_zero_mean_basis(const Grid &grid);

}  // namespace ks1d

#endif  // KS1D_GRID_HPP
