// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_INTERACTION_HPP
#define KS1D_INTERACTION_HPP

#include <Eigen/Dense>

#include "ks1d/grid.hpp"

namespace ks1d
{

// Symmetric two-body kernel on the grid. Built-in families plus a caller
// supplied sample matrix.
struct InteractionSpec
{
  enum class Kind
  {
    SoftCoulomb,
    Yukawa,
    Contact,
    Custom
  };

  Kind kind = Kind::SoftCoulomb;
  double strength = 0.0;
  double softening = 0.0;  // SoftCoulomb only
  double screening = 0.0;  // Yukawa only
  Eigen::MatrixXd custom;  // Custom only

  // c / sqrt((x-y)^2 + a^2); requires a > 0.
  static InteractionSpec soft_coulomb(double c, double a);
  // c * exp(-kappa |x-y|) / (2 kappa), the screened 1-D Green kernel;
  // requires kappa > 0.
  static InteractionSpec yukawa(double c, double kappa);
  // Discrete delta: diagonal matrix c / h. Contributes zero on the
  // antisymmetric sector (distinct node tuples) but a finite Hartree energy.
  static InteractionSpec contact(double c);
  // Arbitrary samples; must be symmetric to 1e-12 relative.
  static InteractionSpec custom_kernel(Eigen::MatrixXd samples);
};

// n x n sample matrix w(x_i, x_j). Always symmetric.
Eigen::MatrixXd kernel_matrix(const Grid &grid, const InteractionSpec &spec);

}  // namespace ks1d

#endif  // KS1D_INTERACTION_HPP
