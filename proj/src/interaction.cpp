// SPDX-License-Identifier: Apache-2.0

#include "ks1d/interaction.hpp"

#include <cmath>

#include "ks1d/errors.hpp"

namespace ks1d
{

InteractionSpec InteractionSpec::soft_coulomb(double c, double a)
{
  if (!(a > 0.0))
  {
    throw ConfigError("soft-coulomb softening must be positive");
  }
  InteractionSpec spec;
  spec.kind = Kind::SoftCoulomb;
  spec.strength = c;
  spec.softening = a;
  return spec;
}

InteractionSpec InteractionSpec::yukawa(double c, double kappa)
{
  if (!(kappa > 0.0))
  {
    throw ConfigError("yukawa screening must be positive");
  }
  InteractionSpec spec;
  spec.kind = Kind::Yukawa;
  spec.strength = c;
  spec.screening = kappa;
  return spec;
}

InteractionSpec InteractionSpec::contact(double c)
{
  InteractionSpec spec;
  spec.kind = Kind::Contact;
  spec.strength = c;
  return spec;
}

InteractionSpec InteractionSpec::custom_kernel(Eigen::MatrixXd samples)
{
  if (samples.rows() != samples.cols() || samples.rows() == 0)
  {
    throw ConfigError("custom kernel must be a nonempty square matrix");
  }
  const double scale = std::max(1.0, samples.cwiseAbs().maxCoeff());
  const double asym = (samples - samples.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
  {
    throw ConfigError("custom kernel is not symmetric");
  }
  InteractionSpec spec;
  spec.kind = Kind::Custom;
  spec.custom = std::move(samples);
  return spec;
}

Eigen::MatrixXd kernel_matrix(const Grid &grid, const InteractionSpec &spec)
{
  const int n = grid.n;
  Eigen::MatrixXd W(n, n);
  switch (spec.kind)
  {
    case InteractionSpec::Kind::SoftCoulomb:
      for (int i = 0; i < n; i++)
      {
        for (int j = 0; j < n; j++)
        {
          const double d = grid.nodes[i] - grid.nodes[j];
          W(i, j) = spec.strength / std::sqrt(d * d + spec.softening * spec.softening);
        }
      }
      break;
    case InteractionSpec::Kind::Yukawa:
      for (int i = 0; i < n; i++)
      {
        for (int j = 0; j < n; j++)
        {
          const double d = std::abs(grid.nodes[i] - grid.nodes[j]);
          W(i, j) = spec.strength * std::exp(-spec.screening * d) / (2.0 * spec.screening);
        }
      }
      break;
    case InteractionSpec::Kind::Contact:
      W.setZero();
      W.diagonal().setConstant(spec.strength / grid.h);
      break;
    case InteractionSpec::Kind::Custom:
      if (spec.custom.rows() != n)
      {
        throw ConfigError("custom kernel size " + std::to_string(spec.custom.rows()) +
                          " does not match grid size " + std::to_string(n));
      }
      W = spec.custom;
      break;
  }
  return W;
}

}  // namespace ks1d
