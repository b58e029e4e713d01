// SPDX-License-Identifier: Apache-2.0

#include "ks1d/density_algebra.hpp"

#include <cmath>

#include "ks1d/errors.hpp"

namespace ks1d
{

namespace
{

void check_state(const FermionBasis &basis, const Eigen::VectorXd &psi, const char *what)
{
  if (static_cast<std::size_t>(psi.size()) != basis.dim)
  {
    throw ConfigError(std::string(what) + ": coefficient size mismatch");
  }
}

}  // namespace

DensityField dens(const Grid &grid, const FermionBasis &basis, const Eigen::VectorXd &psi)
{
  check_state(basis, psi, "dens");
  Field rho = Field::Zero(grid.n);
  const double inv_h = 1.0 / grid.h;
  for (std::size_t r = 0; r < basis.dim; r++)
  {
    const auto K = basis.tuple(r);
    const double w = psi[r] * psi[r] * inv_h;
    for (int p = 0; p < basis.N; p++)
    {
      rho[K[p]] += w;
    }
  }
  return DensityField{std::move(rho)};
}

Field mixed_density(const Grid &grid, const FermionBasis &basis, const Eigen::VectorXd &phi,
                    const Eigen::VectorXd &psi)
{
  check_state(basis, phi, "mixed_density");
  check_state(basis, psi, "mixed_density");
  Field out = Field::Zero(grid.n);
  const double inv_h = 1.0 / grid.h;
  for (std::size_t r = 0; r < basis.dim; r++)
  {
    const auto K = basis.tuple(r);
    const double w = psi[r] * phi[r] * inv_h;
    for (int p = 0; p < basis.N; p++)
    {
      out[K[p]] += w;
    }
  }
  return out;
}

Eigen::VectorXd apply_B_adjoint(const FermionBasis &basis, const Eigen::VectorXd &psi,
                                const Field &f)
{
  check_state(basis, psi, "apply_B_adjoint");
  if (f.size() != basis.n)
  {
    throw ConfigError("apply_B_adjoint: field size mismatch");
  }
  return tuple_sum_diagonal(basis, f).cwiseProduct(psi);
}

Eigen::MatrixXd pair_density(const Grid &grid, const FermionBasis &basis,
                             const Eigen::VectorXd &psi)
{
  check_state(basis, psi, "pair_density");
  if (basis.N < 2)
  {
    throw ConfigError("pair density is undefined for a single particle");
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(grid.n, grid.n);
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  for (std::size_t r = 0; r < basis.dim; r++)
  {
    const auto K = basis.tuple(r);
    const double w = psi[r] * psi[r] * inv_h2;
    for (int p = 0; p < basis.N; p++)
    {
      for (int q = p + 1; q < basis.N; q++)
      {
        P(K[p], K[q]) += w;
        P(K[q], K[p]) += w;
      }
    }
  }
  return P;
}

double pair_contraction(const Grid &grid, const FermionBasis &basis, const Eigen::VectorXd &psi,
                        const Eigen::MatrixXd &W)
{
  check_state(basis, psi, "pair_contraction");
  (void)grid;
  const Eigen::VectorXd d = tuple_pair_diagonal(basis, W);
  long double acc = 0.0L;
  for (std::size_t r = 0; r < basis.dim; r++)
  {
    acc += static_cast<long double>(d[r]) * psi[r] * psi[r];
  }
  return static_cast<double>(acc);
}

Eigen::MatrixXd k_operator(const Grid &grid, const FermionBasis &basis,
                           const Eigen::VectorXd &psi)
{
  const DensityField rho = dens(grid, basis, psi);
  const double floor = 1e-8 * basis.N;
  if (rho.values.minCoeff() < floor)
  {
    throw SolverError("density touches the positivity floor: min " +
                      std::to_string(rho.values.minCoeff()));
  }
  if (basis.N < 2)
  {
    // No pair correlations: the integral kernel vanishes identically.
    return Eigen::MatrixXd::Zero(grid.n, grid.n);
  }
  Eigen::MatrixXd K = pair_density(grid, basis, psi);
  for (int j = 0; j < grid.n; j++)
  {
    K.col(j) /= rho.values[j];
  }
  return K;
}

Field apply_k(const Grid &grid, const Eigen::MatrixXd &K, const Field &f)
{
  if (K.cols() != f.size())
  {
    throw ConfigError("apply_k: size mismatch");
  }
  return grid.h * (K * f);
}

IplusKReport check_IplusK_invertible(const Grid &grid, const FermionBasis &basis,
                                     const FermionState &psi, const ZeroMeanBasis &zbasis)
{
  const int n = grid.n;
  IplusKReport report;
  report.not_ground_state_caveat = !psi.from_ground_state;
  const DensityField rho = dens(grid, basis, psi.coeffs);
  const Eigen::MatrixXd K = k_operator(grid, basis, psi.coeffs);

  report.restricted.resize(n - 1, n - 1);
  double residual = 0.0;
  for (int l = 0; l < n - 1; l++)
  {
    const Field f = zbasis.modes.col(l);
    // Composition route: B applied to B*(f / rho).
    const Eigen::VectorXd lifted =
        apply_B_adjoint(basis, psi.coeffs, f.cwiseQuotient(rho.values));
    const Field via_gram = mixed_density(grid, basis, lifted, psi.coeffs);
    // Direct route: f plus the integral operator K.
    const Field via_k = f + apply_k(grid, K, f);
    residual = std::max(residual, (via_gram - via_k).cwiseAbs().maxCoeff());
    report.restricted.col(l) = zbasis.coords(grid, via_k);
  }
  report.gram_residual_max = residual;

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(report.restricted);
  report.sigma_min = svd.singularValues().minCoeff();
  const double sigma_max = svd.singularValues().maxCoeff();
  report.cond = (report.sigma_min > 0.0) ? sigma_max / report.sigma_min
                                         : std::numeric_limits<double>::infinity();
  if (psi.from_ground_state && report.sigma_min < 1e-10)
  {
    throw ConsistencyError("ground-state I+K restriction is numerically singular: sigma_min " +
                           std::to_string(report.sigma_min));
  }
  return report;
}

}  // namespace ks1d
