// SPDX-License-Identifier: Apache-2.0

#include "ks1d/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ks1d
{

namespace
{

void check_size(const Grid &grid, const Field &f, const char *what)
{
  if (f.size() != grid.n)
  {
    throw ConfigError(std::string(what) + ": field has " + std::to_string(f.size()) +
                      " entries, grid has " + std::to_string(grid.n));
  }
}

// Tridiagonal SPD solve of (I - Laplacian) u = r by elimination. The matrix
// has diagonal 1 + (2 or 1)/h^2 and off-diagonal -1/h^2 with the mirror
// boundary closure.
Field solve_identity_minus_laplacian(const Grid &grid, const Field &r)
{
  const int n = grid.n;
  const double w = 1.0 / (grid.h * grid.h);
  Eigen::VectorXd diag(n), rhs = r;
  for (int i = 0; i < n; i++)
  {
    diag[i] = 1.0 + ((i == 0 || i == n - 1) ? w : 2.0 * w);
  }
  // Forward elimination with the constant off-diagonal -w.
  for (int i = 1; i < n; i++)
  {
    const double m = -w / diag[i - 1];
    diag[i] -= m * (-w);
    rhs[i] -= m * rhs[i - 1];
  }
  Field u(n);
  u[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; i--)
  {
    u[i] = (rhs[i] + w * u[i + 1]) / diag[i];
  }
  return u;
}

}  // namespace

Grid make_grid(int n)
{
  if (n < 8)
  {
    throw ConfigError("grid size must be at least 8, got " + std::to_string(n));
  }
  Grid grid;
  grid.n = n;
  grid.h = 1.0 / n;
  grid.nodes.resize(n);
  for (int i = 0; i < n; i++)
  {
    grid.nodes[i] = (i + 0.5) * grid.h;
  }
  return grid;
}

Field apply_neg_laplacian(const Grid &grid, const Field &f)
{
  check_size(grid, f, "apply_neg_laplacian");
  const int n = grid.n;
  const double w = 1.0 / (grid.h * grid.h);
  Field y(n);
  for (int i = 0; i < n; i++)
  {
    // Mirror closure: the ghost value equals the boundary value, so the
    // boundary diagonal drops to w and constants are annihilated exactly.
    double acc = 0.0;
    if (i > 0)
    {
      acc += w * (f[i] - f[i - 1]);
    }
    if (i < n - 1)
    {
      acc += w * (f[i] - f[i + 1]);
    }
    y[i] = acc;
  }
  return y;
}

Eigen::MatrixXd neg_laplacian_matrix(const Grid &grid)
{
  const int n = grid.n;
  const double w = 1.0 / (grid.h * grid.h);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; i++)
  {
    A(i, i) = (i == 0 || i == n - 1) ? w : 2.0 * w;
    if (i > 0)
    {
      A(i, i - 1) = -w;
    }
    if (i < n - 1)
    {
      A(i, i + 1) = -w;
    }
  }
  return A;
}

double neg_laplacian_eigenvalue(const Grid &grid, int k)
{
  if (k < 0 || k >= grid.n)
  {
    throw ConfigError("mode index out of range: " + std::to_string(k));
  }
  const double c = std::cos(k * M_PI * grid.h);
  return 2.0 / (grid.h * grid.h) * (1.0 - c);
}

double integrate(const Grid &grid, const Field &f)
{
  check_size(grid, f, "integrate");
  return grid.h * f.sum();
}

double l2_inner(const Grid &grid, const Field &f, const Field &g)
{
  check_size(grid, f, "l2_inner");
  check_size(grid, g, "l2_inner");
  return grid.h * f.dot(g);
}

double l2_norm(const Grid &grid, const Field &f)
{
  return std::sqrt(std::max(0.0, l2_inner(grid, f, f)));
}

double h1_inner(const Grid &grid, const Field &f, const Field &g)
{
  check_size(grid, f, "h1_inner");
  check_size(grid, g, "h1_inner");
  double acc = grid.h * f.dot(g);
  const double inv_h = 1.0 / grid.h;
  for (int i = 0; i + 1 < grid.n; i++)
  {
    acc += grid.h * ((f[i + 1] - f[i]) * inv_h) * ((g[i + 1] - g[i]) * inv_h);
  }
  return acc;
}

double h1_norm(const Grid &grid, const Field &f)
{
  return std::sqrt(std::max(0.0, h1_inner(grid, f, f)));
}

ZeroMeanField make_zero_mean(const Grid &grid, Field f, double tol_rel)
{
  check_size(grid, f, "make_zero_mean");
  const double mean = integrate(grid, f);
  const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
  if (std::abs(mean) > tol_rel * scale)
  {
    throw ConsistencyError("field is not mean-free: integral " + std::to_string(mean));
  }
  // Remove the residual so the stored invariant holds to machine precision.
  f.array() -= mean;
  return ZeroMeanField{std::move(f)};
}

PotentialField make_potential(const Grid &grid, Field smooth,
                              std::vector<std::pair<int, double>> atoms)
{
  check_size(grid, smooth, "make_potential");
  std::map<int, double> merged;
  for (const auto &[idx, wgt] : atoms)
  {
    if (idx < 0 || idx >= grid.n)
    {
      throw ConfigError("atom index out of range: " + std::to_string(idx));
    }
    merged[idx] += wgt;
  }
  PotentialField v;
  v.smooth = std::move(smooth);
  for (const auto &[idx, wgt] : merged)
  {
    if (wgt != 0.0)
    {
      v.atoms.emplace_back(idx, wgt);
    }
  }
  return v;
}

Field load_vector(const Grid &grid, const PotentialField &v)
{
  check_size(grid, v.smooth, "load_vector");
  Field r = v.smooth;
  for (const auto &[idx, wgt] : v.atoms)
  {
    if (idx < 0 || idx >= grid.n)
    {
      throw ConfigError("atom index out of range: " + std::to_string(idx));
    }
    r[idx] += wgt / grid.h;
  }
  return r;
}

double potential_action(const Grid &grid, const PotentialField &v, const Field &f)
{
  check_size(grid, f, "potential_action");
  return grid.h * f.dot(load_vector(grid, v));
}

double total_mass(const Grid &grid, const PotentialField &v)
{
  double mass = integrate(grid, v.smooth);
  for (const auto &[idx, wgt] : v.atoms)
  {
    (void)idx;
    mass += wgt;
  }
  return mass;
}

PotentialField potential_difference(const Grid &grid, const PotentialField &a,
                                    const PotentialField &b)
{
  check_size(grid, a.smooth, "potential_difference");
  check_size(grid, b.smooth, "potential_difference");
  std::vector<std::pair<int, double>> atoms = a.atoms;
  for (const auto &[idx, wgt] : b.atoms)
  {
    atoms.emplace_back(idx, -wgt);
  }
  return make_potential(grid, a.smooth - b.smooth, std::move(atoms));
}

PotentialField potential_add_scaled(const Grid &grid, const PotentialField &a, double s,
                                    const PotentialField &b)
{
  check_size(grid, a.smooth, "potential_add_scaled");
  check_size(grid, b.smooth, "potential_add_scaled");
  std::vector<std::pair<int, double>> atoms = a.atoms;
  for (const auto &[idx, wgt] : b.atoms)
  {
    atoms.emplace_back(idx, s * wgt);
  }
  return make_potential(grid, a.smooth + s * b.smooth, std::move(atoms));
}

double hneg1_norm(const Grid &grid, const PotentialField &v)
{
  const Field r = load_vector(grid, v);
  const Field u = solve_identity_minus_laplacian(grid, r);
  const double q = grid.h * u.dot(r);
  return std::sqrt(std::max(0.0, q));
}

QuotientPotential gauge_fix(const Grid &grid, PotentialField v)
{
  const double mass = total_mass(grid, v);
  v.smooth.array() -= mass;
  return QuotientPotential{std::move(v)};
}

double quotient_norm(const Grid &grid, const PotentialField &v)
{
  return hneg1_norm(grid, gauge_fix(grid, v).rep);
}

double quotient_distance(const Grid &grid, const PotentialField &a,
                         const PotentialField &b)
{
  return quotient_norm(grid, potential_difference(grid, a, b));
}

Eigen::VectorXd ZeroMeanBasis::coords(const Grid &grid, const Field &f) const
{
  return grid.h * (modes.transpose() * f);
}

Field ZeroMeanBasis::synthesize(const Eigen::VectorXd &c) const
{
  return modes * c;
}

ZeroMeanBasis make_zero_mean_basis(const Grid &grid)
{
  const int n = grid.n;
  ZeroMeanBasis basis;
  basis.modes.resize(n, n - 1);
  const double amp = std::sqrt(2.0);
  for (int k = 1; k < n; k++)
  {
    for (int i = 0; i < n; i++)
    {
      basis.modes(i, k - 1) = amp * std::cos(k * M_PI * grid.nodes[i]);
    }
  }
  return basis;
}

}  // namespace ks1d
