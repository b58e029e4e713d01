// SPDX-License-Identifier: Apache-2.0

#include "ks1d/complex_ext.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ks1d/errors.hpp"

namespace ks1d
{

namespace
{

std::vector<std::pair<int, double>> atoms_component(
    const std::vector<std::pair<int, Complex>> &atoms, bool imag)
{
  std::vector<std::pair<int, double>> out;
  out.reserve(atoms.size());
  for (const auto &[idx, wgt] : atoms)
  {
    const double part = imag ? wgt.imag() : wgt.real();
    if (part != 0.0)
    {
      out.emplace_back(idx, part);
    }
  }
  return out;
}

// (1/h) sum over tuples containing node i of a_K b_K, without conjugation.
ComplexField mixed_bilinear(const Grid &grid, const FermionBasis &basis, const ComplexField &a,
                            const ComplexField &b)
{
  ComplexField out = ComplexField::Zero(grid.n);
  for (std::size_t r = 0; r < basis.dim; r++)
  {
    const Complex p = a[static_cast<Eigen::Index>(r)] * b[static_cast<Eigen::Index>(r)];
    for (int node : basis.tuple(r))
    {
      out[node] += p;
    }
  }
  out /= grid.h;
  return out;
}

Complex bilinear_dot(const ComplexField &a, const ComplexField &b)
{
  return (a.cwiseProduct(b)).sum();
}

Eigen::VectorXcd tuple_sum_diagonal_c(const FermionBasis &basis, const ComplexField &r)
{
  const Eigen::VectorXd re = tuple_sum_diagonal(basis, r.real());
  const Eigen::VectorXd im = tuple_sum_diagonal(basis, r.imag());
  return re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
}

}  // namespace

ComplexPotential make_complex_potential(const Grid &grid, ComplexField smooth,
                                        std::vector<std::pair<int, Complex>> atoms)
{
  if (smooth.size() != grid.n)
  {
    throw ConfigError("complex potential sample count does not match the grid");
  }
  if (!smooth.real().allFinite() || !smooth.imag().allFinite())
  {
    throw ConfigError("complex potential has non-finite samples");
  }
  std::map<int, Complex> merged;
  for (const auto &[idx, wgt] : atoms)
  {
    if (idx < 0 || idx >= grid.n)
    {
      throw ConfigError("atom node index out of range");
    }
    if (!std::isfinite(wgt.real()) || !std::isfinite(wgt.imag()))
    {
      throw ConfigError("atom weight is not finite");
    }
    merged[idx] += wgt;
  }
  ComplexPotential out;
  out.smooth = std::move(smooth);
  for (const auto &[idx, wgt] : merged)
  {
    if (wgt != Complex(0.0, 0.0))
    {
      out.atoms.emplace_back(idx, wgt);
    }
  }
  return out;
}

ComplexPotential complexify(const Grid &grid, const PotentialField &v)
{
  ComplexPotential out;
  out.smooth = v.smooth.cast<Complex>();
  out.atoms.reserve(v.atoms.size());
  for (const auto &[idx, wgt] : v.atoms)
  {
    out.atoms.emplace_back(idx, Complex(wgt, 0.0));
  }
  (void)grid;
  return out;
}

PotentialField real_part(const Grid &grid, const ComplexPotential &v)
{
  (void)grid;
  return PotentialField{v.smooth.real(), atoms_component(v.atoms, false)};
}

PotentialField imag_part(const Grid &grid, const ComplexPotential &v)
{
  (void)grid;
  return PotentialField{v.smooth.imag(), atoms_component(v.atoms, true)};
}

ComplexPotential complex_add_scaled(const Grid &grid, const ComplexPotential &a, Complex s,
                                    const ComplexPotential &b)
{
  ComplexField smooth = a.smooth + s * b.smooth;
  std::vector<std::pair<int, Complex>> atoms = a.atoms;
  for (const auto &[idx, wgt] : b.atoms)
  {
    atoms.emplace_back(idx, s * wgt);
  }
  return make_complex_potential(grid, std::move(smooth), std::move(atoms));
}

Complex complex_total_mass(const Grid &grid, const ComplexPotential &v)
{
  Complex mass = grid.h * v.smooth.sum();
  for (const auto &[idx, wgt] : v.atoms)
  {
    mass += wgt;
  }
  return mass;
}

ComplexPotential complex_gauge_fix(const Grid &grid, ComplexPotential v)
{
  const Complex mass = complex_total_mass(grid, v);
  v.smooth.array() -= mass;
  return v;
}

ComplexField complex_load_vector(const Grid &grid, const ComplexPotential &v)
{
  ComplexField r = v.smooth;
  for (const auto &[idx, wgt] : v.atoms)
  {
    r[idx] += wgt / grid.h;
  }
  return r;
}

Complex complex_integrate(const Grid &grid, const ComplexField &f)
{
  return grid.h * f.sum();
}

double complex_h1_norm(const Grid &grid, const ComplexField &f)
{
  const double re = h1_norm(grid, f.real());
  const double im = h1_norm(grid, f.imag());
  return std::sqrt(re * re + im * im);
}

double complex_quotient_distance(const Grid &grid, const ComplexPotential &a,
                                 const ComplexPotential &b)
{
  // The dual solve has a real kernel, so the complex quotient norm splits
  // exactly into independent real and imaginary minimizations.
  const ComplexPotential d = complex_add_scaled(grid, a, Complex(-1.0, 0.0), b);
  const double re = quotient_norm(grid, real_part(grid, d));
  const double im = quotient_norm(grid, imag_part(grid, d));
  return std::sqrt(re * re + im * im);
}

ComplexEigenSolution complex_ground(const Grid &grid, int N, const ComplexPotential &v,
                                    const InteractionSpec &w, Complex lambda,
                                    const ComplexGroundOptions &opts)
{
  const double im_v = quotient_norm(grid, imag_part(grid, v));
  if (im_v > opts.ball_radius + 1e-12 || std::abs(lambda.imag()) > opts.ball_radius + 1e-12)
  {
    throw ConfigError("complex perturbation outside the supported ball: imaginary potential " +
                      std::to_string(im_v) + ", imaginary coupling " +
                      std::to_string(std::abs(lambda.imag())) + ", radius " +
                      std::to_string(opts.ball_radius));
  }

  const PotentialField zero{Field::Zero(grid.n), {}};
  const auto base = assemble_hamiltonian(grid, N, zero, w, 0.0, opts.solver);
  const FermionBasis &basis = *base->basis;
  if (basis.dim > opts.solver.dense_threshold)
  {
    throw ConfigError("the non-self-adjoint pipeline is dense-only; dimension " +
                      std::to_string(basis.dim) + " exceeds the dense threshold");
  }
  const auto dim = static_cast<Eigen::Index>(basis.dim);

  ComplexEigenSolution sol;
  sol.grid = grid;
  sol.N = N;
  sol.basis = base->basis;
  sol.W = base->W;
  sol.lambda = lambda;
  sol.vload = complex_load_vector(grid, v);
  sol.hmat = base->dense().cast<Complex>();
  const Eigen::VectorXcd one_body = tuple_sum_diagonal_c(basis, sol.vload);
  const Eigen::VectorXd pair_diag = tuple_pair_diagonal(basis, sol.W);
  for (Eigen::Index i = 0; i < dim; i++)
  {
    sol.hmat(i, i) += one_body[i] + lambda * pair_diag[i];
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(sol.hmat, true);
  if (es.info() != Eigen::Success)
  {
    throw SolverError("complex eigensolve did not converge");
  }
  Eigen::Index sel = 0;
  for (Eigen::Index j = 1; j < dim; j++)
  {
    if (es.eigenvalues()[j].real() < es.eigenvalues()[sel].real())
    {
      sel = j;
    }
  }
  sol.realgap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < dim; j++)
  {
    if (j != sel)
    {
      sol.realgap =
          std::min(sol.realgap, es.eigenvalues()[j].real() - es.eigenvalues()[sel].real());
    }
  }
  if (sol.realgap < opts.solver.gap_floor)
  {
    throw SolverError("eigenvalue selection is ambiguous: real-part gap " +
                      std::to_string(sol.realgap) + " is below the floor");
  }

  ComplexField psi = es.eigenvectors().col(sel);
  const Complex pairing = bilinear_dot(psi, psi);
  sol.binorm_size = std::abs(pairing);
  if (sol.binorm_size < opts.binorm_floor)
  {
    throw SolverError("binormalization is ill-conditioned (|psi^T psi| = " +
                      std::to_string(sol.binorm_size) + "); near an exceptional point");
  }
  psi /= std::sqrt(pairing);
  Eigen::Index top = 0;
  psi.cwiseAbs().maxCoeff(&top);
  const Complex lead = psi[top];
  if (lead.real() < 0.0 || (lead.real() == 0.0 && lead.imag() < 0.0))
  {
    psi = -psi;
  }
  sol.psi = psi;
  sol.binorm_defect = std::abs(bilinear_dot(psi, psi) - Complex(1.0, 0.0));
  sol.energy = bilinear_dot(psi, sol.hmat * psi);  // bilinear Rayleigh refresh
  sol.residual = (sol.hmat * psi - sol.energy * psi).norm() / psi.norm() /
                 (1.0 + std::abs(sol.energy));
  if (sol.residual > 1e-8)
  {
    throw ConsistencyError("complex eigenpair residual " + std::to_string(sol.residual) +
                           " exceeds 1e-8");
  }
  return sol;
}

ComplexDensity complex_density(const Grid &grid, const ComplexEigenSolution &sol)
{
  ComplexDensity rho{mixed_bilinear(grid, *sol.basis, sol.psi, sol.psi)};
  const Complex mass = complex_integrate(grid, rho.values);
  if (std::abs(mass - Complex(sol.N, 0.0)) > 1e-8 * std::max(1, sol.N))
  {
    throw ConsistencyError("complex density mass " + std::to_string(mass.real()) + "+" +
                           std::to_string(mass.imag()) + "i drifted from the particle count");
  }
  return rho;
}

ComplexInversionResult complex_invert(const Grid &grid, int N, const ComplexDensity &rho_target,
                                      const InteractionSpec &w, Complex lambda,
                                      const std::optional<ComplexPotential> &v0,
                                      const ComplexInversionOptions &opts)
{
  if (rho_target.values.size() != grid.n)
  {
    throw ConfigError("target density size mismatch");
  }
  const Complex mass = complex_integrate(grid, rho_target.values);
  if (std::abs(mass - Complex(N, 0.0)) > 1e-8 * N)
  {
    throw ConfigError("complex target mass differs from the particle count");
  }
  if (!(rho_target.values.real().minCoeff() > 0.0))
  {
    throw ConfigError("the real part of the target density must stay positive");
  }

  ComplexPotential v;
  if (v0.has_value())
  {
    v = complex_gauge_fix(grid, *v0);
  }
  else
  {
    // Start from the real-sector inversion of the real part; for targets in a
    // small ball around a real density this lands within Newton range.
    const DensityField re_target{rho_target.values.real()};
    const InversionResult rinv =
        invert_density(grid, N, re_target, w, lambda.real(), std::nullopt, opts.real_start);
    v = complex_gauge_fix(grid, complexify(grid, rinv.v.rep));
  }

  const ZeroMeanBasis zbasis = make_zero_mean_basis(grid);
  const auto coords = [&](const ComplexField &f) -> Eigen::VectorXcd
  {
    const Eigen::VectorXd re = grid.h * (zbasis.modes.transpose() * f.real());
    const Eigen::VectorXd im = grid.h * (zbasis.modes.transpose() * f.imag());
    return re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
  };
  const auto synthesize = [&](const Eigen::VectorXcd &c) -> ComplexField
  {
    const Eigen::VectorXd re = zbasis.modes * c.real();
    const Eigen::VectorXd im = zbasis.modes * c.imag();
    return re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
  };

  struct Point
  {
    ComplexEigenSolution sol;
    ComplexDensity rho;
    ComplexField delta;
    double residual = 0.0;
  };
  const auto forward = [&](const ComplexPotential &vp) -> Point
  {
    Point p;
    p.sol = complex_ground(grid, N, vp, w, lambda, opts.ground);
    p.rho = complex_density(grid, p.sol);
    p.delta = p.rho.values - rho_target.values;
    p.delta.array() -= complex_integrate(grid, p.delta);
    p.residual = complex_h1_norm(grid, p.delta);
    return p;
  };

  ComplexInversionResult result;
  Point point = forward(v);
  result.residual_history.push_back(point.residual);

  int it = 0;
  while (point.residual > opts.tol)
  {
    if (it >= opts.max_iter)
    {
      throw SolverError("complex inversion did not converge in " + std::to_string(opts.max_iter) +
                        " iterations; last residual " + std::to_string(point.residual));
    }
    const auto dim = static_cast<Eigen::Index>(point.sol.basis->dim);
    const ComplexField &psi = point.sol.psi;
    Eigen::MatrixXcd deflated = point.sol.hmat;
    for (Eigen::Index i = 0; i < dim; i++)
    {
      deflated(i, i) -= point.sol.energy;
    }
    deflated += psi * psi.transpose();
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(deflated);
    const auto deflect = [&](ComplexField f) -> ComplexField
    {
      f -= psi * bilinear_dot(psi, f);
      return f;
    };

    Eigen::MatrixXcd jac(grid.n - 1, grid.n - 1);
    for (int k = 0; k < grid.n - 1; k++)
    {
      const Eigen::VectorXd sumd = tuple_sum_diagonal(*point.sol.basis, zbasis.modes.col(k));
      const ComplexField rhs_state = deflect(sumd.cast<Complex>().cwiseProduct(psi));
      const ComplexField through = -deflect(lu.solve(rhs_state));
      ComplexField col = 2.0 * mixed_bilinear(grid, *point.sol.basis, through, psi);
      col.array() -= complex_integrate(grid, col);
      jac.col(k) = coords(col);
    }

    const Eigen::VectorXcd rhs = -coords(point.delta);
    const Eigen::VectorXcd c = jac.partialPivLu().solve(rhs);
    const double solve_defect = (jac * c - rhs).norm();
    if (!c.allFinite() || solve_defect > 1e-8 * std::max(rhs.norm(), 1e-300))
    {
      throw SolverError("complex response solve is ill-conditioned (defect " +
                        std::to_string(solve_defect) + ")");
    }
    const ComplexPotential step = make_complex_potential(grid, synthesize(c));

    double damping = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= opts.max_halvings; halvings++)
    {
      const ComplexPotential trial =
          complex_gauge_fix(grid, complex_add_scaled(grid, v, Complex(damping, 0.0), step));
      try
      {
        Point trial_point = forward(trial);
        if (trial_point.residual < point.residual)
        {
          v = trial;
          point = std::move(trial_point);
          accepted = true;
          break;
        }
      }
      catch (const SolverError &)
      {
        // Failed trial solve: retreat toward the current iterate.
      }
      damping *= 0.5;
    }
    if (!accepted)
    {
      throw SolverError("complex inversion stagnated at residual " +
                        std::to_string(point.residual));
    }
    it++;
    result.residual_history.push_back(point.residual);
  }

  result.v = v;
  result.iterations = it;
  result.final_density = std::move(point.rho);
  result.solution = std::make_shared<ComplexEigenSolution>(std::move(point.sol));
  return result;
}

EigenvaluePropertyReport eigenvalue_property_check(const Grid &grid,
                                                   const ComplexEigenSolution &sol,
                                                   const ComplexPotential &v)
{
  const ComplexField r = complex_load_vector(grid, v);
  const Eigen::VectorXcd one_body = tuple_sum_diagonal_c(*sol.basis, r);
  // Interior value: full bilinear energy minus the one-body pairing of the
  // supplied potential at the eigenpair.
  const Complex full = bilinear_dot(sol.psi, sol.hmat * sol.psi);
  const Complex interior = full - bilinear_dot(sol.psi, one_body.cwiseProduct(sol.psi));

  const ComplexDensity rho = complex_density(grid, sol);
  const Complex pair_bilinear = grid.h * rho.values.cwiseProduct(r).sum();
  const Complex pair_sesquilinear = grid.h * rho.values.conjugate().cwiseProduct(r).sum();

  const ComplexField unit = sol.psi / sol.psi.norm();
  const auto residual_at = [&](Complex scalar)
  { return (sol.hmat * unit - scalar * unit).norm() / (1.0 + std::abs(scalar)); };

  EigenvaluePropertyReport rep;
  rep.bilinear_residual = residual_at(interior + pair_bilinear);
  rep.sesquilinear_residual = residual_at(interior + pair_sesquilinear);
  return rep;
}

HolomorphyReport holomorphy_check(const Grid &grid, int N, const ComplexPotential &v,
                                  const InteractionSpec &w, Complex lambda,
                                  const ComplexPotential &dir_v, Complex dir_lambda,
                                  const std::vector<double> &eps_ladder,
                                  const HolomorphyOptions &opts)
{
  if (eps_ladder.empty())
  {
    throw ConfigError("the difference-quotient test needs a nonempty step ladder");
  }
  struct Probe
  {
    ComplexField rho;
    Complex f;
  };
  const auto eval = [&](Complex t) -> Probe
  {
    const ComplexPotential vp = complex_add_scaled(grid, v, t, dir_v);
    const Complex lam = lambda + t * dir_lambda;
    const ComplexEigenSolution sol = complex_ground(grid, N, vp, w, lam, opts.ground);
    Probe p;
    p.rho = complex_density(grid, sol).values;
    const ComplexField r = complex_load_vector(grid, vp);
    p.f = sol.energy - grid.h * p.rho.cwiseProduct(r).sum();
    if (opts.conjugated_control)
    {
      p.rho = p.rho.conjugate();
      p.f = std::conj(p.f);
    }
    return p;
  };

  const Probe base = eval(Complex(0.0, 0.0));
  HolomorphyReport rep;
  rep.control = opts.conjugated_control;
  rep.eps = eps_ladder;
  for (double eps : eps_ladder)
  {
    if (!(eps > 0.0))
    {
      throw ConfigError("difference-quotient steps must be positive");
    }
    const Probe along = eval(Complex(eps, 0.0));
    const Probe rotated = eval(Complex(0.0, eps));
    const ComplexField d_e = (along.rho - base.rho) / eps;
    const ComplexField d_ie = (rotated.rho - base.rho) / Complex(0.0, eps);
    rep.rho_residuals.push_back(complex_h1_norm(grid, d_e - d_ie));
    const Complex f_e = (along.f - base.f) / eps;
    const Complex f_ie = (rotated.f - base.f) / Complex(0.0, eps);
    rep.f_residuals.push_back(std::abs(f_e - f_ie));
  }
  for (std::size_t k = 0; k + 1 < eps_ladder.size(); k++)
  {
    const double scale = std::log(eps_ladder[k] / eps_ladder[k + 1]);
    if (scale > 0.0 && rep.rho_residuals[k + 1] > 0.0 && rep.f_residuals[k + 1] > 0.0)
    {
      rep.rho_orders.push_back(std::log(rep.rho_residuals[k] / rep.rho_residuals[k + 1]) / scale);
      rep.f_orders.push_back(std::log(rep.f_residuals[k] / rep.f_residuals[k + 1]) / scale);
    }
  }
  return rep;
}

}  // namespace ks1d
