// SPDX-License-Identifier: Apache-2.0

#include "ks1d/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "ks1d/errors.hpp"
#include "ks1d/util.hpp"

namespace ks1d
{

namespace
{

PotentialField scaled_potential(const Grid &grid, double s, const PotentialField &p)
{
  return potential_add_scaled(grid, PotentialField{Field::Zero(grid.n), {}}, s, p);
}

struct EvalPoint
{
  LevyLiebResult result;
  double legendre = 0.0;  // E0 - <target, v>, accurate to second order in the
                          // inversion leftover; preferred for differencing
};

EvalPoint evaluate_at(const Grid &grid, int N, const DensityField &rho, const InteractionSpec &w,
                      double lambda, const std::optional<QuotientPotential> &v0,
                      const FunctionalOptions &opts)
{
  InversionResult inv = invert_density(grid, N, rho, w, lambda, v0, opts.inversion);
  EvalPoint point;
  LevyLiebResult &out = point.result;
  out.v = inv.v;
  out.solution = inv.solution;
  const Hamiltonian &ham = out.solution->ham();
  const FermionState &psi = out.solution->psi0();
  out.kinetic = kinetic_energy(ham, psi);
  out.pair_term = pair_contraction(grid, *ham.basis, psi.coeffs, ham.W);
  out.value = out.kinetic + lambda * out.pair_term;

  const double defect = h1_norm(grid, inv.final_density.values - rho.values);
  if (defect > 1e-8 * (1.0 + h1_norm(grid, rho.values)))
  {
    throw ConsistencyError("inverted density misses the target by " + std::to_string(defect) +
                           " in the first-order norm");
  }
  const double via_energy =
      out.solution->energy() - potential_action(grid, out.v.rep, inv.final_density.values);
  if (std::abs(via_energy - out.value) > 1e-8 * (1.0 + std::abs(out.value)))
  {
    throw ConsistencyError("interior energy and Legendre evaluation disagree: " +
                           std::to_string(out.value) + " vs " + std::to_string(via_energy));
  }
  DensityField target = rho;
  target.values *= static_cast<double>(N) / integrate(grid, target.values);
  point.legendre = out.solution->energy() - potential_action(grid, out.v.rep, target.values);
  return point;
}

}  // namespace

LevyLiebResult levy_lieb(const Grid &grid, int N, const DensityField &rho,
                         const InteractionSpec &w, double lambda, const FunctionalOptions &opts)
{
  return evaluate_at(grid, N, rho, w, lambda, std::nullopt, opts).result;
}

double t_ks(const Grid &grid, int N, const DensityField &rho, const FunctionalOptions &opts)
{
  return levy_lieb(grid, N, rho, InteractionSpec::contact(0.0), 0.0, opts).value;
}

double hartree_energy(const Grid &grid, const DensityField &rho, const InteractionSpec &w)
{
  if (rho.values.size() != grid.n)
  {
    throw ConfigError("density size mismatch");
  }
  const Eigen::MatrixXd W = kernel_matrix(grid, w);
  return grid.h * grid.h * rho.values.dot(W * rho.values);
}

PotentialField hartree_potential(const Grid &grid, const DensityField &rho,
                                 const InteractionSpec &w)
{
  if (rho.values.size() != grid.n)
  {
    throw ConfigError("density size mismatch");
  }
  const Eigen::MatrixXd W = kernel_matrix(grid, w);
  return PotentialField{2.0 * grid.h * (W * rho.values), {}};
}

ExchangeReport exchange_energy(const Grid &grid, int N, const DensityField &rho,
                               const InteractionSpec &w, const FunctionalOptions &opts)
{
  ExchangeReport rep;
  rep.hartree = hartree_energy(grid, rho, w);
  const EvalPoint ks = evaluate_at(grid, N, rho, w, 0.0, std::nullopt, opts);
  rep.pair_slope = ks.result.pair_term;

  // Finite-difference route on the Legendre evaluation, which is insensitive
  // (to second order) to the inversion leftover; warm-started at the
  // zero-coupling potential.
  const auto f_at = [&](double lam)
  { return evaluate_at(grid, N, rho, w, lam, ks.result.v, opts).legendre; };
  const double e1 = 1e-3;
  const double e2 = 5e-4;
  const double d1 = (f_at(e1) - f_at(-e1)) / (2.0 * e1);
  const double d2 = (f_at(e2) - f_at(-e2)) / (2.0 * e2);
  rep.pair_slope_fd = (4.0 * d2 - d1) / 3.0;

  const double noise_floor =
      std::max(1e-8 * (1.0 + std::abs(rep.pair_slope)),
               opts.inversion.tol * (1.0 + std::abs(ks.legendre)) / e2);
  rep.fd_error_estimate = std::max(std::abs(d1 - d2), noise_floor);
  if (std::abs(rep.pair_slope - rep.pair_slope_fd) > 10.0 * rep.fd_error_estimate)
  {
    throw ConsistencyError("coupling-slope routes disagree: ground-state pairing " +
                           std::to_string(rep.pair_slope) + " vs finite differences " +
                           std::to_string(rep.pair_slope_fd) + " (estimate " +
                           std::to_string(rep.fd_error_estimate) + ")");
  }
  rep.value = rep.pair_slope - rep.hartree;
  return rep;
}

QuotientPotential exchange_potential(const Grid &grid, int N, const DensityField &rho,
                                     const InteractionSpec &w, const FunctionalOptions &opts)
{
  const EvalPoint ks = evaluate_at(grid, N, rho, w, 0.0, std::nullopt, opts);
  const auto v_at = [&](double lam)
  { return evaluate_at(grid, N, rho, w, lam, ks.result.v, opts).result.v.rep; };
  const double e1 = 1e-3;
  const double e2 = 5e-4;
  const PotentialField dv1 = scaled_potential(
      grid, 1.0 / (2.0 * e1), potential_add_scaled(grid, v_at(e1), -1.0, v_at(-e1)));
  const PotentialField dv2 = scaled_potential(
      grid, 1.0 / (2.0 * e2), potential_add_scaled(grid, v_at(e2), -1.0, v_at(-e2)));
  const PotentialField dv =
      potential_add_scaled(grid, scaled_potential(grid, 4.0 / 3.0, dv2), -1.0 / 3.0, dv1);
  const PotentialField vh = hartree_potential(grid, rho, w);
  return gauge_fix(grid, potential_add_scaled(grid, scaled_potential(grid, -1.0, dv), -1.0, vh));
}

Gl2Result gl2_energy(const Grid &grid, int N, const DensityField &rho, const InteractionSpec &w,
                     int n_states, const FunctionalOptions &opts)
{
  const EvalPoint ks = evaluate_at(grid, N, rho, w, 0.0, std::nullopt, opts);
  const auto ham = ks.result.solution->ham_ptr();
  const std::size_t dim = ham->dim();
  if (dim > opts.inversion.solver.dense_threshold)
  {
    throw ConfigError("second-order correlation series needs the dense spectrum; dimension " +
                      std::to_string(dim) + " exceeds the dense threshold");
  }
  if (n_states > static_cast<int>(dim))
  {
    throw ConfigError("requested more eigenpairs than the space holds");
  }
  const int k = n_states <= 0 ? static_cast<int>(dim) : n_states;

  const QuotientPotential vx = exchange_potential(grid, N, rho, w, opts);
  const QuotientPotential vh = gauge_fix(grid, hartree_potential(grid, rho, w));
  const Field one_body_load =
      load_vector(grid, potential_add_scaled(grid, vx.rep, 1.0, vh.rep));
  const Eigen::VectorXd pert_diag = tuple_pair_diagonal(*ham->basis, ham->W) -
                                    tuple_sum_diagonal(*ham->basis, one_body_load);

  const auto pairs = spectrum(ham, k, opts.inversion.solver);
  const double e0 = pairs.front().first;
  const Eigen::VectorXd &psi0 = pairs.front().second.coeffs;

  Gl2Result out;
  out.states_used = k;
  out.terms.reserve(k > 0 ? k - 1 : 0);
  long double running = 0.0L;
  for (int j = 1; j < k; j++)
  {
    const double omega = pairs[j].first - e0;
    if (omega < opts.inversion.solver.gap_floor)
    {
      throw SolverError("zero-coupling spectrum is degenerate at level " + std::to_string(j) +
                        " (splitting " + std::to_string(omega) + ")");
    }
    long double m = 0.0L;
    const Eigen::VectorXd &psij = pairs[j].second.coeffs;
    for (std::size_t r = 0; r < dim; r++)
    {
      m += static_cast<long double>(psi0[r]) * psij[r] * pert_diag[static_cast<Eigen::Index>(r)];
    }
    const double term = -static_cast<double>(m * m) / omega;
    out.terms.push_back(term);
    running += term;
    out.partial_sums.push_back(static_cast<double>(running));
  }
  out.value = out.partial_sums.empty() ? 0.0 : out.partial_sums.back();

  if (k == static_cast<int>(dim) || out.terms.empty())
  {
    out.tail_estimate = 0.0;
  }
  else
  {
    const double last = std::abs(out.terms.back());
    const double prev = out.terms.size() >= 2 ? std::abs(out.terms[out.terms.size() - 2]) : 0.0;
    if (last > 0.0 && prev > last)
    {
      const double r = last / prev;
      out.tail_estimate = last * r / (1.0 - r);
    }
    else
    {
      out.tail_estimate = last;
    }
  }
  return out;
}

CouplingSweep ac_sweep(const Grid &grid, int N, const DensityField &rho, const InteractionSpec &w,
                       const std::vector<double> &lambda_grid, const FunctionalOptions &opts)
{
  if (lambda_grid.empty())
  {
    throw ConfigError("coupling sweep needs a nonempty grid");
  }
  CouplingSweep sweep;
  sweep.e_hartree = hartree_energy(grid, rho, w);
  const EvalPoint ks = evaluate_at(grid, N, rho, w, 0.0, std::nullopt, opts);
  sweep.t_ks = ks.result.value;
  sweep.samples.resize(lambda_grid.size());

  parallel_for(lambda_grid.size(), opts.threads,
               [&](std::size_t j)
               {
                 CouplingSample &s = sweep.samples[j];
                 s.lambda = lambda_grid[j];
                 s.e_hartree = sweep.e_hartree;
                 try
                 {
                   if (s.lambda == 0.0)
                   {
                     s.v = ks.result.v;
                     s.f_value = ks.result.value;
                     s.gap = ks.result.solution->gap();
                     // The split has a removable singularity at zero coupling;
                     // report its limit, the exchange energy.
                     s.e_xc = exchange_energy(grid, N, rho, w, opts).value;
                   }
                   else
                   {
                     const EvalPoint p =
                         evaluate_at(grid, N, rho, w, s.lambda, ks.result.v, opts);
                     s.v = p.result.v;
                     s.f_value = p.result.value;
                     s.gap = p.result.solution->gap();
                     s.e_xc = (p.result.value - sweep.t_ks) / s.lambda - sweep.e_hartree;
                   }
                   s.ok = true;
                 }
                 catch (const std::exception &e)
                 {
                   s.error = e.what();
                 }
               });

  // Diagnostics run over the successful samples in ascending coupling order.
  std::vector<std::size_t> order(sweep.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b)
            { return sweep.samples[a].lambda < sweep.samples[b].lambda; });
  std::vector<const CouplingSample *> ok;
  for (std::size_t idx : order)
  {
    if (sweep.samples[idx].ok)
    {
      ok.push_back(&sweep.samples[idx]);
    }
  }

  for (std::size_t j = 1; j < ok.size(); j++)
  {
    if (ok[j]->f_value < ok[j - 1]->f_value - 1e-10 * (1.0 + std::abs(ok[j - 1]->f_value)))
    {
      sweep.f_monotone = false;
    }
  }

  if (ok.size() >= 2)
  {
    const double lo = ok.front()->lambda;
    const double hi = ok.back()->lambda;
    const double span = hi > lo ? hi - lo : 1.0;
    for (int d = 2; d <= 6; d++)
    {
      if (ok.size() < static_cast<std::size_t>(d) + 2)
      {
        continue;  // an interpolating fit has no residual to report
      }
      Eigen::MatrixXd vand(ok.size(), d + 1);
      Eigen::VectorXd rhs(ok.size());
      for (std::size_t r = 0; r < ok.size(); r++)
      {
        const double t = 2.0 * (ok[r]->lambda - lo) / span - 1.0;
        double p = 1.0;
        for (int c = 0; c <= d; c++)
        {
          vand(static_cast<Eigen::Index>(r), c) = p;
          p *= t;
        }
        rhs[static_cast<Eigen::Index>(r)] = ok[r]->f_value;
      }
      const Eigen::VectorXd coef = vand.colPivHouseholderQr().solve(rhs);
      const double rms = std::sqrt((vand * coef - rhs).squaredNorm() / ok.size());
      sweep.fit_degrees.push_back(d);
      sweep.fit_rms.push_back(rms);
    }
  }

  if (ok.size() >= 3)
  {
    std::vector<PotentialField> slopes;
    std::vector<double> slope_norms;
    for (std::size_t j = 1; j < ok.size(); j++)
    {
      const double dl = ok[j]->lambda - ok[j - 1]->lambda;
      if (dl <= 0.0)
      {
        continue;
      }
      slopes.push_back(scaled_potential(
          grid, 1.0 / dl, potential_add_scaled(grid, ok[j]->v.rep, -1.0, ok[j - 1]->v.rep)));
      slope_norms.push_back(quotient_norm(grid, slopes.back()));
    }
    for (std::size_t j = 1; j < slopes.size(); j++)
    {
      const double inc =
          quotient_norm(grid, potential_add_scaled(grid, slopes[j], -1.0, slopes[j - 1]));
      sweep.slope_defects.push_back(inc / (1.0 + std::max(slope_norms[j], slope_norms[j - 1])));
    }
  }
  return sweep;
}

}  // namespace ks1d
