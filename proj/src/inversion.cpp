// SPDX-License-Identifier: Apache-2.0

#include "ks1d/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ks1d/errors.hpp"
#include "ks1d/util.hpp"

namespace ks1d
{

namespace
{

void validate_target(const Grid &grid, int N, const DensityField &rho)
{
  if (rho.values.size() != grid.n)
  {
    throw ConfigError("target density size mismatch");
  }
  if (!(rho.values.minCoeff() > 0.0))
  {
    throw ConfigError("target density must be strictly positive; min value " +
                      std::to_string(rho.values.minCoeff()));
  }
  const double mass = integrate(grid, rho.values);
  if (std::abs(mass - N) > 1e-8 * N)
  {
    throw ConfigError("target density mass " + std::to_string(mass) +
                      " does not match particle count " + std::to_string(N));
  }
}

struct ForwardPoint
{
  std::shared_ptr<const SpectralSolution> sol;
  DensityField rho;
  Field residual_field;
  double residual = 0.0;
};

ForwardPoint forward_solve(const Grid &grid, int N, const QuotientPotential &v,
                           const InteractionSpec &w, double lambda, const DensityField &target,
                           const SolverOptions &solver)
{
  ForwardPoint point;
  point.sol = ground_state(assemble_hamiltonian(grid, N, v.rep, w, lambda, solver), solver);
  point.rho = dens(grid, *point.sol->ham().basis, point.sol->psi0().coeffs);
  point.residual_field = point.rho.values - target.values;
  // Both densities carry the same mass, so the residual is mean-free up to
  // the target's own mass tolerance; project the remainder out.
  point.residual_field.array() -= integrate(grid, point.residual_field);
  point.residual = h1_norm(grid, point.residual_field);
  return point;
}

}  // namespace

InversionResult invert_density(const Grid &grid, int N, const DensityField &rho_target,
                               const InteractionSpec &w, double lambda,
                               const std::optional<QuotientPotential> &v0,
                               const InversionOptions &opts)
{
  validate_target(grid, N, rho_target);
  // Work against an exactly mass-N copy so the Newton residual can reach tol
  // even when the input mass is only within its admission tolerance.
  DensityField target = rho_target;
  target.values *= static_cast<double>(N) / integrate(grid, target.values);

  const ZeroMeanBasis zbasis = make_zero_mean_basis(grid);
  QuotientPotential v =
      v0.has_value() ? gauge_fix(grid, v0->rep) : gauge_fix(grid, PotentialField{Field::Zero(grid.n), {}});

  InversionResult result;
  ForwardPoint point = forward_solve(grid, N, v, w, lambda, target, opts.solver);
  result.residual_history.push_back(point.residual);
  result.gap_history.push_back(point.sol->gap());

  int it = 0;
  while (point.residual > opts.tol)
  {
    if (it >= opts.max_iter)
    {
      throw SolverError("inversion did not converge in " + std::to_string(opts.max_iter) +
                        " iterations; last residual " + std::to_string(point.residual));
    }
    const ResponseMatrix rm = assemble_lro(grid, *point.sol, zbasis, opts.threads);
    const QuotientPotential step =
        invert_lro(grid, rm, ZeroMeanField{point.residual_field}, zbasis);

    double damping = 1.0;
    bool accepted = false;
    int halvings = 0;
    for (; halvings <= opts.max_halvings; halvings++)
    {
      const QuotientPotential trial =
          gauge_fix(grid, potential_add_scaled(grid, v.rep, -damping, step.rep));
      try
      {
        ForwardPoint trial_point = forward_solve(grid, N, trial, w, lambda, target, opts.solver);
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
        // A collapsed gap or stalled eigensolve on the trial point is treated
        // as a failed step; damping retries closer to the current iterate.
      }
      damping *= 0.5;
    }
    if (!accepted)
    {
      throw SolverError("inversion stagnated at residual " + std::to_string(point.residual) +
                        " after " + std::to_string(opts.max_halvings) + " halvings");
    }
    it++;
    result.halvings.push_back(halvings);
    result.residual_history.push_back(point.residual);
    result.gap_history.push_back(point.sol->gap());
  }

  result.v = v;
  result.iterations = it;
  result.final_density = std::move(point.rho);
  result.solution = std::move(point.sol);
  return result;
}

LipschitzReport lipschitz_probe(const Grid &grid, int N, const DensityField &rho,
                                const InteractionSpec &w, double lambda,
                                const LipschitzOptions &opts)
{
  validate_target(grid, N, rho);
  if (opts.ensemble < 1 || opts.amplitudes.empty())
  {
    throw ConfigError("lipschitz probe needs a nonempty ensemble and amplitude ladder");
  }
  const ZeroMeanBasis zbasis = make_zero_mean_basis(grid);
  const InversionResult base = invert_density(grid, N, rho, w, lambda, std::nullopt, opts.inversion);
  const double amp_max = *std::max_element(opts.amplitudes.begin(), opts.amplitudes.end());

  LipschitzReport report;
  report.amplitudes = opts.amplitudes;
  const std::size_t total = static_cast<std::size_t>(opts.ensemble) * opts.amplitudes.size();
  report.samples.resize(total);
  std::vector<int> rejected(opts.ensemble, 0);

  parallel_for(
      static_cast<std::size_t>(opts.ensemble), opts.threads,
      [&](std::size_t s)
      {
        // One direction per sample, reused across the whole amplitude ladder
        // so the stability indicator isolates amplitude dependence.
        std::mt19937_64 rng(mix_seed(opts.seed, s));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Field sigma;
        for (int attempt = 0;; attempt++)
        {
          if (attempt > 100)
          {
            sigma.setZero();
            break;
          }
          Eigen::VectorXd c(grid.n - 1);
          for (int k = 0; k < grid.n - 1; k++)
          {
            c[k] = gauss(rng);
          }
          sigma = zbasis.synthesize(c);
          const double norm = h1_norm(grid, sigma);
          if (norm == 0.0)
          {
            continue;  // zero draw: resample (0/0 guard)
          }
          sigma /= norm;
          if ((rho.values + amp_max * sigma).minCoeff() > 0.0)
          {
            break;
          }
          rejected[s]++;
        }
        for (std::size_t a = 0; a < opts.amplitudes.size(); a++)
        {
          LipschitzSample &sample = report.samples[s * opts.amplitudes.size() + a];
          sample.sample = static_cast<int>(s);
          sample.amplitude = opts.amplitudes[a];
          if (sigma.isZero(0.0))
          {
            sample.error = "degenerate direction draw";
            continue;
          }
          try
          {
            DensityField perturbed{rho.values + opts.amplitudes[a] * sigma};
            const InversionResult inv =
                invert_density(grid, N, perturbed, w, lambda, base.v, opts.inversion);
            sample.drho_h1 = opts.amplitudes[a] * 1.0;  // directions are unit-normalized
            sample.dv_quotient = quotient_distance(grid, inv.v.rep, base.v.rep);
            sample.ratio = sample.dv_quotient / sample.drho_h1;
            sample.ok = std::isfinite(sample.ratio) && sample.ratio > 0.0;
            if (!sample.ok)
            {
              sample.error = "non-finite or non-positive ratio";
            }
          }
          catch (const std::exception &e)
          {
            sample.error = e.what();
          }
        }
      });

  for (int r : rejected)
  {
    report.rejected_draws += r;
  }
  report.max_ratio.assign(opts.amplitudes.size(), 0.0);
  report.min_ratio.assign(opts.amplitudes.size(), std::numeric_limits<double>::infinity());
  for (const LipschitzSample &sample : report.samples)
  {
    if (!sample.ok)
    {
      continue;
    }
    const auto a = std::find(opts.amplitudes.begin(), opts.amplitudes.end(), sample.amplitude) -
                   opts.amplitudes.begin();
    report.max_ratio[a] = std::max(report.max_ratio[a], sample.ratio);
    report.min_ratio[a] = std::min(report.min_ratio[a], sample.ratio);
  }
  // Stability: spread of the max ratio relative to the smallest amplitude.
  std::size_t ref = 0;
  for (std::size_t a = 1; a < opts.amplitudes.size(); a++)
  {
    if (opts.amplitudes[a] < opts.amplitudes[ref])
    {
      ref = a;
    }
  }
  if (report.max_ratio[ref] > 0.0)
  {
    for (std::size_t a = 0; a < opts.amplitudes.size(); a++)
    {
      report.stability = std::max(
          report.stability, std::abs(report.max_ratio[a] - report.max_ratio[ref]) / report.max_ratio[ref]);
    }
  }
  // Potential-distance spread at the largest amplitude.
  double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (const LipschitzSample &sample : report.samples)
  {
    if (sample.ok && sample.amplitude == amp_max)
    {
      dmax = std::max(dmax, sample.dv_quotient);
      dmin = std::min(dmin, sample.dv_quotient);
    }
  }
  report.norm_spread = (dmin > 0.0 && std::isfinite(dmin)) ? dmax / dmin : 0.0;
  return report;
}

HkReport hk_uniqueness_check(const Grid &grid, int N, const PotentialField &v1,
                             const PotentialField &v2, const InteractionSpec &w, double lambda,
                             const InversionOptions &opts)
{
  HkReport report;
  report.quotient_distance = quotient_distance(grid, v1, v2);
  const double scale = 1.0 + std::max(quotient_norm(grid, v1), quotient_norm(grid, v2));
  if (report.quotient_distance <= 1e-12 * scale)
  {
    report.skipped = true;
    return report;
  }
  const auto sol1 = ground_state(assemble_hamiltonian(grid, N, v1, w, lambda, opts.solver), opts.solver);
  const auto sol2 = ground_state(assemble_hamiltonian(grid, N, v2, w, lambda, opts.solver), opts.solver);
  const DensityField rho1 = dens(grid, *sol1->ham().basis, sol1->psi0().coeffs);
  const DensityField rho2 = dens(grid, *sol2->ham().basis, sol2->psi0().coeffs);
  report.density_distance_h1 = h1_norm(grid, rho1.values - rho2.values);
  if (report.density_distance_h1 <= 1e-12)
  {
    throw ConsistencyError("distinct quotient potentials produced identical densities");
  }
  report.ratio = report.quotient_distance / report.density_distance_h1;
  return report;
}

}  // namespace ks1d
