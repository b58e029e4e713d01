// SPDX-License-Identifier: Apache-2.0

#include "ks1d/linear_response.hpp"

#include <cmath>

#include "ks1d/errors.hpp"
#include "ks1d/util.hpp"

namespace ks1d
{

ZeroMeanField lro_apply(const Grid &grid, const SpectralSolution &sol, const PotentialField &u)
{
  const Hamiltonian &ham = sol.ham();
  const Eigen::VectorXd lifted =
      apply_B_adjoint(*ham.basis, sol.psi0().coeffs, load_vector(grid, u));
  const Eigen::VectorXd resolved = sol.reduced_resolvent_apply(lifted);
  Field out = 2.0 * mixed_density(grid, *ham.basis, resolved, sol.psi0().coeffs);
  return make_zero_mean(grid, std::move(out), 1e-10);
}

ResponseMatrix assemble_lro(const Grid &grid, const SpectralSolution &sol,
                            const ZeroMeanBasis &zbasis, int threads)
{
  const int m = grid.n - 1;
  sol.prepare_resolvent();
  ResponseMatrix rm;
  rm.M.resize(m, m);
  parallel_for(static_cast<std::size_t>(m), threads,
               [&](std::size_t l)
               {
                 const PotentialField dir{zbasis.modes.col(static_cast<Eigen::Index>(l)), {}};
                 const ZeroMeanField drho = lro_apply(grid, sol, dir);
                 rm.M.col(static_cast<Eigen::Index>(l)) = zbasis.coords(grid, drho.values);
               });
  const double scale = std::max(1e-300, rm.M.cwiseAbs().maxCoeff());
  rm.sym_residual = (rm.M - rm.M.transpose()).cwiseAbs().maxCoeff() / scale;
  if (rm.sym_residual > 1e-9)
  {
    throw ConsistencyError("response matrix asymmetry " + std::to_string(rm.sym_residual) +
                           " exceeds 1e-9 relative");
  }
  rm.M = 0.5 * (rm.M + rm.M.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rm.M, Eigen::EigenvaluesOnly);
  rm.eig_min = es.eigenvalues().minCoeff();
  rm.eig_max = es.eigenvalues().maxCoeff();
  if (!(rm.eig_max < 0.0))
  {
    throw ConsistencyError("response matrix is not negative definite: max eigenvalue " +
                           std::to_string(rm.eig_max));
  }
  rm.cond = std::abs(rm.eig_min) / std::abs(rm.eig_max);
  return rm;
}

QuotientPotential invert_lro(const Grid &grid, const ResponseMatrix &rm,
                             const ZeroMeanField &drho, const ZeroMeanBasis &zbasis)
{
  if (rm.cond > 1e12)
  {
    throw SolverError("response matrix ill-conditioned: cond " + std::to_string(rm.cond) +
                      ", eigenvalue range [" + std::to_string(rm.eig_min) + ", " +
                      std::to_string(rm.eig_max) + "]");
  }
  const Eigen::VectorXd rhs = zbasis.coords(grid, drho.values);
  // -M is positive definite; one refinement step guards the residual bound.
  const Eigen::LLT<Eigen::MatrixXd> llt(-rm.M);
  if (llt.info() != Eigen::Success)
  {
    throw SolverError("response matrix factorization failed");
  }
  Eigen::VectorXd u = -llt.solve(rhs);
  Eigen::VectorXd residual = rm.M * u - rhs;
  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0.0 && residual.norm() > 1e-10 * rhs_norm)
  {
    u -= -llt.solve(residual);
    residual = rm.M * u - rhs;
    if (residual.norm() > 1e-10 * rhs_norm)
    {
      throw ConsistencyError("response solve residual " +
                             std::to_string(residual.norm() / rhs_norm) +
                             " exceeds 1e-10 relative");
    }
  }
  return gauge_fix(grid, PotentialField{zbasis.synthesize(u), {}});
}

ProjectorDerivativeReport projector_derivative_check(const Grid &grid, int N,
                                                     const PotentialField &v,
                                                     const InteractionSpec &w, double lambda,
                                                     const PotentialField &u, double mu,
                                                     const std::vector<double> &eps_ladder,
                                                     const SolverOptions &opts)
{
  auto ham = assemble_hamiltonian(grid, N, v, w, lambda, opts);
  if (ham->dim() > opts.dense_threshold)
  {
    throw ConfigError("projector check requires the dense path; dimension " +
                      std::to_string(ham->dim()));
  }
  const auto sol = ground_state(ham, opts);
  const Eigen::VectorXd &psi = sol->psi0().coeffs;

  // (u-hat + mu w-hat) psi is diagonal in the tuple basis; the derivative of
  // the rank-one projector is a |psi><a| + |a><psi| with a its resolvent lift.
  Eigen::VectorXd pert = tuple_sum_diagonal(*ham->basis, load_vector(grid, u));
  if (mu != 0.0)
  {
    pert += mu * tuple_pair_diagonal(*ham->basis, ham->W);
  }
  const Eigen::VectorXd a = sol->reduced_resolvent_apply(pert.cwiseProduct(psi));
  const Eigen::MatrixXd formula = a * psi.transpose() + psi * a.transpose();

  ProjectorDerivativeReport report;
  report.trace_derivative = 2.0 * psi.dot(a);
  report.max_formula_entry = formula.cwiseAbs().maxCoeff();
  for (const double eps : eps_ladder)
  {
    const PotentialField vp = potential_add_scaled(grid, v, eps, u);
    const PotentialField vm = potential_add_scaled(grid, v, -eps, u);
    const auto solp = ground_state(assemble_hamiltonian(grid, N, vp, w, lambda + eps * mu, opts), opts);
    const auto solm = ground_state(assemble_hamiltonian(grid, N, vm, w, lambda - eps * mu, opts), opts);
    const Eigen::VectorXd &pp = solp->psi0().coeffs;
    const Eigen::VectorXd &pm = solm->psi0().coeffs;
    const Eigen::MatrixXd fd =
        (pp * pp.transpose() - pm * pm.transpose()) / (2.0 * eps);
    report.eps.push_back(eps);
    report.residuals.push_back((fd - formula).cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 0; i + 1 < report.residuals.size(); i++)
  {
    report.ratios.push_back(report.residuals[i] / report.residuals[i + 1]);
  }
  return report;
}

}  // namespace ks1d
