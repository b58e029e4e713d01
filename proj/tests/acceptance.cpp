// SPDX-License-Identifier: Apache-2.0
//
// Release gate: one self-contained check per shipped guarantee, each printed
// as a single PASS/FAIL line with its measured figures.  Exit code equals the
// number of failed checks, so the binary doubles as a CI gate.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ks1d/complex_ext.hpp"
#include "ks1d/density_algebra.hpp"
#include "ks1d/functionals.hpp"
#include "ks1d/grid.hpp"
#include "ks1d/interaction.hpp"
#include "ks1d/inversion.hpp"
#include "ks1d/linear_response.hpp"
#include "ks1d/manybody.hpp"

namespace
{

using namespace ks1d;
using Clock = std::chrono::steady_clock;

struct Verdict
{
  bool ok = true;
  std::string detail;
};

// Appends "name=value" figures to the verdict detail string.
void note(Verdict &v, const std::string &name, double value)
{
  std::ostringstream os;
  os << (v.detail.empty() ? "" : " ") << name << "=" << std::setprecision(3) << value;
  v.detail += os.str();
}

void fail(Verdict &v, const std::string &why)
{
  v.ok = false;
  v.detail += (v.detail.empty() ? "" : " ") + std::string("FAIL:") + why;
}

void require(Verdict &v, bool cond, const std::string &why)
{
  if (!cond)
  {
    fail(v, why);
  }
}

PotentialField cosine_potential(const Grid &grid,
                                const std::vector<std::pair<int, double>> &modes)
{
  Field f = Field::Zero(grid.n);
  for (const auto &[k, amp] : modes)
  {
    for (int i = 0; i < grid.n; i++)
    {
      f[i] += amp * std::cos(k * M_PI * grid.nodes[i]);
    }
  }
  return make_potential(grid, std::move(f));
}

double observed_order(double err_coarse, double err_fine, double step_ratio)
{
  return std::log(err_coarse / err_fine) / std::log(step_ratio);
}

// ---------------------------------------------------------------------------
// 1. Free single-particle spectrum: exact discrete eigenvalues and
//    second-order convergence to the continuum values.
Verdict criterion_spectrum()
{
  Verdict v;
  const auto t0 = Clock::now();
  const InteractionSpec w = InteractionSpec::contact(1.0);
  std::map<int, std::vector<double>> energies;
  for (const int n : {32, 64, 128})
  {
    const Grid grid = make_grid(n);
    const PotentialField zero = make_potential(grid, Field::Zero(n));
    const auto pairs = spectrum(assemble_hamiltonian(grid, 1, zero, w, 0.0), 6);
    std::vector<double> e;
    for (const auto &[energy, state] : pairs)
    {
      e.push_back(energy);
    }
    energies[n] = e;
    for (int k = 0; k < 6; k++)
    {
      const double exact = neg_laplacian_eigenvalue(grid, k);
      const double rel = std::abs(e[k] - exact) / std::max(1.0, std::abs(exact));
      require(v, rel <= 1e-10, "eigenvalue mismatch at n=" + std::to_string(n) +
                                   " k=" + std::to_string(k));
    }
  }
  double worst_order = 2.0;
  for (int k = 1; k <= 3; k++)
  {
    const double target = k * M_PI * k * M_PI;
    const double e32 = std::abs(energies[32][k] - target);
    const double e64 = std::abs(energies[64][k] - target);
    const double e128 = std::abs(energies[128][k] - target);
    for (const double p : {observed_order(e32, e64, 2.0), observed_order(e64, e128, 2.0)})
    {
      require(v, p >= 1.8 && p <= 2.2, "continuum order out of [1.8,2.2]");
      if (std::abs(p - 2.0) > std::abs(worst_order - 2.0))
      {
        worst_order = p;
      }
    }
  }
  note(v, "order", worst_order);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  note(v, "secs", secs);
  require(v, secs < 5.0, "runtime budget 5 s exceeded");
  return v;
}

// ---------------------------------------------------------------------------
// 2. Two assembly routes for the overlap operator on the zero-mean subspace
//    agree entrywise, and the operator is strictly invertible there.
Verdict criterion_gram()
{
  Verdict v;
  const auto t0 = Clock::now();
  const Grid grid = make_grid(24);
  const InteractionSpec w = InteractionSpec::soft_coulomb(1.0, 0.5);
  const PotentialField pot = cosine_potential(grid, {{1, 0.5}, {2, 0.3}});
  const auto sol = ground_state(assemble_hamiltonian(grid, 2, pot, w, 1.0));
  const ZeroMeanBasis zbasis = make_zero_mean_basis(grid);
  const IplusKReport rep =
      check_IplusK_invertible(grid, *sol->ham().basis, sol->psi0(), zbasis);
  note(v, "entry_gap", rep.gram_residual_max);
  note(v, "sigma_min", rep.sigma_min);
  require(v, rep.gram_residual_max <= 1e-9, "assembly routes disagree beyond 1e-9");
  require(v, rep.sigma_min > 0.0, "smallest singular value not positive");
  require(v, !rep.not_ground_state_caveat, "state not certified as a ground state");
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  note(v, "secs", secs);
  require(v, secs < 60.0, "runtime budget 60 s exceeded");
  return v;
}

// ---------------------------------------------------------------------------
// 3. Response operator: matches central differences of the forward map at
//    second order, is symmetric and negative definite, annihilates constants.
Verdict criterion_response()
{
  Verdict v;
  const Grid grid = make_grid(16);
  const int N = 2;
  const double lambda = 0.5;
  const InteractionSpec w = InteractionSpec::soft_coulomb(1.0, 0.4);
  const PotentialField pot = cosine_potential(grid, {{1, 0.4}, {3, -0.25}});
  const auto sol = ground_state(assemble_hamiltonian(grid, N, pot, w, lambda));
  const ZeroMeanBasis zbasis = make_zero_mean_basis(grid);
  const ResponseMatrix rm = assemble_lro(grid, *sol, zbasis);

  require(v, rm.sym_residual <= 1e-9, "matrix asymmetry beyond 1e-9");
  require(v, rm.eig_max < 0.0, "matrix not negative definite");
  note(v, "eig_max", rm.eig_max);

  const PotentialField ones = make_potential(grid, Field::Ones(grid.n));
  const double const_resp = h1_norm(grid, lro_apply(grid, *sol, ones).values);
  note(v, "const_resp", const_resp);
  require(v, const_resp <= 1e-10, "constants not annihilated to 1e-10");

  // The direction amplitude sets the size of the cubic remainder; a larger
  // probe keeps the quadratic decay visible above the eigensolver noise floor
  // at the smallest step.
  const PotentialField dir = cosine_potential(grid, {{2, 5.0}, {1, 2.5}});
  const Field predicted = lro_apply(grid, *sol, dir).values;
  std::vector<double> errs;
  for (const double eps : {1e-3, 5e-4, 2.5e-4})
  {
    const PotentialField vp = potential_add_scaled(grid, pot, eps, dir);
    const PotentialField vm = potential_add_scaled(grid, pot, -eps, dir);
    const auto sp = ground_state(assemble_hamiltonian(grid, N, vp, w, lambda));
    const auto sm = ground_state(assemble_hamiltonian(grid, N, vm, w, lambda));
    const Field fd = (dens(grid, *sp->ham().basis, sp->psi0().coeffs).values -
                      dens(grid, *sm->ham().basis, sm->psi0().coeffs).values) /
                     (2.0 * eps);
    errs.push_back(h1_norm(grid, fd - predicted));
  }
  for (std::size_t k = 0; k + 1 < errs.size(); k++)
  {
    const double p = observed_order(errs[k], errs[k + 1], 2.0);
    note(v, "fd_order", p);
    require(v, p >= 1.7 && p <= 2.3, "difference-quotient order out of [1.7,2.3]");
  }
  return v;
}

// ---------------------------------------------------------------------------
// 4. Potential recovery: five smooth fixtures, both particle counts, both
//    coupling endpoints; quotient error <= 1e-7 within 20 Newton steps.
Verdict criterion_inversion()
{
  Verdict v;
  const auto t0 = Clock::now();
  const Grid grid = make_grid(32);
  const InteractionSpec w = InteractionSpec::soft_coulomb(1.0, 0.5);
  struct Fixture
  {
    int N;
    double lambda;
    std::vector<std::pair<int, double>> modes;
  };
  const std::vector<Fixture> fixtures = {
      {1, 0.0, {{1, 0.8}, {3, -0.4}}},
      {1, 1.0, {{2, 0.6}}},
      {2, 0.0, {{1, 0.5}, {2, 0.3}}},
      {2, 1.0, {{1, 0.6}, {2, 0.5}}},
      {2, 1.0, {{3, 0.7}}},
  };
  double worst_dist = 0.0;
  int worst_iters = 0;
  for (const Fixture &fx : fixtures)
  {
    const PotentialField truth = cosine_potential(grid, fx.modes);
    const auto sol = ground_state(assemble_hamiltonian(grid, fx.N, truth, w, fx.lambda));
    const DensityField rho = dens(grid, *sol->ham().basis, sol->psi0().coeffs);
    InversionOptions opts;
    opts.tol = 1e-10;
    const InversionResult inv =
        invert_density(grid, fx.N, rho, w, fx.lambda, std::nullopt, opts);
    const double dist = quotient_distance(grid, inv.v.rep, truth);
    worst_dist = std::max(worst_dist, dist);
    worst_iters = std::max(worst_iters, inv.iterations);
    require(v, dist <= 1e-7,
            "recovery error above 1e-7 for N=" + std::to_string(fx.N));
    require(v, inv.iterations <= 20, "more than 20 Newton steps");
  }
  note(v, "worst_dist", worst_dist);
  note(v, "worst_iters", worst_iters);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  note(v, "secs", secs);
  require(v, secs < 300.0, "runtime budget 300 s exceeded");
  return v;
}

// ---------------------------------------------------------------------------
// 5. Stability probe: the worst potential-change/density-change ratio varies
//    by at most 10% across a three-decade amplitude ladder.
Verdict criterion_lipschitz()
{
  Verdict v;
  const Grid grid = make_grid(16);
  const int N = 2;
  const double lambda = 1.0;
  const InteractionSpec w = InteractionSpec::soft_coulomb(1.0, 0.5);
  const PotentialField pot = cosine_potential(grid, {{1, 0.3}, {2, 0.2}});
  const auto sol = ground_state(assemble_hamiltonian(grid, N, pot, w, lambda));
  const DensityField rho = dens(grid, *sol->ham().basis, sol->psi0().coeffs);

  LipschitzOptions opts;
  opts.ensemble = 20;
  opts.amplitudes = {1e-2, 3e-3, 1e-3};
  opts.seed = 2026;
  opts.inversion.tol = 1e-11;
  const LipschitzReport rep = lipschitz_probe(grid, N, rho, w, lambda, opts);
  for (const LipschitzSample &s : rep.samples)
  {
    require(v, s.ok, "sample failed: " + s.error);
  }
  note(v, "stability", rep.stability);
  require(v, rep.stability <= 0.10, "ratio varies by more than 10% across amplitudes");
  return v;
}

// ---------------------------------------------------------------------------
// Shared fixture for the coupling-expansion checks (criteria 6 and 7).
struct CouplingContext
{
  Grid grid = make_grid(12);
  int N = 2;
  InteractionSpec w = InteractionSpec::soft_coulomb(1.0, 0.5);
  DensityField rho;
  FunctionalOptions opts;
  double t0 = 0.0;
  double eh = 0.0;
  double ex = 0.0;
  std::map<double, double> f_cache;

  CouplingContext()
  {
    const PotentialField pot = cosine_potential(grid, {{1, 0.4}, {2, 0.2}});
    const auto sol = ground_state(assemble_hamiltonian(grid, N, pot, w, 1.0));
    rho = dens(grid, *sol->ham().basis, sol->psi0().coeffs);
    opts.inversion.tol = 1e-11;
    t0 = t_ks(grid, N, rho, opts);
    eh = hartree_energy(grid, rho, w);
    ex = exchange_energy(grid, N, rho, w, opts).value;
  }

  double f_at(double lambda)
  {
    const auto it = f_cache.find(lambda);
    if (it != f_cache.end())
    {
      return it->second;
    }
    const double value = levy_lieb(grid, N, rho, w, lambda, opts).value;
    f_cache[lambda] = value;
    return value;
  }

  // Leftover of the constrained minimum after removing the kinetic floor and
  // the first-order (mean-field plus exchange) coupling terms.
  double splitting_defect(double lambda)
  {
    return std::abs(f_at(lambda) - t0 - lambda * (eh + ex));
  }
};

CouplingContext &coupling_context()
{
  static CouplingContext ctx;
  return ctx;
}

// 6. First-order coupling splitting: the defect after subtracting the
//    mean-field and exchange terms shrinks at second order, and the exchange
//    potential is the gradient of the exchange energy.
Verdict criterion_exchange()
{
  Verdict v;
  CouplingContext &ctx = coupling_context();

  const std::vector<double> ladder = {4e-2, 2e-2, 1e-2};
  std::vector<double> defects;
  for (const double lambda : ladder)
  {
    defects.push_back(ctx.splitting_defect(lambda));
  }
  for (std::size_t k = 0; k + 1 < defects.size(); k++)
  {
    const double p = observed_order(defects[k], defects[k + 1], 2.0);
    note(v, "split_order", p);
    require(v, p >= 1.8, "splitting defect order below 1.8");
  }

  const QuotientPotential vx = exchange_potential(ctx.grid, ctx.N, ctx.rho, ctx.w, ctx.opts);
  const ZeroMeanBasis zbasis = make_zero_mean_basis(ctx.grid);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  int checked = 0;
  double worst_order = 2.0;
  for (int d = 0; d < 10; d++)
  {
    Eigen::VectorXd coords = Eigen::VectorXd::Zero(ctx.grid.n - 1);
    for (int m = 0; m < 5; m++)
    {
      coords[m] = gauss(rng);
    }
    Field u = zbasis.synthesize(coords);
    u /= u.cwiseAbs().maxCoeff();  // perturbed densities stay safely positive

    const double g = ctx.grid.h * vx.rep.smooth.dot(u);
    std::vector<double> errs;
    for (const double eps : {2e-2, 1e-2})
    {
      DensityField rp{ctx.rho.values + eps * u};
      DensityField rm{ctx.rho.values - eps * u};
      const double ep = exchange_energy(ctx.grid, ctx.N, rp, ctx.w, ctx.opts).value;
      const double em = exchange_energy(ctx.grid, ctx.N, rm, ctx.w, ctx.opts).value;
      errs.push_back(std::abs((ep - em) / (2.0 * eps) - g));
    }
    if (errs[0] <= 1e-8 * (1.0 + std::abs(g)))
    {
      checked++;  // difference quotient already at solver noise: counts as a match
      continue;
    }
    const double p = observed_order(errs[0], errs[1], 2.0);
    if (std::abs(p - 2.0) > std::abs(worst_order - 2.0))
    {
      worst_order = p;
    }
    require(v, p >= 1.7 && p <= 2.3,
            "gradient order out of [1.7,2.3] on direction " + std::to_string(d));
    checked++;
  }
  note(v, "directions", checked);
  note(v, "grad_order", worst_order);
  require(v, checked == 10, "not all directions evaluated");
  return v;
}

// ---------------------------------------------------------------------------
// 7. Second-order correlation series: non-positive terms, the coupling
//    quotient converges to it as the coupling shrinks, exactly zero for one
//    particle.
Verdict criterion_correlation()
{
  Verdict v;
  CouplingContext &ctx = coupling_context();
  const Gl2Result gl2 = gl2_energy(ctx.grid, ctx.N, ctx.rho, ctx.w, 0, ctx.opts);
  for (const double term : gl2.terms)
  {
    require(v, term <= 1e-15, "series term above zero");
  }
  note(v, "value", gl2.value);

  std::vector<double> errs;
  for (const double lambda : {2e-2, 1e-2, 5e-3})
  {
    const double quotient = (ctx.f_at(lambda) - ctx.t0 - lambda * (ctx.eh + ctx.ex)) /
                            (lambda * lambda);
    errs.push_back(std::abs(quotient - gl2.value));
  }
  note(v, "err_first", errs.front());
  note(v, "err_last", errs.back());
  for (std::size_t k = 0; k + 1 < errs.size(); k++)
  {
    require(v, errs[k + 1] < errs[k], "coupling quotient not converging monotonically");
  }

  const Grid grid1 = make_grid(12);
  Field base = Field::Ones(12);
  for (int i = 0; i < 12; i++)
  {
    base[i] += 0.2 * std::cos(2.0 * M_PI * grid1.nodes[i]);
  }
  FunctionalOptions opts1;
  const Gl2Result single = gl2_energy(grid1, 1, DensityField{base}, ctx.w, 0, opts1);
  note(v, "single_value", single.value);
  require(v, std::abs(single.value) <= 1e-10, "single-particle value not zero to 1e-10");
  return v;
}

// ---------------------------------------------------------------------------
// 8. Eigenprojector derivative: the closed-form directional derivative beats
//    finite differences at first order, so residuals quarter when the step
//    halves.
Verdict criterion_projector()
{
  Verdict v;
  const Grid grid = make_grid(12);
  const PotentialField pot = cosine_potential(grid, {{1, 0.4}});
  const PotentialField dir = cosine_potential(grid, {{2, 0.7}, {1, 0.3}});
  const InteractionSpec w = InteractionSpec::soft_coulomb(1.0, 0.5);
  const ProjectorDerivativeReport rep = projector_derivative_check(
      grid, 2, pot, w, 0.5, dir, 0.2, {4e-3, 2e-3, 1e-3});
  for (const double r : rep.ratios)
  {
    note(v, "ratio", r);
    require(v, r >= 2.8 && r <= 5.2, "residual ratio outside 4x +/- 30%");
  }
  require(v, !rep.ratios.empty(), "no ratios reported");
  return v;
}

// ---------------------------------------------------------------------------
// 9. Complex perturbation pipeline: real-sector reduction, projector algebra
//    under imaginary perturbations, roundtrip inversion, first-order
//    analyticity residuals, and a failing anti-analytic control.
Verdict criterion_complex()
{
  Verdict v;
  const Grid grid = make_grid(12);
  const int N = 2;
  const Complex lambda(0.5, 0.0);
  const InteractionSpec w = InteractionSpec::soft_coulomb(1.0, 0.5);
  const PotentialField pot_re = cosine_potential(grid, {{1, 0.4}, {2, -0.2}});

  // (a) purely real data reduces to the self-adjoint solve.
  const ComplexPotential v_real = make_complex_potential(grid, pot_re.smooth.cast<Complex>());
  const ComplexEigenSolution creal = complex_ground(grid, N, v_real, w, lambda);
  const auto rsol = ground_state(assemble_hamiltonian(grid, N, pot_re, w, lambda.real()));
  const double e_rel = std::abs(creal.energy.real() - rsol->energy()) /
                       (1.0 + std::abs(rsol->energy()));
  const DensityField rho_r = dens(grid, *rsol->ham().basis, rsol->psi0().coeffs);
  const ComplexDensity rho_c0 = complex_density(grid, creal);
  const double rho_gap = (rho_c0.values.real() - rho_r.values).cwiseAbs().maxCoeff() /
                         rho_r.values.cwiseAbs().maxCoeff();
  note(v, "real_energy_gap", e_rel);
  note(v, "real_density_gap", rho_gap);
  require(v, e_rel <= 1e-10, "real-sector energy beyond 1e-10");
  require(v, std::abs(creal.energy.imag()) <= 1e-10, "spurious imaginary energy");
  require(v, rho_gap <= 1e-10, "real-sector density beyond 1e-10");
  require(v, rho_c0.values.imag().cwiseAbs().maxCoeff() <= 1e-10,
          "spurious imaginary density");

  // (b) projector algebra survives imaginary amplitudes up to 1e-2.
  std::optional<ComplexEigenSolution> at_largest;
  for (const double amp : {1e-3, 1e-2})
  {
    Field im = Field::Zero(grid.n);
    for (int i = 0; i < grid.n; i++)
    {
      im[i] = amp * std::cos(2.0 * M_PI * grid.nodes[i]);
    }
    ComplexField smooth = pot_re.smooth.cast<Complex>() +
                          Complex(0.0, 1.0) * im.cast<Complex>();
    const ComplexPotential vc = make_complex_potential(grid, std::move(smooth));
    ComplexEigenSolution sol = complex_ground(grid, N, vc, w, lambda);
    const Eigen::MatrixXcd P = sol.psi * sol.psi.transpose();
    const double idem = (P * P - P).cwiseAbs().maxCoeff();
    const double trace = std::abs(P.trace() - Complex(1.0, 0.0));
    require(v, idem <= 1e-8, "projector not idempotent to 1e-8");
    require(v, trace <= 1e-8, "projector trace beyond 1e-8");
    if (amp == 1e-2)
    {
      note(v, "idem", idem);
      at_largest.emplace(std::move(sol));
    }
  }

  // (c) roundtrip inversion of the complex density.
  const ComplexDensity rho_c = complex_density(grid, *at_largest);
  ComplexInversionOptions copts;
  copts.tol = 1e-9;
  const ComplexInversionResult inv =
      complex_invert(grid, N, rho_c, w, lambda, std::nullopt, copts);
  const double dist = complex_quotient_distance(
      grid, inv.v, complex_gauge_fix(grid, ComplexPotential{at_largest->vload, {}}));
  const ComplexPotential base_fixed = complex_gauge_fix(
      grid, make_complex_potential(grid, pot_re.smooth.cast<Complex>() +
                                             [&]
                                             {
                                               ComplexField f(grid.n);
                                               for (int i = 0; i < grid.n; i++)
                                               {
                                                 f[i] = Complex(0.0, 1e-2 * std::cos(2.0 * M_PI *
                                                                                     grid.nodes[i]));
                                               }
                                               return f;
                                             }()));
  const double dist2 = complex_quotient_distance(grid, inv.v, base_fixed);
  note(v, "roundtrip", dist2);
  (void)dist;
  require(v, dist2 <= 1e-7, "roundtrip recovery beyond 1e-7");

  // (d) analyticity residuals decay at least linearly on five fixtures.
  struct Pair
  {
    int n;
    int N;
    std::vector<std::pair<int, double>> base;
    std::vector<std::pair<int, double>> dir;
    Complex dlam;
  };
  const std::vector<Pair> pairs = {
      {12, 1, {{1, 0.4}}, {{2, 1.0}}, Complex(0.0, 0.0)},
      {12, 1, {{2, 0.3}, {3, -0.2}}, {{1, 1.0}}, Complex(0.0, 0.0)},
      {12, 1, {{1, 0.5}, {4, 0.1}}, {{1, 1.0}, {3, 1.0}}, Complex(0.0, 0.0)},
      {12, 1, {{1, 0.4}}, {{2, 1.0}}, Complex(0.5, 0.0)},
      {10, 2, {{1, 0.3}}, {{2, 1.0}}, Complex(0.0, 0.0)},
  };
  const std::vector<double> ladder = {8e-3, 4e-3, 2e-3};
  double min_order = std::numeric_limits<double>::infinity();
  for (const Pair &p : pairs)
  {
    const Grid g = make_grid(p.n);
    const ComplexPotential base =
        make_complex_potential(g, cosine_potential(g, p.base).smooth.cast<Complex>());
    const ComplexPotential dir =
        make_complex_potential(g, cosine_potential(g, p.dir).smooth.cast<Complex>());
    const HolomorphyReport rep =
        holomorphy_check(g, p.N, base, w, Complex(0.3, 0.0), dir, p.dlam, ladder);
    for (const double q : rep.rho_orders)
    {
      min_order = std::min(min_order, q);
    }
    for (const double q : rep.f_orders)
    {
      min_order = std::min(min_order, q);
    }
  }
  note(v, "min_cr_order", min_order);
  require(v, min_order >= 0.9, "analyticity residual order below 0.9");

  // (e) the conjugate-direction control must not pass the same test.
  {
    const Grid g = make_grid(12);
    const ComplexPotential base = make_complex_potential(
        g, cosine_potential(g, {{1, 0.4}}).smooth.cast<Complex>());
    const ComplexPotential dir = make_complex_potential(
        g, cosine_potential(g, {{2, 1.0}}).smooth.cast<Complex>());
    HolomorphyOptions hopts;
    hopts.conjugated_control = true;
    const HolomorphyReport control =
        holomorphy_check(g, 1, base, w, Complex(0.3, 0.0), dir, Complex(0.0, 0.0),
                         ladder, hopts);
    require(v, control.control, "control flag not set");
    require(v, !control.rho_residuals.empty(), "control reported no residuals");
    const double first = control.rho_residuals.front();
    const double last = control.rho_residuals.back();
    note(v, "control_decay", last / first);
    require(v, last >= 0.5 * first, "anti-analytic control unexpectedly decayed");
  }
  return v;
}

// ---------------------------------------------------------------------------
// 10. Seeded CLI runs are byte-identical.
std::string slurp(const std::filesystem::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool directories_identical(const std::filesystem::path &a, const std::filesystem::path &b,
                           std::string &why)
{
  std::vector<std::string> names_a;
  for (const auto &entry : std::filesystem::directory_iterator(a))
  {
    names_a.push_back(entry.path().filename().string());
  }
  std::sort(names_a.begin(), names_a.end());
  std::vector<std::string> names_b;
  for (const auto &entry : std::filesystem::directory_iterator(b))
  {
    names_b.push_back(entry.path().filename().string());
  }
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b)
  {
    why = "file lists differ";
    return false;
  }
  for (const std::string &name : names_a)
  {
    if (slurp(a / name) != slurp(b / name))
    {
      why = "file " + name + " differs";
      return false;
    }
  }
  return true;
}

Verdict criterion_determinism()
{
  Verdict v;
  namespace fs = std::filesystem;
  std::mt19937_64 rng(std::random_device{}());
  const fs::path tmp = fs::temp_directory_path() /
                       ("ks1d_acceptance_" + std::to_string(rng()));
  fs::create_directories(tmp);

  const auto run = [&](const std::string &args)
  {
    const std::string cmd = std::string("\"") + KS1D_CLI_PATH + "\" " + args +
                            " > /dev/null 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  };

  const nlohmann::json lip_cfg = {
      {"n", 12},
      {"N", 1},
      {"interaction", {{"kind", "contact"}, {"strength", 0.5}}},
      {"density", {{"cosine", {{2, 0.2}}}}},
      {"ensemble", 3},
      {"amplitudes", {1e-2, 3e-3}}};
  const nlohmann::json fwd_cfg = {
      {"n", 12},
      {"N", 2},
      {"interaction", {{"kind", "soft_coulomb"}, {"strength", 1.0}, {"softening", 0.5}}},
      {"lambda", 0.6},
      {"potential", {{"cosine", {{1, 0.4}}}}}};
  {
    std::ofstream out(tmp / "lip.json");
    out << lip_cfg.dump(2) << "\n";
    std::ofstream out2(tmp / "fwd.json");
    out2 << fwd_cfg.dump(2) << "\n";
  }

  const struct
  {
    const char *sub;
    const char *cfg;
  } fixtures[] = {{"lipschitz", "lip.json"}, {"forward", "fwd.json"}};
  for (const auto &fx : fixtures)
  {
    const fs::path out1 = tmp / (std::string(fx.sub) + "_1");
    const fs::path out2 = tmp / (std::string(fx.sub) + "_2");
    const std::string common = std::string(fx.sub) + " --config \"" +
                               (tmp / fx.cfg).string() + "\" --seed 7 --out \"";
    const int c1 = run(common + out1.string() + "\"");
    const int c2 = run(common + out2.string() + "\"");
    require(v, c1 == 0 && c2 == 0, std::string(fx.sub) + " run failed");
    if (c1 == 0 && c2 == 0)
    {
      std::string why;
      const bool same = directories_identical(out1, out2, why);
      require(v, same, std::string(fx.sub) + " outputs differ: " + why);
    }
  }

  std::error_code ec;
  fs::remove_all(tmp, ec);
  return v;
}

}  // namespace

int main()
{
  const struct
  {
    const char *label;
    Verdict (*fn)();
  } criteria[] = {
      {"1 free-spectrum oracle and mesh convergence", criterion_spectrum},
      {"2 overlap-operator assembly agreement", criterion_gram},
      {"3 response-operator validation", criterion_response},
      {"4 potential recovery roundtrip", criterion_inversion},
      {"5 stability-probe amplitude independence", criterion_lipschitz},
      {"6 first-order coupling splitting and gradient", criterion_exchange},
      {"7 second-order correlation series", criterion_correlation},
      {"8 eigenprojector derivative formula", criterion_projector},
      {"9 complex perturbation pipeline", criterion_complex},
      {"10 seeded CLI determinism", criterion_determinism},
  };

  int failures = 0;
  for (const auto &c : criteria)
  {
    Verdict v;
    try
    {
      v = c.fn();
    }
    catch (const std::exception &e)
    {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.ok)
    {
      failures++;
    }
    std::cout << (v.ok ? "[PASS] " : "[FAIL] ") << "criterion " << c.label;
    if (!v.detail.empty())
    {
      std::cout << "  (" << v.detail << ")";
    }
    std::cout << "\n" << std::flush;
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failures))
            << "\n";
  return failures == 0 ? 0 : 1;
}
