// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_COMPLEX_EXT_HPP
#define KS1D_COMPLEX_EXT_HPP

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ks1d/grid.hpp"
#include "ks1d/interaction.hpp"
#include "ks1d/inversion.hpp"
#include "ks1d/manybody.hpp"

namespace ks1d
{

using Complex = std::complex<double>;
using ComplexField = Eigen::VectorXcd;

// Complex external potential: sampled smooth part plus point atoms with
// complex weights. The quotient structure (potentials modulo additive complex
// constants) mirrors the real case.
struct ComplexPotential
{
  ComplexField smooth;
  std::vector<std::pair<int, Complex>> atoms;
};

// Validates finiteness and atom indices, merges colocated atoms, drops zeros.
ComplexPotential make_complex_potential(const Grid &grid, ComplexField smooth,
                                        std::vector<std::pair<int, Complex>> atoms = {});

ComplexPotential complexify(const Grid &grid, const PotentialField &v);
PotentialField real_part(const Grid &grid, const ComplexPotential &v);
PotentialField imag_part(const Grid &grid, const ComplexPotential &v);

ComplexPotential complex_add_scaled(const Grid &grid, const ComplexPotential &a, Complex s,
                                    const ComplexPotential &b);
Complex complex_total_mass(const Grid &grid, const ComplexPotential &v);
// Subtracts the total complex mass from the smooth part; the representative
// of the potential modulo complex constants.
ComplexPotential complex_gauge_fix(const Grid &grid, ComplexPotential v);
ComplexField complex_load_vector(const Grid &grid, const ComplexPotential &v);

Complex complex_integrate(const Grid &grid, const ComplexField &f);
// sqrt of the sum of squared real and imaginary first-order norms.
double complex_h1_norm(const Grid &grid, const ComplexField &f);
// Dual norm of the gauge-fixed difference; splits exactly into real and
// imaginary dual norms because the resolvent kernel is real.
double complex_quotient_distance(const Grid &grid, const ComplexPotential &a,
                                 const ComplexPotential &b);

struct ComplexGroundOptions
{
  SolverOptions solver;
  // Admissible perturbation sizes off the real sector: quotient dual norm of
  // the imaginary potential part and modulus of the imaginary coupling.
  // Eigenvalue selection by smallest real part is only defended near the real
  // sector; outside the ball the solve refuses.
  double ball_radius = 0.1;
  // Floor on |psi^T psi| of the unit right eigenvector before binormalizing;
  // smaller values signal a near-exceptional point.
  double binorm_floor = 1e-6;
};

// Ground eigenpair of the complex-symmetric discretization. The left
// eigenvector equals the right one (transpose symmetry), so a single
// binormalized vector psi with psi^T psi = 1 determines the rank-one spectral
// projector P = psi psi^T.
struct ComplexEigenSolution
{
  Grid grid;
  int N = 0;
  std::shared_ptr<const FermionBasis> basis;
  Eigen::MatrixXcd hmat;   // dense complex-symmetric Hamiltonian
  ComplexField vload;      // node loads of the external potential
  Eigen::MatrixXd W;       // interaction kernel samples
  Complex lambda;
  Complex energy;          // eigenvalue of smallest real part
  ComplexField psi;        // binormalized right (= left) eigenvector
  double realgap = 0.0;    // min real-part distance to the rest of the spectrum
  double binorm_size = 0.0;   // |psi^T psi| of the unit-norm eigenvector
  double binorm_defect = 0.0; // |psi^T psi - 1| after binormalization
  double residual = 0.0;      // ||H psi - E psi|| / (1 + |E|)
};

// Dense solve for the eigenvalue of smallest real part, with binormalization
// and a deterministic sign fix. Enforces the perturbation ball (config error
// outside) and the real-gap floor (solver error when selection is ambiguous).
ComplexEigenSolution complex_ground(const Grid &grid, int N, const ComplexPotential &v,
                                    const InteractionSpec &w, Complex lambda,
                                    const ComplexGroundOptions &opts = {});

struct ComplexDensity
{
  ComplexField values;
};

// Bilinear (conjugation-free) one-body density of the eigenpair; integrates
// to the particle count exactly because psi^T psi = 1.
ComplexDensity complex_density(const Grid &grid, const ComplexEigenSolution &sol);

struct ComplexInversionOptions
{
  double tol = 1e-8;  // complex first-order norm of the density residual
  int max_iter = 60;
  int max_halvings = 30;
  ComplexGroundOptions ground;
  InversionOptions real_start;  // used to produce the default initial guess
};

struct ComplexInversionResult
{
  ComplexPotential v;
  int iterations = 0;
  std::vector<double> residual_history;
  ComplexDensity final_density;
  std::shared_ptr<const ComplexEigenSolution> solution;
};

// Newton iteration in the complex quotient space. The Jacobian column for a
// zero-mean mode u is 2 * mixed(psi, R_perp((u-hat) psi)) with the deflated
// resolvent of the complex-symmetric Hamiltonian; holomorphy makes it
// C-linear, so columns over a real basis determine the full complex map.
ComplexInversionResult complex_invert(const Grid &grid, int N, const ComplexDensity &rho_target,
                                      const InteractionSpec &w, Complex lambda,
                                      const std::optional<ComplexPotential> &v0 = std::nullopt,
                                      const ComplexInversionOptions &opts = {});

struct EigenvaluePropertyReport
{
  // Residual of (H - (F + <rho, v>)) P with the interior value F = psi^T
  // (kinetic + lambda pair) psi, under the two candidate density/potential
  // pairing conventions.
  double bilinear_residual = 0.0;       // <rho, v> = h * sum rho_i r_i
  double sesquilinear_residual = 0.0;   // <rho, v> = h * sum conj(rho_i) r_i
};

EigenvaluePropertyReport eigenvalue_property_check(const Grid &grid,
                                                   const ComplexEigenSolution &sol,
                                                   const ComplexPotential &v);

struct HolomorphyOptions
{
  // When set, conjugates the probed quantities first: an anti-holomorphic
  // control that must fail the difference-quotient test.
  bool conjugated_control = false;
  ComplexGroundOptions ground;
};

struct HolomorphyReport
{
  std::vector<double> eps;
  std::vector<double> rho_residuals;  // || D_e rho - D_ie rho || per epsilon
  std::vector<double> f_residuals;    // same for the interior energy value
  std::vector<double> rho_orders;     // observed decay orders between rungs
  std::vector<double> f_orders;
  bool control = false;
};

// Finite-difference Cauchy-Riemann test: directional difference quotients of
// the density and interior energy along a direction and along i times it must
// agree to O(epsilon) when the map is holomorphic.
HolomorphyReport holomorphy_check(const Grid &grid, int N, const ComplexPotential &v,
                                  const InteractionSpec &w, Complex lambda,
                                  const ComplexPotential &dir_v, Complex dir_lambda,
                                  const std::vector<double> &eps_ladder,
                                  const HolomorphyOptions &opts = {});

}  // namespace ks1d

#endif  // KS1D_COMPLEX_EXT_HPP
