// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_MANYBODY_HPP
#define KS1D_MANYBODY_HPP

#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>
#include <Eigen/Dense>

#include "ks1d/grid.hpp"
#include "ks1d/interaction.hpp"

namespace ks1d
{

// Antisymmetric N-particle basis: strictly increasing node tuples, enumerated
// in combinadic order so neighbor ranks are computable in O(1).
struct FermionBasis
{
  int n = 0;
  int N = 0;
  std::size_t dim = 0;
  std::vector<std::uint64_t> binom;  // (n+1) x (N+1), row-major
  std::vector<int> flat;             // dim * N node indices

  std::span<const int> tuple(std::size_t r) const
  {
    return {flat.data() + r * static_cast<std::size_t>(N), static_cast<std::size_t>(N)};
  }

  std::uint64_t choose(int a, int b) const
  {
    return (a < 0 || b < 0 || b > N || a > n) ? 0 : binom[static_cast<std::size_t>(a) * (N + 1) + b];
  }

  // Rank after moving the slot-p occupant from node `from` to node `to`,
  // valid when the move does not cross another occupied node (order is
  // preserved, so the fermionic reordering sign is +1).
  std::size_t rank_after_move(std::size_t r, int p, int from, int to) const
  {
    return r - choose(from, p + 1) + choose(to, p + 1);
  }

  static std::shared_ptr<const FermionBasis> make(int n, int N, std::size_t max_dim);
};

// Coefficients over a FermionBasis, unit Euclidean norm for physical states.
struct FermionState
{
  int n = 0;
  int N = 0;
  Eigen::VectorXd coeffs;
  bool from_ground_state = false;
};

struct SolverOptions
{
  std::size_t dense_threshold = 4000;
  std::size_t max_dim = 200000;
  double gap_floor = 1e-8;
  double eig_residual_tol = 1e-9;  // scaled by (1 + |E|)
  bool polish = true;              // refine dense eigenpairs past QR accuracy
  std::size_t polish_max_dim = 2048;
  int lanczos_max_subspace = 350;
  double lanczos_tol = 1e-10;
  double cg_tol = 1e-12;
  int cg_max_iter_factor = 60;
};

// Assembled operator: one-body second differences (mirror closure), diagonal
// external loads, diagonal two-body coupling. Kept matrix-free; dense
// materialization on demand.
struct Hamiltonian
{
  Grid grid;
  int N = 0;
  std::shared_ptr<const FermionBasis> basis;
  Field vload;          // node loads r_i of the external potential
  Eigen::MatrixXd W;    // kernel samples
  double lambda = 0.0;
  Eigen::VectorXd diag; // kinetic + external + lambda * interaction
  double off = 0.0;     // hopping amplitude -1/h^2

  std::size_t dim() const { return basis->dim; }
  Eigen::VectorXd apply(const Eigen::VectorXd &x) const;
  Eigen::VectorXd apply_kinetic(const Eigen::VectorXd &x) const;
  Eigen::MatrixXd dense() const;
};

std::shared_ptr<const Hamiltonian> assemble_hamiltonian(const Grid &grid, int N,
                                                        const PotentialField &v,
                                                        const InteractionSpec &w,
                                                        double lambda,
                                                        const SolverOptions &opts = {});

// Sum over tuple slots of g at the occupied nodes; the diagonal through which
// every one-body multiplication operator acts on this basis.
Eigen::VectorXd tuple_sum_diagonal(const FermionBasis &basis, const Field &g);

// Sum over ordered distinct slot pairs of W at the occupied nodes.
Eigen::VectorXd tuple_pair_diagonal(const FermionBasis &basis, const Eigen::MatrixXd &W);

// Ground (and optionally low excited) eigenpairs plus a deflated solver for
// the reduced resolvent. Non-copyable: holds factorization caches.
class SpectralSolution
{
public:
  SpectralSolution(std::shared_ptr<const Hamiltonian> ham, SolverOptions opts)
      : ham_(std::move(ham)), opts_(opts)
  {
  }
  SpectralSolution(const SpectralSolution &) = delete;
  SpectralSolution &operator=(const SpectralSolution &) = delete;

  const Hamiltonian &ham() const { return *ham_; }
  std::shared_ptr<const Hamiltonian> ham_ptr() const { return ham_; }
  double energy() const { return energy_; }
  double gap() const { return gap_; }
  const FermionState &psi0() const { return psi0_; }
  const std::vector<double> &excited_energies() const { return excited_energies_; }
  const std::vector<FermionState> &excited_states() const { return excited_states_; }

  // x = sum over excited levels of -1/omega_j times the level-j component of
  // F; equivalently the unique solution of (E0 - H) x = P_perp F with
  // x othogonal to the ground state. Computed by a deflated positive definite
  // solve (dense factorization or conjugate gradients), not by spectral sums.
  Eigen::VectorXd reduced_resolvent_apply(const Eigen::VectorXd &F) const;

  // Thread-safe warmup of the factorization cache.
  void prepare_resolvent() const;

private:
  friend std::shared_ptr<const SpectralSolution> ground_state(
      std::shared_ptr<const Hamiltonian>, const SolverOptions &, int);
  friend std::vector<std::pair<double, FermionState>> spectrum(
      std::shared_ptr<const Hamiltonian>, int, const SolverOptions &);

  std::shared_ptr<const Hamiltonian> ham_;
  SolverOptions opts_;
  double energy_ = 0.0;
  double gap_ = 0.0;
  FermionState psi0_;
  std::vector<double> excited_energies_;
  std::vector<FermionState> excited_states_;
  std::shared_ptr<Eigen::MatrixXd> dense_cache_;

  mutable std::once_flag resolvent_once_;
  mutable std::unique_ptr<Eigen::LDLT<Eigen::MatrixXd>> deflated_;
};

// Lowest eigenpair with the spectral gap; throws SolverError when the gap
// falls below gap_floor (near-degenerate ground state) or an iterative solve
// stalls. n_excited additional levels are stored on the solution.
std::shared_ptr<const SpectralSolution> ground_state(std::shared_ptr<const Hamiltonian> ham,
                                                     const SolverOptions &opts = {},
                                                     int n_excited = 0);

// k lowest eigenpairs, energies ascending, phases fixed.
std::vector<std::pair<double, FermionState>> spectrum(std::shared_ptr<const Hamiltonian> ham,
                                                      int k, const SolverOptions &opts = {});

double kinetic_energy(const Hamiltonian &ham, const FermionState &psi);
double quadratic_form(const Hamiltonian &ham, const FermionState &psi);

// min over unit phases of ||a - alpha b||: sqrt(2 - 2 |<a, b>|).
double state_distance_min_phase(const FermionState &a, const FermionState &b);

}  // namespace ks1d

#endif  // KS1D_MANYBODY_HPP
