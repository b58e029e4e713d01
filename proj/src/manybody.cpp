// SPDX-License-Identifier: Apache-2.0

#include "ks1d/manybody.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ks1d/errors.hpp"
#include "ks1d/util.hpp"

namespace ks1d
{

namespace
{

Field kinetic_node_diagonal(const Grid &grid)
{
  const double w = 1.0 / (grid.h * grid.h);
  Field d(grid.n);
  for (int i = 0; i < grid.n; i++)
  {
    d[i] = (i == 0 || i == grid.n - 1) ? w : 2.0 * w;
  }
  return d;
}

void fix_phase(Eigen::VectorXd &psi)
{
  // Deterministic gauge: first entry of largest magnitude made positive.
  int best = 0;
  double mag = -1.0;
  for (Eigen::Index i = 0; i < psi.size(); i++)
  {
    const double a = std::abs(psi[i]);
    if (a > mag)
    {
      mag = a;
      best = static_cast<int>(i);
    }
  }
  if (psi[best] < 0.0)
  {
    psi = -psi;
  }
}

// Rayleigh quotient accumulated in extended precision; sharpens eigenvalues
// past the dense solver's backward-error floor.
double rayleigh_quotient_ext(const Hamiltonian &ham, const Eigen::VectorXd &y)
{
  const FermionBasis &basis = *ham.basis;
  long double num = 0.0L, den = 0.0L;
  for (std::size_t r = 0; r < basis.dim; r++)
  {
    num += static_cast<long double>(ham.diag[r]) * y[r] * y[r];
    den += static_cast<long double>(y[r]) * y[r];
    const auto K = basis.tuple(r);
    for (int p = 0; p < basis.N; p++)
    {
      const int i = K[p];
      if (i > 0 && (p == 0 || K[p - 1] != i - 1))
      {
        const std::size_t r2 = basis.rank_after_move(r, p, i, i - 1);
        num += 2.0L * static_cast<long double>(ham.off) * y[r] * y[r2];
      }
    }
  }
  return static_cast<double>(num / den);
}

double eig_residual(const Hamiltonian &ham, double E, const Eigen::VectorXd &y)
{
  return (ham.apply(y) - E * y).norm();
}

// One fixed-shift inverse-iteration step; returns true if it reduced the
// residual (otherwise y is left untouched).
bool polish_vector(const Eigen::MatrixXd &D, const Hamiltonian &ham, double E,
                   Eigen::VectorXd &y)
{
  Eigen::MatrixXd shifted = D;
  shifted.diagonal().array() -= E;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
  Eigen::VectorXd z = lu.solve(y);
  if (!z.allFinite() || z.norm() == 0.0)
  {
    return false;
  }
  z.normalize();
  if (eig_residual(ham, E, z) < eig_residual(ham, E, y))
  {
    y = z;
    return true;
  }
  return false;
}

struct EigPairs
{
  std::vector<double> values;
  std::vector<Eigen::VectorXd> vectors;
};

EigPairs dense_lowest(const Hamiltonian &ham, const Eigen::MatrixXd &D, int k,
                      const SolverOptions &opts, bool polish_all_vectors)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  if (es.info() != Eigen::Success)
  {
    throw SolverError("dense eigensolver failed");
  }
  EigPairs out;
  const std::size_t dim = ham.dim();
  const bool can_polish = opts.polish && dim <= opts.polish_max_dim;
  for (int j = 0; j < k; j++)
  {
    Eigen::VectorXd y = es.eigenvectors().col(j);
    double E = es.eigenvalues()[j];
    if (can_polish && (j == 0 || polish_all_vectors))
    {
      polish_vector(D, ham, E, y);
    }
    if (can_polish)
    {
      E = rayleigh_quotient_ext(ham, y);
    }
    fix_phase(y);
    out.values.push_back(E);
    out.vectors.push_back(std::move(y));
  }
  // The gap test needs the next level even when only k pairs are returned.
  if (k < static_cast<int>(dim))
  {
    out.values.push_back(es.eigenvalues()[k]);
  }
  return out;
}

Eigen::VectorXd deterministic_start(std::size_t dim)
{
  Eigen::VectorXd v(dim);
  for (std::size_t i = 0; i < dim; i++)
  {
    const std::uint64_t bits = mix_seed(0xC0FFEEULL, i);
    v[i] = static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0) - 0.5;
  }
  v.normalize();
  return v;
}

EigPairs lanczos_lowest(const Hamiltonian &ham, int k, const SolverOptions &opts)
{
  const std::size_t dim = ham.dim();
  const std::size_t max_m =
      std::min<std::size_t>(dim, static_cast<std::size_t>(opts.lanczos_max_subspace));
  if (static_cast<std::size_t>(k) > max_m / 2 && static_cast<std::size_t>(k) < dim)
  {
    throw SolverError("iterative eigensolver: requested " + std::to_string(k) +
                      " pairs exceeds the subspace budget; use the dense path");
  }
  std::vector<Eigen::VectorXd> V;
  std::vector<double> alphas, betas;
  Eigen::VectorXd v = deterministic_start(dim);
  V.push_back(v);
  double scale = 0.0;
  for (std::size_t m = 1; m <= max_m; m++)
  {
    Eigen::VectorXd w = ham.apply(V[m - 1]);
    if (m > 1)
    {
      w -= betas[m - 2] * V[m - 2];
    }
    const double alpha = V[m - 1].dot(w);
    w -= alpha * V[m - 1];
    for (int pass = 0; pass < 2; pass++)
    {
      for (const auto &u : V)
      {
        w -= u.dot(w) * u;
      }
    }
    alphas.push_back(alpha);
    scale = std::max({scale, std::abs(alpha), w.norm()});
    const double beta = w.norm();

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < m; i++)
    {
      T(i, i) = alphas[i];
      if (i + 1 < m)
      {
        T(i, i + 1) = T(i + 1, i) = betas[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const bool exhausted = beta <= 1e-13 * std::max(1.0, scale) || m == dim;
    bool converged = m >= static_cast<std::size_t>(k);
    if (converged && !exhausted)
    {
      for (int j = 0; j < k; j++)
      {
        const double bound = std::abs(beta * es.eigenvectors()(m - 1, j));
        if (bound > opts.lanczos_tol * (1.0 + std::abs(es.eigenvalues()[j])))
        {
          converged = false;
          break;
        }
      }
    }
    if ((converged || exhausted) && m >= static_cast<std::size_t>(k))
    {
      EigPairs out;
      const int extra = (static_cast<std::size_t>(k) < m) ? 1 : 0;
      for (int j = 0; j < k + extra; j++)
      {
        if (j < k)
        {
          Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
          for (std::size_t i = 0; i < m; i++)
          {
            y += es.eigenvectors()(i, j) * V[i];
          }
          y.normalize();
          fix_phase(y);
          out.vectors.push_back(std::move(y));
        }
        out.values.push_back(es.eigenvalues()[j]);
      }
      return out;
    }
    if (exhausted)
    {
      throw SolverError("iterative eigensolver: invariant subspace too small");
    }
    betas.push_back(beta);
    V.push_back(w / beta);
  }
  throw SolverError("iterative eigensolver did not converge within the subspace budget");
}

EigPairs lowest_pairs(const Hamiltonian &ham, std::shared_ptr<Eigen::MatrixXd> &dense_out,
                      int k, const SolverOptions &opts, bool polish_all_vectors)
{
  if (k < 1 || static_cast<std::size_t>(k) > ham.dim())
  {
    throw ConfigError("requested " + std::to_string(k) + " eigenpairs from a space of dimension " +
                      std::to_string(ham.dim()));
  }
  if (ham.dim() <= opts.dense_threshold)
  {
    dense_out = std::make_shared<Eigen::MatrixXd>(ham.dense());
    return dense_lowest(ham, *dense_out, k, opts, polish_all_vectors);
  }
  return lanczos_lowest(ham, k, opts);
}

void check_pair_residuals(const Hamiltonian &ham, const EigPairs &pairs,
                          const SolverOptions &opts)
{
  for (std::size_t j = 0; j < pairs.vectors.size(); j++)
  {
    const double res = eig_residual(ham, pairs.values[j], pairs.vectors[j]);
    if (res > opts.eig_residual_tol * (1.0 + std::abs(pairs.values[j])))
    {
      throw ConsistencyError("eigenpair residual " + std::to_string(res) +
                             " exceeds tolerance at level " + std::to_string(j));
    }
  }
}

}  // namespace

std::shared_ptr<const FermionBasis> FermionBasis::make(int n, int N, std::size_t max_dim)
{
  if (N < 1 || N > 4)
  {
    throw ConfigError("particle number must be between 1 and 4, got " + std::to_string(N));
  }
  if (n < N)
  {
    throw ConfigError("fewer nodes than particles");
  }
  auto basis = std::make_shared<FermionBasis>();
  basis->n = n;
  basis->N = N;
  basis->binom.assign(static_cast<std::size_t>(n + 1) * (N + 1), 0);
  for (int a = 0; a <= n; a++)
  {
    basis->binom[static_cast<std::size_t>(a) * (N + 1)] = 1;
    for (int b = 1; b <= std::min(a, N); b++)
    {
      basis->binom[static_cast<std::size_t>(a) * (N + 1) + b] =
          (a == b) ? 1
                   : basis->binom[static_cast<std::size_t>(a - 1) * (N + 1) + b] +
                         basis->binom[static_cast<std::size_t>(a - 1) * (N + 1) + b - 1];
    }
  }
  const std::uint64_t dim = basis->choose(n, N);
  if (dim > max_dim)
  {
    throw ConfigError("basis dimension " + std::to_string(dim) + " exceeds the cap " +
                      std::to_string(max_dim));
  }
  basis->dim = static_cast<std::size_t>(dim);
  basis->flat.resize(basis->dim * static_cast<std::size_t>(N));
  // Combinadic enumeration: increment the lowest slot that can move, reset
  // the slots below it. Rank r equals sum over slots of C(node, slot+1).
  std::vector<int> K(N);
  for (int p = 0; p < N; p++)
  {
    K[p] = p;
  }
  for (std::size_t r = 0; r < basis->dim; r++)
  {
    std::copy(K.begin(), K.end(), basis->flat.begin() + r * static_cast<std::size_t>(N));
    int p = 0;
    while (p < N)
    {
      const int limit = (p + 1 < N) ? K[p + 1] : n;
      if (K[p] + 1 < limit)
      {
        K[p]++;
        for (int q = 0; q < p; q++)
        {
          K[q] = q;
        }
        break;
      }
      p++;
    }
  }
  return basis;
}

Eigen::VectorXd tuple_sum_diagonal(const FermionBasis &basis, const Field &g)
{
  if (g.size() != basis.n)
  {
    throw ConfigError("tuple_sum_diagonal: field size mismatch");
  }
  Eigen::VectorXd d(basis.dim);
  for (std::size_t r = 0; r < basis.dim; r++)
  {
    const auto K = basis.tuple(r);
    double acc = 0.0;
    for (int p = 0; p < basis.N; p++)
    {
      acc += g[K[p]];
    }
    d[r] = acc;
  }
  return d;
}

Eigen::VectorXd tuple_pair_diagonal(const FermionBasis &basis, const Eigen::MatrixXd &W)
{
  if (W.rows() != basis.n || W.cols() != basis.n)
  {
    throw ConfigError("tuple_pair_diagonal: kernel size mismatch");
  }
  Eigen::VectorXd d(basis.dim);
  for (std::size_t r = 0; r < basis.dim; r++)
  {
    const auto K = basis.tuple(r);
    double acc = 0.0;
    for (int p = 0; p < basis.N; p++)
    {
      for (int q = 0; q < basis.N; q++)
      {
        if (p != q)
        {
          acc += W(K[p], K[q]);
        }
      }
    }
    d[r] = acc;
  }
  return d;
}

std::shared_ptr<const Hamiltonian> assemble_hamiltonian(const Grid &grid, int N,
                                                        const PotentialField &v,
                                                        const InteractionSpec &w, double lambda,
                                                        const SolverOptions &opts)
{
  auto ham = std::make_shared<Hamiltonian>();
  ham->grid = grid;
  ham->N = N;
  ham->basis = FermionBasis::make(grid.n, N, opts.max_dim);
  ham->vload = load_vector(grid, v);
  ham->W = kernel_matrix(grid, w);
  ham->lambda = lambda;
  ham->off = -1.0 / (grid.h * grid.h);
  ham->diag = tuple_sum_diagonal(*ham->basis, kinetic_node_diagonal(grid)) +
              tuple_sum_diagonal(*ham->basis, ham->vload);
  if (lambda != 0.0)
  {
    ham->diag += lambda * tuple_pair_diagonal(*ham->basis, ham->W);
  }
  return ham;
}

Eigen::VectorXd Hamiltonian::apply(const Eigen::VectorXd &x) const
{
  if (static_cast<std::size_t>(x.size()) != dim())
  {
    throw ConfigError("Hamiltonian::apply: coefficient size mismatch");
  }
  Eigen::VectorXd y = diag.cwiseProduct(x);
  const FermionBasis &b = *basis;
  for (std::size_t r = 0; r < b.dim; r++)
  {
    const auto K = b.tuple(r);
    for (int p = 0; p < b.N; p++)
    {
      const int i = K[p];
      // Hop to the left neighbor when unoccupied; the occupant order is
      // preserved, so no fermionic sign appears for nearest-neighbor moves.
      if (i > 0 && (p == 0 || K[p - 1] != i - 1))
      {
        const std::size_t r2 = b.rank_after_move(r, p, i, i - 1);
        y[r] += off * x[r2];
        y[r2] += off * x[r];
      }
    }
  }
  return y;
}

Eigen::VectorXd Hamiltonian::apply_kinetic(const Eigen::VectorXd &x) const
{
  const FermionBasis &b = *basis;
  Eigen::VectorXd y =
      tuple_sum_diagonal(b, kinetic_node_diagonal(grid)).cwiseProduct(x);
  for (std::size_t r = 0; r < b.dim; r++)
  {
    const auto K = b.tuple(r);
    for (int p = 0; p < b.N; p++)
    {
      const int i = K[p];
      if (i > 0 && (p == 0 || K[p - 1] != i - 1))
      {
        const std::size_t r2 = b.rank_after_move(r, p, i, i - 1);
        y[r] += off * x[r2];
        y[r2] += off * x[r];
      }
    }
  }
  return y;
}

Eigen::MatrixXd Hamiltonian::dense() const
{
  const FermionBasis &b = *basis;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(b.dim, b.dim);
  D.diagonal() = diag;
  for (std::size_t r = 0; r < b.dim; r++)
  {
    const auto K = b.tuple(r);
    for (int p = 0; p < b.N; p++)
    {
      const int i = K[p];
      if (i > 0 && (p == 0 || K[p - 1] != i - 1))
      {
        const std::size_t r2 = b.rank_after_move(r, p, i, i - 1);
        D(r, r2) = off;
        D(r2, r) = off;
      }
    }
  }
  return D;
}

std::shared_ptr<const SpectralSolution> ground_state(std::shared_ptr<const Hamiltonian> ham,
                                                     const SolverOptions &opts, int n_excited)
{
  auto sol = std::make_shared<SpectralSolution>(ham, opts);
  const int k = 1 + n_excited;
  EigPairs pairs = lowest_pairs(*ham, sol->dense_cache_, k, opts, false);
  check_pair_residuals(*ham, pairs, opts);
  sol->energy_ = pairs.values[0];
  if (pairs.values.size() < 2)
  {
    throw SolverError("cannot estimate the spectral gap: one-dimensional space");
  }
  sol->gap_ = pairs.values[1] - pairs.values[0];
  if (sol->gap_ < opts.gap_floor)
  {
    throw SolverError("near-degenerate ground state: gap " + std::to_string(sol->gap_) +
                      " below floor " + std::to_string(opts.gap_floor));
  }
  sol->psi0_ = FermionState{ham->grid.n, ham->N, std::move(pairs.vectors[0]), true};
  for (int j = 1; j < k; j++)
  {
    sol->excited_energies_.push_back(pairs.values[j]);
    sol->excited_states_.push_back(
        FermionState{ham->grid.n, ham->N, std::move(pairs.vectors[j]), false});
  }
  return sol;
}

std::vector<std::pair<double, FermionState>> spectrum(std::shared_ptr<const Hamiltonian> ham,
                                                      int k, const SolverOptions &opts)
{
  std::shared_ptr<Eigen::MatrixXd> dense;
  EigPairs pairs = lowest_pairs(*ham, dense, k, opts, true);
  check_pair_residuals(*ham, pairs, opts);
  std::vector<std::pair<double, FermionState>> out;
  for (int j = 0; j < k; j++)
  {
    out.emplace_back(pairs.values[j],
                     FermionState{ham->grid.n, ham->N, std::move(pairs.vectors[j]), j == 0});
  }
  return out;
}

void SpectralSolution::prepare_resolvent() const
{
  std::call_once(resolvent_once_,
                 [&]()
                 {
                   if (!dense_cache_)
                   {
                     return;  // iterative path solves by conjugate gradients
                   }
                   Eigen::MatrixXd A = *dense_cache_;
                   A.diagonal().array() -= energy_;
                   A += psi0_.coeffs * psi0_.coeffs.transpose();
                   deflated_ = std::make_unique<Eigen::LDLT<Eigen::MatrixXd>>(A);
                   if (deflated_->info() != Eigen::Success)
                   {
                     throw SolverError("deflated factorization failed");
                   }
                 });
}

Eigen::VectorXd SpectralSolution::reduced_resolvent_apply(const Eigen::VectorXd &F) const
{
  if (static_cast<std::size_t>(F.size()) != ham_->dim())
  {
    throw ConfigError("reduced_resolvent_apply: size mismatch");
  }
  const Eigen::VectorXd &psi = psi0_.coeffs;
  Eigen::VectorXd b = F - psi.dot(F) * psi;
  if (dense_cache_)
  {
    prepare_resolvent();
    Eigen::VectorXd y = deflated_->solve(b);
    y -= psi.dot(y) * psi;
    return -y;
  }
  // Conjugate gradients on the deflated operator (H - E0) + |psi><psi|,
  // positive definite with spectrum {1} union {excitation energies}.
  const auto apply_deflated = [&](const Eigen::VectorXd &x) -> Eigen::VectorXd
  { return ham_->apply(x) - energy_ * x + psi.dot(x) * psi; };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  const double b2 = b.squaredNorm();
  if (b2 == 0.0)
  {
    return x;
  }
  double r2 = b2;
  const int max_iter = opts_.cg_max_iter_factor * static_cast<int>(ham_->dim());
  for (int it = 0; it < max_iter; it++)
  {
    const Eigen::VectorXd Ap = apply_deflated(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0))
    {
      throw SolverError("deflated conjugate-gradient breakdown");
    }
    const double alpha = r2 / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    const double r2n = r.squaredNorm();
    if (std::sqrt(r2n / b2) <= opts_.cg_tol)
    {
      x -= psi.dot(x) * psi;
      return -x;
    }
    p = r + (r2n / r2) * p;
    r2 = r2n;
  }
  throw SolverError("deflated conjugate gradients did not converge");
}

double kinetic_energy(const Hamiltonian &ham, const FermionState &psi)
{
  const Eigen::VectorXd Tpsi = ham.apply_kinetic(psi.coeffs);
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < Tpsi.size(); i++)
  {
    acc += static_cast<long double>(psi.coeffs[i]) * Tpsi[i];
  }
  return static_cast<double>(acc);
}

double quadratic_form(const Hamiltonian &ham, const FermionState &psi)
{
  const Eigen::VectorXd Hpsi = ham.apply(psi.coeffs);
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < Hpsi.size(); i++)
  {
    acc += static_cast<long double>(psi.coeffs[i]) * Hpsi[i];
  }
  return static_cast<double>(acc);
}

double state_distance_min_phase(const FermionState &a, const FermionState &b)
{
  if (a.coeffs.size() != b.coeffs.size())
  {
    throw ConfigError("state_distance_min_phase: size mismatch");
  }
  const double overlap = std::abs(a.coeffs.dot(b.coeffs));
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * overlap));
}

}  // namespace ks1d
