#pragma once

#include <vector>

#include "plom/types.hpp"

namespace plom {

// Gaussian affinity between ensemble columns, K_ij = exp(-||d_ij||^2/(4 eps)),
// with its row-sum degrees b.  The kernel must be positive definite, which
// fails only when points (nearly) coincide or eps saturates the scale.
struct DiffusionKernel {
  double eps_dm = 0.0;
  Matrix K;  // N x N, symmetric, unit diagonal
  Vector b;  // row sums, all >= 1
};

DiffusionKernel build_kernel(const Matrix& eta, double eps_dm);

// Eigenpairs of the transition operator b^-1 K, solved through the symmetric
// form b^-1/2 K b^-1/2.  Columns of psi are b-orthonormal, lambda is sorted
// descending with lambda[0] == 1 and psi^1 constant.  reduce() populates the
// order-m reduced frame g = psi lambda^kappa, its dual a = g (g^T g)^-1 and
// the rank-m projector G = a g^T.
struct DiffusionBasis {
  double eps_dm = 0.0;
  int kappa = 1;
  Vector lambda;  // N
  Matrix psi;     // N x N
  Index m = 0;    // 0 until reduced
  Matrix g;       // N x m
  Matrix a;       // N x m
  Matrix G;       // N x N
};

DiffusionBasis solve_basis(const DiffusionKernel& kernel, int kappa);
DiffusionBasis reduce(const DiffusionBasis& basis, Index m);

// Smallest alpha >= 3 whose eigenvalue falls below threshold * lambda_2;
// N when the spectrum never drops.  lambda must be sorted descending.
Index m_hat_from_spectrum(const Vector& lambda, double threshold);
Index m_hat(const Matrix& eta, double eps_dm, double threshold);

// 24 geometric points spanning [0.1 med^2, 100 med^2], med the median
// pairwise distance of the ensemble.
std::vector<double> default_eps_grid(const Matrix& eta);

struct EpsScanRow {
  double eps = 0.0;
  Index mhat = 0;
  double lambda2 = 0.0;
  double lambda_mhat = 0.0;
};

struct EpsSelection {
  std::vector<EpsScanRow> rows;
  double eps_opt = 0.0;
  Index m_opt = 0;
};

// Plateau rule on a scanned grid: picks the first grid point whose m_hat is
// strictly below every earlier one and stays constant across (eps, 1.5 eps].
// The scan must be non-increasing in m_hat.
std::size_t select_index_from_scan(const std::vector<EpsScanRow>& rows);
EpsSelection select_eps_m(const Matrix& eta, const std::vector<double>& grid,
                          double threshold);

// Stationary distribution of the kernel's Markov chain, b_i / sum b.
Vector chain_invariant_measure(const DiffusionKernel& kernel);

}  // namespace plom
