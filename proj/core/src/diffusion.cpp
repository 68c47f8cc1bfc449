#include "plom/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "plom/errors.hpp"

namespace plom {
namespace {

constexpr double kDuplicateDistance = 1e-12;

void fix_sign(Eigen::Ref<Vector> v) {
  Index best = 0;
  double mag = std::abs(v[0]);
  for (Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > mag) {
      mag = std::abs(v[i]);
      best = i;
    }
  }
  if (v[best] < 0.0) v = -v;
}

Matrix pairwise_sq_dists(const Matrix& eta) {
  const Index N = eta.cols();
  Vector sq = eta.colwise().squaredNorm().transpose();
  Matrix d2 = (-2.0 * eta.transpose() * eta);
  d2.colwise() += sq;
  d2.rowwise() += sq.transpose();
  d2.diagonal().setZero();
  return d2.cwiseMax(0.0);
}

std::pair<Index, Index> closest_pair(const Matrix& d2) {
  Index bi = 0, bj = 1;
  double best = d2(0, 1);
  for (Index i = 0; i < d2.rows(); ++i)
    for (Index j = i + 1; j < d2.cols(); ++j)
      if (d2(i, j) < best) {
        best = d2(i, j);
        bi = i;
        bj = j;
      }
  return {bi, bj};
}

}  // namespace

DiffusionKernel build_kernel(const Matrix& eta, double eps_dm) {
  if (eta.size() == 0) throw DataError("build_kernel: empty ensemble");
  if (!(eps_dm > 0.0)) throw ConfigError("build_kernel: eps_dm must be > 0");
  const Index N = eta.cols();

  DiffusionKernel kernel;
  kernel.eps_dm = eps_dm;
  if (N == 1) {
    kernel.K = Matrix::Ones(1, 1);
    kernel.b = Vector::Ones(1);
    return kernel;
  }

  Matrix d2 = pairwise_sq_dists(eta);
  auto [ci, cj] = closest_pair(d2);
  if (std::sqrt(d2(ci, cj)) < kDuplicateDistance)
    throw DataError("build_kernel: points " + std::to_string(ci) + " and " +
                    std::to_string(cj) + " coincide within " +
                    std::to_string(kDuplicateDistance));

  kernel.K = (-d2 / (4.0 * eps_dm)).array().exp().matrix();
  kernel.K.diagonal().setOnes();
  kernel.b = kernel.K.rowwise().sum();

  Eigen::LLT<Matrix> llt(kernel.K);
  if (llt.info() != Eigen::Success)
    throw NumericalError(
        "build_kernel: kernel not positive definite at eps_dm " +
        std::to_string(eps_dm) + "; closest points are " + std::to_string(ci) +
        " and " + std::to_string(cj) + " at distance " +
        std::to_string(std::sqrt(d2(ci, cj))));
  return kernel;
}

DiffusionBasis solve_basis(const DiffusionKernel& kernel, int kappa) {
  if (kappa < 0) throw ConfigError("kappa must be >= 0");
  const Index N = kernel.K.rows();
  DiffusionBasis basis;
  basis.eps_dm = kernel.eps_dm;
  basis.kappa = kappa;

  Vector inv_sqrt_b = kernel.b.cwiseSqrt().cwiseInverse();
  Matrix sym =
      inv_sqrt_b.asDiagonal() * kernel.K * inv_sqrt_b.asDiagonal();
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalError("solve_basis: eigendecomposition failed");

  basis.lambda = es.eigenvalues().reverse();
  basis.lambda[0] = 1.0;  // exact by construction of the transition operator
  basis.psi = inv_sqrt_b.asDiagonal() * es.eigenvectors().rowwise().reverse();
  for (Index k = 0; k < N; ++k) fix_sign(basis.psi.col(k));
  return basis;
}

DiffusionBasis reduce(const DiffusionBasis& basis, Index m) {
  const Index N = basis.psi.rows();
  if (m < 1 || m > N)
    throw ConfigError("reduce: m " + std::to_string(m) + " outside [1, " +
                      std::to_string(N) + "]");
  DiffusionBasis out = basis;
  out.m = m;
  Vector scale(m);
  for (Index k = 0; k < m; ++k)
    scale[k] = std::pow(basis.lambda[k], static_cast<double>(basis.kappa));
  out.g = basis.psi.leftCols(m) * scale.asDiagonal();
  Matrix gram = out.g.transpose() * out.g;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw NumericalError("reduce: reduced frame is rank deficient");
  out.a = llt.solve(out.g.transpose()).transpose();
  out.G = out.a * out.g.transpose();
  out.G = 0.5 * (out.G + out.G.transpose());
  return out;
}

Index m_hat_from_spectrum(const Vector& lambda, double threshold) {
  const Index N = lambda.size();
  if (N < 3) return N;
  const double lambda2 = lambda[1];
  for (Index alpha = 3; alpha <= N; ++alpha)
    if (lambda[alpha - 1] / lambda2 < threshold) return alpha;
  return N;
}

Index m_hat(const Matrix& eta, double eps_dm, double threshold) {
  return m_hat_from_spectrum(solve_basis(build_kernel(eta, eps_dm), 1).lambda,
                             threshold);
}

std::vector<double> default_eps_grid(const Matrix& eta) {
  Matrix d2 = pairwise_sq_dists(eta);
  const Index N = eta.cols();
  if (N < 2) throw DataError("default_eps_grid: need at least 2 points");
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(N * (N - 1) / 2));
  for (Index i = 0; i < N; ++i)
    for (Index j = i + 1; j < N; ++j) dists.push_back(std::sqrt(d2(i, j)));
  std::sort(dists.begin(), dists.end());
  double med = dists[dists.size() / 2];
  if (!(med > 0.0)) throw DataError("default_eps_grid: degenerate ensemble");

  constexpr int kPoints = 24;
  const double lo = 0.1 * med * med;
  const double hi = 100.0 * med * med;
  std::vector<double> grid(kPoints);
  for (int k = 0; k < kPoints; ++k)
    grid[static_cast<std::size_t>(k)] =
        lo * std::pow(hi / lo, static_cast<double>(k) / (kPoints - 1));
  return grid;
}

std::size_t select_index_from_scan(const std::vector<EpsScanRow>& rows) {
  if (rows.size() < 2)
    throw NumericalError("select_eps_m: grid too short for a plateau");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].mhat > rows[i - 1].mhat)
      throw NumericalError(
          "select_eps_m: m_hat not non-increasing over the grid (eps " +
          std::to_string(rows[i - 1].eps) + " -> " +
          std::to_string(rows[i - 1].mhat) + ", eps " +
          std::to_string(rows[i].eps) + " -> " + std::to_string(rows[i].mhat) +
          "); the scale scan is unreliable on this ensemble");

  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mhat >= rows[i - 1].mhat) continue;  // needs a strict drop
    bool plateau = true;
    std::size_t in_window = 0;
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      if (rows[j].eps <= 1.5 * rows[i].eps) {
        ++in_window;
        if (rows[j].mhat != rows[i].mhat) {
          plateau = false;
          break;
        }
      } else {
        break;
      }
    }
    if (plateau && in_window > 0) return i;
  }
  throw NumericalError(
      "select_eps_m: no stable plateau found; widen the eps grid");
}

EpsSelection select_eps_m(const Matrix& eta, const std::vector<double>& grid,
                          double threshold) {
  if (grid.empty()) throw ConfigError("select_eps_m: empty grid");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());

  EpsSelection sel;
  for (double eps : sorted) {
    DiffusionBasis basis;
    try {
      basis = solve_basis(build_kernel(eta, eps), 1);
    } catch (const NumericalError&) {
      // Kernel saturated; larger eps values only get worse, so stop here.
      break;
    }
    EpsScanRow row;
    row.eps = eps;
    row.mhat = m_hat_from_spectrum(basis.lambda, threshold);
    row.lambda2 = basis.lambda[1];
    row.lambda_mhat = basis.lambda[row.mhat - 1];
    sel.rows.push_back(row);
  }

  std::size_t pick = select_index_from_scan(sel.rows);
  sel.eps_opt = sel.rows[pick].eps;
  sel.m_opt = sel.rows[pick].mhat;
  return sel;
}

Vector chain_invariant_measure(const DiffusionKernel& kernel) {
  return kernel.b / kernel.b.sum();
}

}  // namespace plom
