#pragma once

#include <string>

#include "plom/dataset.hpp"
#include "plom/types.hpp"

namespace plom {

/// Truncated eigendecomposition of the empirical covariance (1/(N-1) divisor).
/// normalize() whitens: eta^j = diag(mu^-1/2) Phi^T (x^j - mean), so on the
/// training set the eta columns have exact zero mean and identity covariance.
struct PcaModel {
  Vector mean;          // n
  Vector eigenvalues;   // nu, strictly positive, non-increasing
  Matrix eigenvectors;  // n x nu, orthonormal columns
  Index nu = 0;
  double err_pca = 0.0;  // 1 - sum(retained) / trace, for the chosen nu
  double eps_tol = 0.0;
};

// Picks the smallest nu with err_pca(nu) <= eps_tol.  Eigenvalues below
// 1e-12 * mu_1 are never retained, and nu < N always holds.
PcaModel fit_pca(const RawDataset& scaled, double eps_tol);

struct NormalizedMatrix {
  Matrix eta;  // nu x N
  Index nu() const { return eta.rows(); }
  Index N() const { return eta.cols(); }
};

NormalizedMatrix normalize(const PcaModel& model, const RawDataset& scaled);
Matrix reconstruct(const PcaModel& model, const Matrix& eta);

std::string to_json_string(const PcaModel& model);
PcaModel pca_model_from_json(const std::string& text);

}  // namespace plom
