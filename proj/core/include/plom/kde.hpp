#pragma once

#include "plom/pca.hpp"
#include "plom/types.hpp"

namespace plom {

/// Silverman-style bandwidth pair for a standard-normal product kernel on
/// whitened data:
///   s     = (4 / (N (nu+2)))^(1/(nu+4))
///   s_hat = s / sqrt(s^2 + (N-1)/N)
/// s_hat is the width that keeps the smoothed ensemble at unit variance when
/// the centers are shrunk by s_hat/s.
struct Bandwidths {
  double s = 0.0;
  double s_hat = 0.0;
  double ratio() const { return s_hat / s; }
};

Bandwidths silverman_bandwidths(Index N, Index nu);

/// Gaussian kernel density over the columns of a whitened ensemble eta_d
/// (nu x N).  Kernels sit at (s_hat/s) eta_d^j with common width s_hat.
/// potential() is the negative log of the unnormalized mixture and drift()
/// its negative gradient, evaluated column-wise; both are shift-stabilized
/// so nothing overflows for arguments up to ||u|| ~ 1e6.
class KdeModel {
 public:
  explicit KdeModel(Matrix eta_d);
  explicit KdeModel(const NormalizedMatrix& eta) : KdeModel(eta.eta) {}

  double log_pdf(const Vector& eta) const;
  double pdf(const Vector& eta) const;

  // potential(u) + log_pdf(u) == -nu * log(sqrt(2 pi) s_hat) identically.
  double potential(const Vector& u) const;
  double matrix_potential(const Matrix& u) const;  // column sum

  Vector drift_col(const Vector& u) const;
  Matrix drift(const Matrix& u) const;

  double matrix_log_pdf(const Matrix& eta) const;  // column sum

  Index N() const { return eta_d_.cols(); }
  Index nu() const { return eta_d_.rows(); }
  double s() const { return bw_.s; }
  double s_hat() const { return bw_.s_hat; }
  double ratio() const { return bw_.ratio(); }
  const Matrix& eta() const { return eta_d_; }
  const Matrix& centers() const { return centers_; }

 private:
  Matrix eta_d_;    // nu x N ensemble the model was built on
  Matrix centers_;  // (s_hat/s) eta_d
  Vector half_sq_;  // ||center_j||^2 / 2, cached for the matrix drift
  Bandwidths bw_;
};

}  // namespace plom
