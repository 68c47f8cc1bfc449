#include "plom/kde.hpp"

#include <cmath>

#include "plom/errors.hpp"

namespace plom {
namespace {

// Relative log-weights below this are flushed to exact zero; exp() would
// underflow just below it anyway.
constexpr double kLogFlush = -700.0;

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)

// log sum exp with max shift; exponents holds e_j, returns (shift, sum).
std::pair<double, double> shifted_exp_sum(const Eigen::ArrayXd& exponents) {
  double shift = exponents.maxCoeff();
  double sum = 0.0;
  for (Index j = 0; j < exponents.size(); ++j) {
    double e = exponents[j] - shift;
    if (e >= kLogFlush) sum += std::exp(e);
  }
  return {shift, sum};
}

}  // namespace

Bandwidths silverman_bandwidths(Index N, Index nu) {
  if (N < 1 || nu < 1)
    throw ConfigError("silverman_bandwidths: need N >= 1, nu >= 1");
  Bandwidths bw;
  double Nd = static_cast<double>(N);
  double nud = static_cast<double>(nu);
  bw.s = std::pow(4.0 / (Nd * (nud + 2.0)), 1.0 / (nud + 4.0));
  bw.s_hat = bw.s / std::sqrt(bw.s * bw.s + (Nd - 1.0) / Nd);
  return bw;
}

KdeModel::KdeModel(Matrix eta_d) : eta_d_(std::move(eta_d)) {
  if (eta_d_.size() == 0) throw DataError("KdeModel: empty ensemble");
  bw_ = silverman_bandwidths(eta_d_.cols(), eta_d_.rows());
  centers_ = bw_.ratio() * eta_d_;
  half_sq_ = 0.5 * centers_.colwise().squaredNorm().transpose();
}

double KdeModel::potential(const Vector& u) const {
  if (u.size() != nu()) throw DataError("KdeModel: dimension mismatch");
  Eigen::ArrayXd e =
      (centers_.colwise() - u).colwise().squaredNorm().transpose().array() /
      (-2.0 * bw_.s_hat * bw_.s_hat);
  auto [shift, sum] = shifted_exp_sum(e);
  return std::log(static_cast<double>(N())) - shift - std::log(sum);
}

double KdeModel::matrix_potential(const Matrix& u) const {
  double total = 0.0;
  for (Index l = 0; l < u.cols(); ++l) total += potential(u.col(l));
  return total;
}

double KdeModel::log_pdf(const Vector& eta) const {
  return -static_cast<double>(nu()) * (kLogSqrt2Pi + std::log(bw_.s_hat)) -
         potential(eta);
}

double KdeModel::pdf(const Vector& eta) const { return std::exp(log_pdf(eta)); }

double KdeModel::matrix_log_pdf(const Matrix& eta) const {
  double total = 0.0;
  for (Index l = 0; l < eta.cols(); ++l) total += log_pdf(eta.col(l));
  return total;
}

Vector KdeModel::drift_col(const Vector& u) const {
  if (u.size() != nu()) throw DataError("KdeModel: dimension mismatch");
  const double inv_var = 1.0 / (bw_.s_hat * bw_.s_hat);
  Eigen::ArrayXd e =
      (centers_.colwise() - u).colwise().squaredNorm().transpose().array() *
      (-0.5 * inv_var);
  double shift = e.maxCoeff();
  double wsum = 0.0;
  Vector acc = Vector::Zero(nu());
  for (Index j = 0; j < N(); ++j) {
    double el = e[j] - shift;
    if (el < kLogFlush) continue;
    double w = std::exp(el);
    wsum += w;
    acc += w * centers_.col(j);
  }
  return (acc / wsum - u) * inv_var;
}

Matrix KdeModel::drift(const Matrix& u) const {
  if (u.rows() != nu()) throw DataError("KdeModel: dimension mismatch");
  const double inv_var = 1.0 / (bw_.s_hat * bw_.s_hat);
  // Per column the kernel weights are a softmax over j of
  //   -||c_j - u_l||^2 / (2 s_hat^2);
  // the ||u_l||^2 term is constant within a column and is dropped.
  Matrix logw = (centers_.transpose() * u).colwise() - half_sq_;
  logw *= inv_var;
  Matrix w(logw.rows(), logw.cols());
  for (Index l = 0; l < logw.cols(); ++l) {
    double shift = logw.col(l).maxCoeff();
    Eigen::ArrayXd sh = logw.col(l).array() - shift;
    w.col(l) = (sh < kLogFlush).select(0.0, sh.exp()).matrix();
  }
  Vector wsum = w.colwise().sum().transpose();
  Matrix out = centers_ * w;
  out.array().rowwise() /= wsum.transpose().array();
  return (out - u) * inv_var;
}

}  // namespace plom
