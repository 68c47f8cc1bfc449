#include "plom/mixture.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "plom/errors.hpp"
#include "plom/kde.hpp"

namespace plom {
namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void check_cap(Index N, Index cap) {
  if (cap > kHardEnumerationCap)
    throw ConfigError("enumeration cap " + std::to_string(cap) +
                      " exceeds the hard limit " +
                      std::to_string(kHardEnumerationCap));
  if (N > cap)
    throw ConfigError("enumeration over N^N needs N <= " + std::to_string(cap) +
                      ", got N = " + std::to_string(N));
}

// Advances the digit odometer; the last digit moves fastest.
bool next_digits(Index N, std::vector<Index>& d) {
  for (std::size_t pos = d.size(); pos-- > 0;) {
    if (++d[pos] < N) return true;
    d[pos] = 0;
  }
  return false;
}

double log_sum_exp(const Vector& v) {
  double shift = v.maxCoeff();
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) sum += std::exp(v[i] - shift);
  return shift + std::log(sum);
}

}  // namespace

std::uint64_t enumeration_size(Index N) {
  std::uint64_t size = 1;
  for (Index i = 0; i < N; ++i) size *= static_cast<std::uint64_t>(N);
  return size;
}

void flat_to_digits(Index N, std::uint64_t flat, std::vector<Index>& digits) {
  digits.assign(static_cast<std::size_t>(N), 0);
  for (std::size_t pos = static_cast<std::size_t>(N); pos-- > 0;) {
    digits[pos] = static_cast<Index>(flat % static_cast<std::uint64_t>(N));
    flat /= static_cast<std::uint64_t>(N);
  }
}

MixtureModel enumerate_mixture(const Matrix& eta, const DiffusionBasis& reduced,
                               Index cap) {
  const Index N = eta.cols();
  const Index nu = eta.rows();
  check_cap(N, cap);
  if (reduced.m < 1)
    throw ConfigError("enumerate_mixture: basis has not been reduced");
  if (reduced.G.rows() != N)
    throw DataError("enumerate_mixture: basis size does not match ensemble");

  MixtureModel model;
  model.N = N;
  model.nu = nu;
  model.m = reduced.m;
  Bandwidths bw = silverman_bandwidths(N, nu);
  model.s = bw.s;
  model.s_hat = bw.s_hat;
  model.eta_d = eta;
  model.g = reduced.g;
  model.a = reduced.a;
  model.G = reduced.G;
  model.S = eta.transpose() * eta;

  Matrix gram = reduced.g.transpose() * reduced.g;
  model.cov = bw.s_hat * bw.s_hat * gram.inverse();
  Eigen::LLT<Matrix> llt(model.cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("enumerate_mixture: component covariance not SPD");
  model.cov_chol = llt.matrixL();
  model.cov_inv = llt.solve(Matrix::Identity(model.m, model.m));
  model.cov_logdet = 0.0;
  for (Index k = 0; k < model.m; ++k)
    model.cov_logdet += 2.0 * std::log(model.cov_chol(k, k));

  const std::uint64_t count = enumeration_size(N);
  const Matrix P = Matrix::Identity(N, N) - model.G;
  model.a_vals.resize(static_cast<Index>(count));
  model.log_gamma.resize(static_cast<Index>(count));

  std::vector<Index> j(static_cast<std::size_t>(N), 0);
  const double inv_two_s2 = 1.0 / (2.0 * bw.s * bw.s);
  std::uint64_t flat = 0;
  do {
    double aj = 0.0;
    for (Index l = 0; l < N; ++l) {
      const Index jl = j[static_cast<std::size_t>(l)];
      for (Index lp = 0; lp < N; ++lp)
        aj += P(l, lp) * model.S(jl, j[static_cast<std::size_t>(lp)]);
    }
    aj = std::max(0.0, aj);
    model.a_vals[static_cast<Index>(flat)] = aj;
    model.log_gamma[static_cast<Index>(flat)] = -aj * inv_two_s2;
    ++flat;
  } while (next_digits(N, j));

  model.log_weight =
      (model.log_gamma.array() - log_sum_exp(model.log_gamma)).matrix();
  return model;
}

Matrix MixtureModel::mean_z(std::uint64_t flat) const {
  std::vector<Index> j;
  flat_to_digits(N, flat, j);
  Matrix picked(nu, N);
  for (Index l = 0; l < N; ++l)
    picked.col(l) = eta_d.col(j[static_cast<std::size_t>(l)]);
  return (s_hat / s) * picked * a;
}

double mixture_log_pdf(const MixtureModel& model, const Matrix& z) {
  if (z.rows() != model.nu || z.cols() != model.m)
    throw DataError("mixture_log_pdf: z must be nu x m");
  const std::uint64_t count = enumeration_size(model.N);
  const double row_const = -0.5 * static_cast<double>(model.m) * 2.0 *
                               kLogSqrt2Pi -
                           0.5 * model.cov_logdet;
  Vector terms(static_cast<Index>(count));
  for (std::uint64_t flat = 0; flat < count; ++flat) {
    Matrix delta = z - model.mean_z(flat);
    double quad = (delta * model.cov_inv).cwiseProduct(delta).sum();
    terms[static_cast<Index>(flat)] =
        model.log_weight[static_cast<Index>(flat)] +
        static_cast<double>(model.nu) * row_const - 0.5 * quad;
  }
  return log_sum_exp(terms);
}

MixtureMoments closed_form_moments(const MixtureModel& model) {
  const Index N = model.N;
  const double ratio = model.s_hat / model.s;
  const std::uint64_t count = enumeration_size(N);

  Matrix weighted_pick = Matrix::Zero(model.nu, N);
  double tr_sum = 0.0;
  std::vector<Index> j(static_cast<std::size_t>(N), 0);
  std::uint64_t flat = 0;
  Matrix picked(model.nu, N);
  do {
    const double p = std::exp(model.log_weight[static_cast<Index>(flat)]);
    for (Index l = 0; l < N; ++l)
      picked.col(l) = model.eta_d.col(j[static_cast<std::size_t>(l)]);
    weighted_pick += p * picked;
    double tr = 0.0;
    for (Index l = 0; l < N; ++l) {
      const Index jl = j[static_cast<std::size_t>(l)];
      for (Index lp = 0; lp < N; ++lp)
        tr += model.G(l, lp) * model.S(jl, j[static_cast<std::size_t>(lp)]);
    }
    tr_sum += p * tr;
    ++flat;
  } while (next_digits(N, j));
  (void)count;

  MixtureMoments moments;
  moments.mean = ratio * weighted_pick * model.G;
  moments.second_moment =
      static_cast<double>(model.nu) * model.s_hat * model.s_hat *
          static_cast<double>(model.m) +
      ratio * ratio * tr_sum;
  return moments;
}

namespace {

// Shared accumulation for exact_dsq / exact_hd: per resampling j,
//   trGM(j)  = <G, M(j)>_F      via S gathers,
//   cross(j) = <G, eta(j)^T eta>_F.
struct ConcentrationSums {
  double tr = 0.0;     // sum_j p_j trGM(j)
  double cross = 0.0;  // sum_j p_j cross(j)
};

ConcentrationSums weighted_gram_sums(const MixtureModel& model) {
  const Index N = model.N;
  ConcentrationSums out;
  std::vector<Index> j(static_cast<std::size_t>(N), 0);
  std::uint64_t flat = 0;
  do {
    const double p = std::exp(model.log_weight[static_cast<Index>(flat)]);
    double tr = 0.0, cross = 0.0;
    for (Index l = 0; l < N; ++l) {
      const Index jl = j[static_cast<std::size_t>(l)];
      for (Index lp = 0; lp < N; ++lp) {
        tr += model.G(l, lp) * model.S(jl, j[static_cast<std::size_t>(lp)]);
        cross += model.G(l, lp) * model.S(lp, jl);
      }
    }
    out.tr += p * tr;
    out.cross += p * cross;
    ++flat;
  } while (next_digits(N, j));
  return out;
}

}  // namespace

double exact_dsq(const MixtureModel& model) {
  const double ratio = model.s_hat / model.s;
  const double eta2 = model.S.trace();
  ConcentrationSums sums = weighted_gram_sums(model);
  return 1.0 +
         static_cast<double>(model.m) * model.s_hat * model.s_hat /
             static_cast<double>(model.N - 1) +
         (ratio * ratio * sums.tr - 2.0 * ratio * sums.cross) / eta2;
}

double exact_hd(const MixtureModel& model) {
  const double ratio = model.s_hat / model.s;
  const double eta2 = model.S.trace();
  const double c0 = (model.G.cwiseProduct(model.S)).sum();  // ||eta G||^2
  ConcentrationSums sums = weighted_gram_sums(model);
  return (c0 + ratio * ratio * sums.tr - 2.0 * ratio * sums.cross) / eta2;
}

SumIdentityReport verify_sum_identities(const Matrix& eta, Index cap) {
  const Index N = eta.cols();
  const Index nu = eta.rows();
  check_cap(N, cap);
  Bandwidths bw = silverman_bandwidths(N, nu);
  const double r2 = bw.ratio() * bw.ratio();
  const Matrix S = eta.transpose() * eta;
  const double eta2 = S.trace();

  Matrix sum_eta = Matrix::Zero(nu, N);
  Matrix sum_M = Matrix::Zero(N, N);
  Matrix sum_cross = Matrix::Zero(N, N);  // sum_j eta(j)^T eta
  std::vector<Index> j(static_cast<std::size_t>(N), 0);
  do {
    for (Index l = 0; l < N; ++l) {
      const Index jl = j[static_cast<std::size_t>(l)];
      sum_eta.col(l) += eta.col(jl);
      for (Index lp = 0; lp < N; ++lp) {
        sum_M(l, lp) += S(jl, j[static_cast<std::size_t>(lp)]);
      }
      sum_cross.row(l) += S.row(jl);
    }
  } while (next_digits(N, j));

  const double inv_count = 1.0 / static_cast<double>(enumeration_size(N));
  sum_eta *= inv_count;
  sum_M *= inv_count;
  sum_cross *= inv_count;
  Matrix sum_B = r2 * sum_M - 2.0 * bw.ratio() * sum_cross;

  SumIdentityReport report;
  report.eta_gap = sum_eta.cwiseAbs().maxCoeff();
  const Matrix target_m =
      (eta2 / static_cast<double>(N)) * Matrix::Identity(N, N);
  report.m_gap = (sum_M - target_m).cwiseAbs().maxCoeff();
  report.b_gap = (sum_B - r2 * target_m).cwiseAbs().maxCoeff();
  return report;
}

MixtureSampler::MixtureSampler(const MixtureModel& model) : model_(model) {
  const std::uint64_t count = enumeration_size(model.N);
  cum_.resize(count);
  double acc = 0.0;
  for (std::uint64_t i = 0; i < count; ++i) {
    acc += std::exp(model_.log_weight[static_cast<Index>(i)]);
    cum_[i] = acc;
  }
  cum_.back() = 1.0;  // guard against rounding in the tail
}

Matrix MixtureSampler::draw(RngStream& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  std::uint64_t flat =
      static_cast<std::uint64_t>(std::distance(cum_.begin(), it));
  if (flat >= cum_.size()) flat = cum_.size() - 1;

  Matrix xi(model_.nu, model_.m);
  rng.fill_gaussian(xi);
  return model_.mean_z(flat) + xi * model_.cov_chol.transpose();
}

}  // namespace plom
