#include "plom/pca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "plom/errors.hpp"

namespace plom {
namespace {

constexpr double kEigenvalueFloor = 1e-12;  // relative to the largest one

// Fixes the sign ambiguity of an eigenvector: the entry of largest magnitude
// (lowest index on ties) is made positive.
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

}  // namespace

PcaModel fit_pca(const RawDataset& scaled, double eps_tol) {
  const Matrix& x = scaled.points;
  const Index n = x.rows();
  const Index N = x.cols();
  if (N < 2) throw DataError("fit_pca: need at least 2 realizations");
  if (!(eps_tol > 0.0 && eps_tol < 1.0))
    throw ConfigError("fit_pca: eps_tol must lie in (0, 1)");

  PcaModel model;
  model.eps_tol = eps_tol;
  model.mean = x.rowwise().mean();
  Matrix xc = x.colwise() - model.mean;

  // Full spectrum of the covariance.  When n > N the N x N Gram matrix has
  // the same nonzero eigenvalues and is cheaper to diagonalize.
  Vector lambda;
  Matrix vectors;  // n x k candidate directions, descending eigenvalue order
  double trace = 0.0;
  if (n <= N) {
    Matrix cov = (xc * xc.transpose()) / static_cast<double>(N - 1);
    trace = cov.trace();
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (es.info() != Eigen::Success)
      throw NumericalError("fit_pca: eigendecomposition failed");
    lambda = es.eigenvalues().reverse();
    vectors = es.eigenvectors().rowwise().reverse();
  } else {
    Matrix gram = (xc.transpose() * xc) / static_cast<double>(N - 1);
    trace = gram.trace();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.info() != Eigen::Success)
      throw NumericalError("fit_pca: eigendecomposition failed");
    lambda = es.eigenvalues().reverse();
    Matrix coef = es.eigenvectors().rowwise().reverse();
    vectors.resize(n, N);
    for (Index k = 0; k < N; ++k) {
      if (lambda[k] <= 0.0) {
        vectors.col(k).setZero();
        continue;
      }
      vectors.col(k) =
          xc * coef.col(k) / std::sqrt(lambda[k] * static_cast<double>(N - 1));
    }
  }
  if (!(trace > 0.0))
    throw DataError("fit_pca: data has zero total variance");

  const double floor = kEigenvalueFloor * std::max(lambda[0], 0.0);
  Index usable = 0;
  while (usable < lambda.size() && lambda[usable] > floor &&
         lambda[usable] > 0.0)
    ++usable;
  // Centered data has rank at most N-1; the cap keeps nu < N regardless of
  // how the numerical tail came out.
  usable = std::min(usable, N - 1);
  if (usable == 0) throw DataError("fit_pca: no usable eigenvalues");

  double partial = 0.0;
  Index nu = 0;
  double err = 1.0;
  for (Index k = 0; k < usable; ++k) {
    partial += lambda[k];
    err = std::max(0.0, 1.0 - partial / trace);
    if (err <= eps_tol) {
      nu = k + 1;
      break;
    }
  }
  if (nu == 0)
    throw DataError("fit_pca: eps_tol " + std::to_string(eps_tol) +
                    " unreachable with nu < N (best err " +
                    std::to_string(err) + " at nu " + std::to_string(usable) +
                    ")");

  model.nu = nu;
  model.err_pca = err;
  model.eigenvalues = lambda.head(nu);
  model.eigenvectors = vectors.leftCols(nu);
  for (Index k = 0; k < nu; ++k) fix_sign(model.eigenvectors.col(k));
  return model;
}

NormalizedMatrix normalize(const PcaModel& model, const RawDataset& scaled) {
  if (scaled.n() != model.mean.size())
    throw DataError("normalize: feature count mismatch");
  NormalizedMatrix out;
  out.eta = model.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
            (model.eigenvectors.transpose() *
             (scaled.points.colwise() - model.mean));
  return out;
}

Matrix reconstruct(const PcaModel& model, const Matrix& eta) {
  if (eta.rows() != model.nu)
    throw DataError("reconstruct: eta has " + std::to_string(eta.rows()) +
                    " rows, model expects " + std::to_string(model.nu));
  return (model.eigenvectors *
          (model.eigenvalues.cwiseSqrt().asDiagonal() * eta))
             .colwise() +
         model.mean;
}

std::string to_json_string(const PcaModel& model) {
  nlohmann::json j;
  j["nu"] = model.nu;
  j["err_pca"] = model.err_pca;
  j["eps_tol"] = model.eps_tol;
  j["mean"] = std::vector<double>(model.mean.begin(), model.mean.end());
  j["eigenvalues"] =
      std::vector<double>(model.eigenvalues.begin(), model.eigenvalues.end());
  std::vector<double> evs;
  evs.reserve(static_cast<std::size_t>(model.eigenvectors.size()));
  for (Index i = 0; i < model.eigenvectors.rows(); ++i)  // row-major flatten
    for (Index k = 0; k < model.eigenvectors.cols(); ++k)
      evs.push_back(model.eigenvectors(i, k));
  j["eigenvectors"] = evs;
  return j.dump(2);
}

PcaModel pca_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("pca model: invalid JSON: ") + e.what());
  }
  for (const char* key :
       {"nu", "err_pca", "eps_tol", "mean", "eigenvalues", "eigenvectors"}) {
    if (!j.contains(key))
      throw DataError(std::string("pca model: missing key '") + key + "'");
  }
  PcaModel model;
  model.nu = j["nu"].get<Index>();
  model.err_pca = j["err_pca"].get<double>();
  model.eps_tol = j["eps_tol"].get<double>();
  auto mean = j["mean"].get<std::vector<double>>();
  auto lam = j["eigenvalues"].get<std::vector<double>>();
  auto evs = j["eigenvectors"].get<std::vector<double>>();
  const Index n = static_cast<Index>(mean.size());
  if (static_cast<Index>(lam.size()) != model.nu ||
      static_cast<Index>(evs.size()) != n * model.nu)
    throw DataError("pca model: inconsistent dimensions");
  model.mean = Eigen::Map<const Vector>(mean.data(), n);
  model.eigenvalues = Eigen::Map<const Vector>(lam.data(), model.nu);
  model.eigenvectors.resize(n, model.nu);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < model.nu; ++k)
      model.eigenvectors(i, k) = evs[static_cast<std::size_t>(i * model.nu + k)];
  return model;
}

}  // namespace plom
