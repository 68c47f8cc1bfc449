#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "plom/diffusion.hpp"
#include "plom/sampler.hpp"
#include "plom/types.hpp"

namespace plom {

// Projection residual of the training ensemble on the order-m subspace,
//   eps_d(m) = ||eta_d - eta_d G_m|| / ||eta_d||,
// evaluated as eps_d^2 = sum_{alpha>m} ||eta_d q_alpha||^2 / ||eta_d||^2 with
// q_alpha an orthonormal basis of span(psi_1..psi_m).  The tail sum has only
// positive terms, is non-increasing in m by construction and hits exact zero
// at m = N.
double eps_d(const Matrix& eta, const DiffusionBasis& basis, Index m);
std::vector<double> eps_d_curve(const Matrix& eta, const DiffusionBasis& basis);

// f_d(m) = m s_hat^2 / (N-1) + eps_d(m)^2, the part of the squared distance
// that survives averaging; its argmin selects the reduction order.
double f_d(Index N, Index nu, double eps_d_value, Index m);

// g_bar(m) = 1 + (s_hat^2/s^2)(m/N) - eps_d(m)^2, strictly positive.
double g_bar(Index N, Index nu, double eps_d_value, Index m);

struct DsimPoint {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of E ||eta_ar - eta_d||^2 / ||eta_d||^2 over the
// retained samples, with the standard error of the mean.
DsimPoint d_sim(const LearnedSet& learned, const Matrix& eta);

// Distance of the maximum-entropy (no manifold) generator, 1 + m/(N-1).
double d_maxent(Index N, Index m);

// Closed-form approximation f_d(m) + g_bar(m) exp(-eps_d(m)^2 ||eta_d||^2 /
// (2 s^2)); the exponential is flushed to exact zero below e^-700.
double d_app(const Matrix& eta, const DiffusionBasis& basis, Index m);
double d_app_value(Index N, Index nu, double eps_d_value, double eta_sq_norm,
                   Index m);

// log of the concentration factor of the MaxEnt comparison measure,
// -(nu (N-m) / 2) ln(1 + sigma^2 / s^2) with sigma^2 = 1 - 1/N.
double log_gamma_c(Index N, Index nu, Index m);

// Entropy of the comparison measure relative to the training measure,
// nu (ln(2 pi e) + ln(1 - 1/N)) / (2 ln N).
double entropy_ratio(Index N, Index nu);

struct ConcentrationCurves {
  std::vector<Index> m_values;
  std::vector<double> eps_d;
  std::vector<double> f_d;
  std::vector<double> g_bar;
  std::vector<double> d_sim;         // NaN where no Monte Carlo run exists
  std::vector<double> d_sim_stderr;  // NaN alongside
  std::vector<double> d_maxent;      // NaN below m_opt
  std::vector<double> d_app;         // NaN below m_opt
  Index m_opt = 0;
};

struct MSelection {
  Index m_opt = 0;
  // eps_d(m*)^2 < s_hat^2/(N-1) < eps_d(m*-1)^2, the bracket that makes the
  // f_d minimum provably unique; real data may miss it and still be fine.
  bool sandwich_holds = false;
};

MSelection select_m_by_fd(const ConcentrationCurves& curves);

// Full sweep over m = 1..N; sim_points supplies Monte Carlo distances for the
// orders that were actually sampled.
ConcentrationCurves build_curves(const Matrix& eta, const DiffusionBasis& basis,
                                 const std::map<Index, DsimPoint>& sim_points);

// CSV columns: m, eps_d, f_d, g_bar, d_sim, d_sim_stderr, d_maxent, d_app.
// NaN entries become empty cells and come back as NaN.
void save_curves_csv(const ConcentrationCurves& curves,
                     const std::filesystem::path& path);
ConcentrationCurves load_curves_csv(const std::filesystem::path& path);

}  // namespace plom
