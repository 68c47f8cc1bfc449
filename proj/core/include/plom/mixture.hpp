#pragma once

#include <cstdint>
#include <vector>

#include "plom/diffusion.hpp"
#include "plom/rng.hpp"
#include "plom/types.hpp"

namespace plom {

// Enumeration over all N^N column resamplings j = (j_1 .. j_N) of the
// ensemble, with j_N cycling fastest.  Exact but exponential: refuse beyond
// the cap (default 6, hard limit 8).
inline constexpr Index kDefaultEnumerationCap = 6;
inline constexpr Index kHardEnumerationCap = 8;

std::uint64_t enumeration_size(Index N);
void flat_to_digits(Index N, std::uint64_t flat, std::vector<Index>& digits);

// Exact finite mixture carried by the reduced frame: component j has weight
// p_j proportional to exp(-a_j / (2 s^2)) with a_j = <I - G, M(j)>_F >= 0,
// shared covariance C = s_hat^2 (g^T g)^-1 per row of z, and mean rows
// (s_hat/s) eta(j) a.  At m = N every a_j is zero and the weights are
// uniform 1/N^N.
struct MixtureModel {
  Index N = 0, nu = 0, m = 0;
  double s = 0.0, s_hat = 0.0;
  Matrix eta_d;  // nu x N
  Matrix g, a, G;
  Matrix S;           // eta^T eta Gram, cached
  Matrix cov;         // m x m
  Matrix cov_chol;    // lower factor of cov
  Matrix cov_inv;
  double cov_logdet = 0.0;
  Vector a_vals;      // N^N
  Vector log_gamma;   // -a_j / (2 s^2)
  Vector log_weight;  // normalized

  Matrix mean_z(std::uint64_t flat) const;  // nu x m
};

MixtureModel enumerate_mixture(const Matrix& eta, const DiffusionBasis& reduced,
                               Index cap = kDefaultEnumerationCap);

double mixture_log_pdf(const MixtureModel& model, const Matrix& z);

struct MixtureMoments {
  Matrix mean;            // nu x N, of the lifted matrix z g^T
  double second_moment;   // E ||z g^T||_F^2
};

MixtureMoments closed_form_moments(const MixtureModel& model);

// Normalized concentration distance E||z g^T - eta||^2 / ||eta||^2 by exact
// summation over components.
double exact_dsq(const MixtureModel& model);

// Projected scatter sum_j p_j ||eta G - (s_hat/s) eta(j) G||^2 / ||eta||^2.
double exact_hd(const MixtureModel& model);

// Uniform-weight closed sums over all N^N resamplings; the three gaps are
// max-abs deviations from 0, (||eta||^2/N) I and (s_hat/s)^2 (||eta||^2/N) I.
struct SumIdentityReport {
  double eta_gap = 0.0;
  double m_gap = 0.0;
  double b_gap = 0.0;
};

SumIdentityReport verify_sum_identities(const Matrix& eta,
                                        Index cap = kDefaultEnumerationCap);

// Direct draws from the mixture; cumulative weights are built once.
class MixtureSampler {
 public:
  explicit MixtureSampler(const MixtureModel& model);
  Matrix draw(RngStream& rng) const;  // nu x m

 private:
  const MixtureModel& model_;
  std::vector<double> cum_;
};

}  // namespace plom
