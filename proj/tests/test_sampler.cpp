#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include <plom/diagnostics.hpp>
#include <plom/errors.hpp>
#include <plom/sampler.hpp>

#include "support/synthetic.hpp"

using namespace plom;

namespace {

Matrix whitened_cloud(Index nu, Index N, std::uint64_t seed) {
  Matrix x = testing::gaussian_cloud(nu, N, seed);
  x.colwise() -= x.rowwise().mean().eval();
  Matrix cov = (x * x.transpose()) / static_cast<double>(N - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  return es.operatorInverseSqrt() * x;
}

// Single center at the origin: s_hat = 1, the potential is exactly z^2/2 and
// the reduced frame is the identity on one mode.
struct HarmonicWell {
  Matrix eta;
  KdeModel kde;
  DiffusionBasis red;
  HarmonicWell()
      : eta(Matrix::Zero(1, 1)),
        kde(eta),
        red(reduce(solve_basis(build_kernel(eta, 1.0), 1), 1)) {}
};

}  // namespace

TEST_CASE("schedule resolution follows the documented arithmetic") {
  IsdeConfig config;
  config.f0 = 1.5;
  IsdeSchedule sched = resolve_schedule(config, 0.5);
  CHECK(sched.dr == doctest::Approx(2.0 * std::numbers::pi * 0.5 / 20.0)
                        .epsilon(1e-15));
  // ceil(2 ln 1000 / (1.5 * 0.15708)) = 59, spacing = ceil(59 / 4).
  CHECK(sched.burn_in == 59);
  CHECK(sched.spacing == 15);

  config.dr = 0.1;
  config.burn_in = 7;
  config.spacing = 3;
  sched = resolve_schedule(config, 0.5);
  CHECK(sched.dr == 0.1);
  CHECK(sched.burn_in == 7);
  CHECK(sched.spacing == 3);

  // Tiny burn-in still spaces at least one step apart.
  config.burn_in = 0;
  config.spacing = -1;
  CHECK(resolve_schedule(config, 0.5).spacing == 1);
}

TEST_CASE("schedule resolution rejects inconsistent requests") {
  IsdeConfig config;
  config.f0 = 0.0;
  CHECK_THROWS_WITH_AS(resolve_schedule(config, 0.5),
                       doctest::Contains("burn-in"), ConfigError);
  config.burn_in = 10;  // explicit burn-in makes f0 = 0 fine
  CHECK_NOTHROW(resolve_schedule(config, 0.5));

  config.spacing = 0;
  CHECK_THROWS_AS(resolve_schedule(config, 0.5), ConfigError);
  config.spacing = -1;

  config.f0 = -1.0;
  CHECK_THROWS_AS(resolve_schedule(config, 0.5), ConfigError);
  config.f0 = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(resolve_schedule(config, 0.5), ConfigError);
  config.f0 = 1.5;
  config.dr = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(resolve_schedule(config, 0.5), ConfigError);
}

TEST_CASE("chain initialization projects data and a fresh velocity draw") {
  Matrix eta = whitened_cloud(2, 10, 91);
  DiffusionBasis red = reduce(solve_basis(build_kernel(eta, 2.0), 1), 4);

  RngStream rng(92, 0);
  ChainState state = init_chain(eta, red, rng);
  CHECK((state.z - eta * red.a).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(state.r == 0.0);

  RngStream replay(92, 0);
  Matrix v0(2, 10);
  replay.fill_gaussian(v0);
  CHECK((state.y - v0 * red.a).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("noise-free dynamics at zero damping conserve energy") {
  HarmonicWell well;
  ChainState state;
  state.z = Matrix::Constant(1, 1, 1.0);
  state.y = Matrix::Zero(1, 1);

  const double dr = 0.05;
  auto energy = [&](const ChainState& s) {
    return 0.5 * s.y.squaredNorm() + well.kde.matrix_potential(s.z);
  };
  const double e0 = energy(state);
  double max_dev = 0.0;
  for (int k = 0; k < 20000; ++k) {
    step(state, well.kde, well.red, 0.0, dr, nullptr);
    max_dev = std::max(max_dev, std::abs(energy(state) - e0));
  }
  // Verlet keeps a bounded energy oscillation of order dr^2, no drift.
  CHECK(max_dev < 1e-3 * std::max(1.0, std::abs(e0)));
  CHECK(state.r == doctest::Approx(20000 * dr));
}

TEST_CASE("damping without noise contracts to the well bottom") {
  HarmonicWell well;
  ChainState state;
  state.z = Matrix::Constant(1, 1, 1.0);
  state.y = Matrix::Zero(1, 1);
  for (int k = 0; k < 2400; ++k) {
    step(state, well.kde, well.red, 1.0, 0.05, nullptr);
  }
  // The underdamped envelope dies like exp(-f0 r / 4) = exp(-30) here.
  CHECK(std::abs(state.z(0, 0)) < 1e-5);
  CHECK(std::abs(state.y(0, 0)) < 1e-5);
}

TEST_CASE("lifted drift is the frame-weighted gradient of the potential") {
  Matrix eta = whitened_cloud(2, 8, 93);
  KdeModel kde(eta);
  DiffusionBasis red = reduce(solve_basis(build_kernel(eta, 2.0), 1), 3);
  Matrix gram = red.g.transpose() * red.g;

  RngStream rng(94, 0);
  Matrix z(2, 3);
  rng.fill_gaussian(z);
  Matrix lhs = -reduced_drift(kde, red, z) * gram;

  // Central differences of Phi(z) = V(z g^T) entry by entry.
  const double h = 1e-5;
  auto phi = [&](const Matrix& zz) {
    return kde.matrix_potential(zz * red.g.transpose());
  };
  for (Index i = 0; i < 2; ++i) {
    for (Index k = 0; k < 3; ++k) {
      Matrix up = z, dn = z;
      up(i, k) += h;
      dn(i, k) -= h;
      const double grad = (phi(up) - phi(dn)) / (2.0 * h);
      CHECK(lhs(i, k) == doctest::Approx(grad).epsilon(1e-5));
    }
  }
}

TEST_CASE("full-order reduction reproduces the unreduced dynamics") {
  const Index nu = 2, N = 6;
  Matrix eta = whitened_cloud(nu, N, 95);
  KdeModel kde(eta);
  DiffusionBasis red = reduce(solve_basis(build_kernel(eta, 2.0), 1), N);

  // At m = N the projector is the identity, so the lifted chain must track a
  // plain full-space integration consuming the same noise.
  CHECK((red.G - Matrix::Identity(N, N)).cwiseAbs().maxCoeff() < 1e-10);

  const double f0 = 1.5, dr = 0.1;
  const double b = f0 * dr / 4.0;

  RngStream rng_red(96, 0);
  ChainState state = init_chain(eta, red, rng_red);

  RngStream rng_full(96, 0);
  Matrix h = eta;
  Matrix v(nu, N);
  rng_full.fill_gaussian(v);

  for (int k = 0; k < 50; ++k) {
    step(state, kde, red, f0, dr, &rng_red);

    h += 0.5 * dr * v;
    Matrix drift = kde.drift(h);
    v *= (1.0 - b) / (1.0 + b);
    v += (dr / (1.0 + b)) * drift;
    Matrix dw(nu, N);
    rng_full.fill_gaussian(dw);
    v += (std::sqrt(f0 * dr) / (1.0 + b)) * dw;
    h += 0.5 * dr * v;
  }
  CHECK((state.z * red.g.transpose() - h).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("generated samples stay inside the reduced subspace") {
  Matrix eta = whitened_cloud(3, 12, 97);
  KdeModel kde(eta);
  DiffusionBasis red = reduce(solve_basis(build_kernel(eta, 2.5), 1), 4);

  IsdeConfig config;
  config.n_mc = 6;
  config.n_chains = 2;
  config.seed = 5;
  LearnedSet learned = generate(eta, kde, red, config);
  REQUIRE(learned.z_samples.size() == 6);
  REQUIRE(learned.eta_samples.size() == 6);
  const Matrix P = Matrix::Identity(12, 12) - red.G;
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(learned.eta_samples[i].rows() == 3);
    CHECK(learned.eta_samples[i].cols() == 12);
    // eta_ar = z g^T lies in the range of G by construction.
    CHECK((learned.eta_samples[i] * P).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((learned.z_samples[i] * red.g.transpose() - learned.eta_samples[i])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("generation is bitwise deterministic and thread-invariant") {
  Matrix eta = whitened_cloud(2, 10, 98);
  KdeModel kde(eta);
  DiffusionBasis red = reduce(solve_basis(build_kernel(eta, 2.0), 1), 3);

  IsdeConfig config;
  config.n_mc = 17;  // odd split over 5 chains: 4,4,3,3,3
  config.n_chains = 5;
  config.seed = 1234;

  LearnedSet a = generate(eta, kde, red, config);
  LearnedSet b = generate(eta, kde, red, config);
  config.n_threads = 3;
  LearnedSet c = generate(eta, kde, red, config);

  REQUIRE(a.z_samples.size() == 17);
  REQUIRE(b.z_samples.size() == 17);
  REQUIRE(c.z_samples.size() == 17);
  for (std::size_t i = 0; i < 17; ++i) {
    CHECK(a.z_samples[i] == b.z_samples[i]);
    CHECK(a.z_samples[i] == c.z_samples[i]);
  }

  // A different seed moves every retained state.
  config.n_threads = 1;
  config.seed = 4321;
  LearnedSet d = generate(eta, kde, red, config);
  CHECK(d.z_samples[0] != a.z_samples[0]);
}

TEST_CASE("long harmonic chains reach the known stationary law") {
  HarmonicWell well;
  IsdeConfig config;
  config.f0 = 1.5;
  config.dr = 0.2;
  config.spacing = 30;
  config.n_mc = 1500;
  config.n_chains = 6;
  config.seed = 99;

  LearnedSet learned = generate(well.eta, well.kde, well.red, config);
  double zm = 0.0, z2 = 0.0;
  for (const Matrix& z : learned.z_samples) {
    zm += z(0, 0);
    z2 += z(0, 0) * z(0, 0);
  }
  const int n = static_cast<int>(learned.z_samples.size());
  zm /= n;
  z2 /= n;
  // Stationary position is standard normal up to O(dr^2) discretization
  // bias; five standard errors on 1500 near-independent retained states.
  CHECK(std::abs(zm) < 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(z2 - zm * zm - 1.0) < 5.0 * std::sqrt(2.0 / n) + 0.02);
}

TEST_CASE("a reckless step size is reported as divergence") {
  Matrix eta = whitened_cloud(1, 4, 100);
  KdeModel kde(eta);
  DiffusionBasis red = reduce(solve_basis(build_kernel(eta, 1.0), 1), 2);

  // The state roughly cubes its exponent every few steps at this dr; the
  // burn-in is long enough to push any orbit past double range.
  IsdeConfig config;
  config.dr = 1000.0;
  config.burn_in = 400;
  config.spacing = 1;
  config.n_mc = 3;
  config.n_chains = 1;
  CHECK_THROWS_WITH_AS(generate(eta, kde, red, config),
                       doctest::Contains("diverged"), NumericalError);
}

TEST_CASE("generation validates its configuration") {
  Matrix eta = whitened_cloud(2, 6, 101);
  KdeModel kde(eta);
  DiffusionBasis basis = solve_basis(build_kernel(eta, 2.0), 1);
  DiffusionBasis red = reduce(basis, 2);

  IsdeConfig config;
  CHECK_THROWS_AS(generate(eta, kde, red, config), ConfigError);  // n_mc = 0
  config.n_mc = 4;
  config.n_chains = 0;
  CHECK_THROWS_AS(generate(eta, kde, red, config), ConfigError);
  config.n_chains = 2;
  CHECK_THROWS_AS(generate(eta, kde, basis, config), ConfigError);  // m = 0

  Matrix other = whitened_cloud(2, 5, 102);
  CHECK_THROWS_AS(generate(other, kde, red, config), DataError);
}

TEST_CASE("physical reconstruction inverts the whole normalization chain") {
  RawDataset raw = testing::sheet(12, 103);
  ScalingSpec scaling = fit_scaling(raw, ScalingMode::kMinMax);
  RawDataset scaled;
  scaled.points = apply_scaling(scaling, raw.points);
  PcaModel pca = fit_pca(scaled, 1e-6);
  NormalizedMatrix eta = normalize(pca, scaled);
  KdeModel kde(eta);
  DiffusionBasis red =
      reduce(solve_basis(build_kernel(eta.eta, 3.0), 1), eta.N());

  IsdeConfig config;
  config.n_mc = 3;
  config.n_chains = 1;
  config.seed = 17;
  LearnedSet learned = generate(eta.eta, kde, red, config);
  LearnedArchive archive = reconstruct_learned(learned, pca, scaling, red);

  CHECK(archive.samples.rows() == raw.n());
  CHECK(archive.samples.cols() == 3 * 12);
  CHECK(archive.meta.N == 12);
  CHECK(archive.meta.nu == eta.nu());
  CHECK(archive.meta.m == red.m);
  CHECK(archive.meta.eps_dm == 3.0);
  CHECK(archive.meta.seed == 17);
  CHECK(archive.meta.n_mc == 36);
  CHECK(archive.meta.dr == learned.schedule.dr);

  // First block must equal the manual map of the first sample.
  Matrix manual =
      invert_scaling(scaling, reconstruct(pca, learned.eta_samples[0]));
  CHECK((archive.samples.leftCols(12) - manual).cwiseAbs().maxCoeff() == 0.0);

  LearnedSet empty;
  CHECK_THROWS_AS(reconstruct_learned(empty, pca, scaling, red), DataError);
}
