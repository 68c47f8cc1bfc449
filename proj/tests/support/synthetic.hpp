#pragma once

// Deterministic synthetic ensembles used across the test binaries.  Every
// generator takes an explicit seed and routes all randomness through
// RngStream, so expected values frozen into tests stay valid on any platform.

#include <cmath>
#include <numbers>

#include <plom/dataset.hpp>
#include <plom/rng.hpp>
#include <plom/types.hpp>

namespace plom::testing {

inline Matrix gaussian_cloud(Index n, Index N, std::uint64_t seed) {
  RngStream rng(seed, 0);
  Matrix x(n, N);
  rng.fill_gaussian(x);
  return x;
}

// Noisy closed curve in R^3: one turn of a helix-like loop whose third
// coordinate oscillates at twice the base frequency.  Intrinsically one
// dimensional, so the diffusion spectrum drops sharply after a few modes.
inline RawDataset helix(Index N, std::uint64_t seed, double noise = 0.01) {
  RngStream rng(seed, 0);
  RawDataset d;
  d.points.resize(3, N);
  for (Index j = 0; j < N; ++j) {
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    d.points(0, j) = std::cos(t) + noise * rng.gaussian();
    d.points(1, j) = std::sin(t) + noise * rng.gaussian();
    d.points(2, j) = 0.2 * std::cos(2.0 * t) + noise * rng.gaussian();
  }
  d.feature_names = {"x", "y", "z"};
  return d;
}

// Noisy circle traced twice in R^4 through first and second harmonics.
inline RawDataset ring(Index N, std::uint64_t seed, double noise = 0.02) {
  RngStream rng(seed, 0);
  RawDataset d;
  d.points.resize(4, N);
  for (Index j = 0; j < N; ++j) {
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    d.points(0, j) = std::cos(t) + noise * rng.gaussian();
    d.points(1, j) = std::sin(t) + noise * rng.gaussian();
    d.points(2, j) = 0.5 * std::cos(2.0 * t) + noise * rng.gaussian();
    d.points(3, j) = 0.5 * std::sin(2.0 * t) + noise * rng.gaussian();
  }
  d.feature_names = {"c1", "s1", "c2", "s2"};
  return d;
}

// Curved two-parameter sheet in R^5; intrinsic dimension two.
inline RawDataset sheet(Index N, std::uint64_t seed, double noise = 0.02) {
  RngStream rng(seed, 0);
  RawDataset d;
  d.points.resize(5, N);
  for (Index j = 0; j < N; ++j) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    d.points(0, j) = u + noise * rng.gaussian();
    d.points(1, j) = v + noise * rng.gaussian();
    d.points(2, j) = u * u - v * v + noise * rng.gaussian();
    d.points(3, j) = u * v + noise * rng.gaussian();
    d.points(4, j) = 0.5 * (u + v) + noise * rng.gaussian();
  }
  d.feature_names = {"a", "b", "c", "d", "e"};
  return d;
}

}  // namespace plom::testing
