#pragma once

#include <cstdint>
#include <vector>

#include "plom/dataset.hpp"
#include "plom/diffusion.hpp"
#include "plom/kde.hpp"
#include "plom/rng.hpp"
#include "plom/types.hpp"

namespace plom {

// Damped second-order dynamics in the reduced frame, discretized by a
// Stormer-Verlet scheme.  f0 sets the dissipation (and the matching noise);
// f0 = 0 degenerates to the symplectic Verlet integrator.
struct IsdeConfig {
  double f0 = 1.5;
  double dr = 0.0;       // <= 0 resolves to 2 pi s_hat / 20
  Index burn_in = -1;    // < 0 resolves to ceil(2 ln 1000 / (f0 dr))
  Index spacing = -1;    // < 0 resolves to ceil(burn_in / 4), floor 1
  int n_chains = 8;
  int n_threads = 1;
  Index n_mc = 0;        // matrix realizations to retain, >= 1
  std::uint64_t seed = 0;
};

struct IsdeSchedule {
  double dr = 0.0;
  Index burn_in = 0;
  Index spacing = 1;
};

IsdeSchedule resolve_schedule(const IsdeConfig& config, double s_hat);

struct ChainState {
  Matrix z;  // nu x m position
  Matrix y;  // nu x m velocity
  double r = 0.0;
};

// Starts a chain on the training ensemble: z = eta a, y = v0 a with v0 a
// standard Gaussian matrix drawn from the stream.
ChainState init_chain(const Matrix& eta, const DiffusionBasis& reduced,
                      RngStream& rng);

// Drift lifted through the frame: L(z g^T) a, column-wise KDE drift inside.
Matrix reduced_drift(const KdeModel& kde, const DiffusionBasis& reduced,
                     const Matrix& z);

// One step of
//   z_k+1/2 = z_k + dr/2 y_k
//   y_k+1   = (1-b)/(1+b) y_k + dr/(1+b) L(z_k+1/2)
//             + sqrt(f0)/(1+b) dW a,     b = f0 dr / 4
//   z_k+1   = z_k+1/2 + dr/2 y_k+1
// dW is sqrt(dr) times a nu x N standard Gaussian draw; rng == nullptr turns
// the noise term off (the damping stays), which is only meant for testing.
void step(ChainState& state, const KdeModel& kde, const DiffusionBasis& reduced,
          double f0, double dr, RngStream* rng);

struct LearnedSet {
  std::vector<Matrix> z_samples;    // nu x m
  std::vector<Matrix> eta_samples;  // nu x N, z g^T
  IsdeConfig config;
  IsdeSchedule schedule;
};

// Runs n_chains independent chains on streams (seed, chain) and retains every
// spacing-th state after burn-in, n_mc matrices in total, merged in chain
// order.  Bitwise deterministic for a fixed (config, seed), independent of
// n_threads.
LearnedSet generate(const Matrix& eta, const KdeModel& kde,
                    const DiffusionBasis& reduced, const IsdeConfig& config);

// Maps every generated column back to the physical space and flattens the
// matrices into an archive of n x (n_mc N) vector realizations.
LearnedArchive reconstruct_learned(const LearnedSet& learned,
                                   const PcaModel& pca,
                                   const ScalingSpec& scaling,
                                   const DiffusionBasis& reduced);

}  // namespace plom
