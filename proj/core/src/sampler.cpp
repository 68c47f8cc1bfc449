#include "plom/sampler.hpp"

#include <cmath>
#include <exception>
#include <numbers>
#include <thread>
#include <vector>

#include "plom/errors.hpp"

namespace plom {

IsdeSchedule resolve_schedule(const IsdeConfig& config, double s_hat) {
  if (!(config.f0 >= 0.0) || !std::isfinite(config.f0)) {
    throw ConfigError("f0 must be finite and >= 0");
  }
  if (std::isnan(config.dr)) throw ConfigError("dr must not be NaN");
  IsdeSchedule sched;
  if (config.dr > 0.0) {
    if (!std::isfinite(config.dr)) throw ConfigError("dr must be finite");
    sched.dr = config.dr;
  } else {
    sched.dr = 2.0 * std::numbers::pi * s_hat / 20.0;
  }
  if (config.burn_in >= 0) {
    sched.burn_in = config.burn_in;
  } else {
    if (config.f0 <= 0.0) {
      throw ConfigError(
          "burn-in cannot be derived with f0 = 0; set burn_in explicitly");
    }
    // Damping contracts transients like exp(-f0 r / 2); this waits for a
    // factor of 1000.
    sched.burn_in = static_cast<Index>(
        std::ceil(2.0 * std::log(1000.0) / (config.f0 * sched.dr)));
  }
  if (config.spacing >= 0) {
    if (config.spacing == 0) throw ConfigError("spacing must be >= 1");
    sched.spacing = config.spacing;
  } else {
    sched.spacing = std::max<Index>(
        1, static_cast<Index>(std::ceil(static_cast<double>(sched.burn_in) / 4.0)));
  }
  return sched;
}

ChainState init_chain(const Matrix& eta, const DiffusionBasis& reduced,
                      RngStream& rng) {
  ChainState state;
  state.z.noalias() = eta * reduced.a;
  Matrix v0(eta.rows(), eta.cols());
  rng.fill_gaussian(v0);
  state.y.noalias() = v0 * reduced.a;
  state.r = 0.0;
  return state;
}

Matrix reduced_drift(const KdeModel& kde, const DiffusionBasis& reduced,
                     const Matrix& z) {
  return kde.drift(z * reduced.g.transpose()) * reduced.a;
}

void step(ChainState& state, const KdeModel& kde, const DiffusionBasis& reduced,
          double f0, double dr, RngStream* rng) {
  const double b = f0 * dr / 4.0;
  const double half = 0.5 * dr;
  state.z.noalias() += half * state.y;
  const Matrix drift = reduced_drift(kde, reduced, state.z);
  state.y *= (1.0 - b) / (1.0 + b);
  state.y.noalias() += (dr / (1.0 + b)) * drift;
  if (rng != nullptr) {
    // The draw happens even at f0 = 0 so a chain's stream position depends
    // only on the step count.
    Matrix dw(kde.nu(), kde.N());
    rng->fill_gaussian(dw);
    state.y.noalias() += (std::sqrt(f0 * dr) / (1.0 + b)) * (dw * reduced.a);
  }
  state.z.noalias() += half * state.y;
  state.r += dr;
}

namespace {

void run_chain(const Matrix& eta, const KdeModel& kde,
               const DiffusionBasis& reduced, const IsdeConfig& config,
               const IsdeSchedule& sched, int chain, Index count,
               std::vector<Matrix>& z_out, std::vector<Matrix>& eta_out) {
  RngStream rng(config.seed, static_cast<std::uint64_t>(chain));
  ChainState state = init_chain(eta, reduced, rng);
  for (Index k = 0; k < sched.burn_in; ++k) {
    step(state, kde, reduced, config.f0, sched.dr, &rng);
  }
  z_out.reserve(static_cast<std::size_t>(count));
  eta_out.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    for (Index k = 0; k < sched.spacing; ++k) {
      step(state, kde, reduced, config.f0, sched.dr, &rng);
    }
    if (!state.z.allFinite()) {
      throw NumericalError("chain diverged; reduce dr or check the basis");
    }
    z_out.push_back(state.z);
    eta_out.emplace_back(state.z * reduced.g.transpose());
  }
}

}  // namespace

LearnedSet generate(const Matrix& eta, const KdeModel& kde,
                    const DiffusionBasis& reduced, const IsdeConfig& config) {
  if (config.n_mc < 1) throw ConfigError("n_mc must be >= 1");
  if (config.n_chains < 1) throw ConfigError("n_chains must be >= 1");
  if (reduced.m < 1) {
    throw ConfigError("basis has no retained order; call reduce first");
  }
  if (eta.rows() != kde.nu() || eta.cols() != kde.N()) {
    throw DataError("ensemble shape does not match the density model");
  }
  if (reduced.g.rows() != eta.cols()) {
    throw DataError("basis row count does not match the ensemble size");
  }

  LearnedSet out;
  out.config = config;
  out.schedule = resolve_schedule(config, kde.s_hat());

  const int n_chains = config.n_chains;
  const Index base = config.n_mc / n_chains;
  const Index rem = config.n_mc % n_chains;
  std::vector<Index> counts(static_cast<std::size_t>(n_chains));
  for (int c = 0; c < n_chains; ++c) {
    counts[static_cast<std::size_t>(c)] = base + (c < rem ? 1 : 0);
  }

  std::vector<std::vector<Matrix>> z_per(static_cast<std::size_t>(n_chains));
  std::vector<std::vector<Matrix>> eta_per(static_cast<std::size_t>(n_chains));

  const int n_threads = std::min(std::max(config.n_threads, 1), n_chains);
  if (n_threads <= 1) {
    for (int c = 0; c < n_chains; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      run_chain(eta, kde, reduced, config, out.schedule, c,
                counts[static_cast<std::size_t>(c)],
                z_per[static_cast<std::size_t>(c)],
                eta_per[static_cast<std::size_t>(c)]);
    }
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int c = t; c < n_chains; c += n_threads) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue;
            run_chain(eta, kde, reduced, config, out.schedule, c,
                      counts[static_cast<std::size_t>(c)],
                      z_per[static_cast<std::size_t>(c)],
                      eta_per[static_cast<std::size_t>(c)]);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  out.z_samples.reserve(static_cast<std::size_t>(config.n_mc));
  out.eta_samples.reserve(static_cast<std::size_t>(config.n_mc));
  for (int c = 0; c < n_chains; ++c) {
    auto& zs = z_per[static_cast<std::size_t>(c)];
    auto& es = eta_per[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < zs.size(); ++i) {
      out.z_samples.push_back(std::move(zs[i]));
      out.eta_samples.push_back(std::move(es[i]));
    }
  }
  return out;
}

LearnedArchive reconstruct_learned(const LearnedSet& learned,
                                   const PcaModel& pca,
                                   const ScalingSpec& scaling,
                                   const DiffusionBasis& reduced) {
  if (learned.eta_samples.empty()) {
    throw DataError("learned set holds no samples");
  }
  const Index N = learned.eta_samples.front().cols();
  const Index n = pca.mean.size();
  const Index total = static_cast<Index>(learned.eta_samples.size()) * N;

  LearnedArchive archive;
  archive.samples.resize(n, total);
  Index col = 0;
  for (const Matrix& eta : learned.eta_samples) {
    const Matrix scaled = reconstruct(pca, eta);
    archive.samples.middleCols(col, N) = invert_scaling(scaling, scaled);
    col += N;
  }

  archive.meta.N = N;
  archive.meta.nu = learned.eta_samples.front().rows();
  archive.meta.m = reduced.m;
  archive.meta.eps_dm = reduced.eps_dm;
  archive.meta.kappa = reduced.kappa;
  archive.meta.f0 = learned.config.f0;
  archive.meta.dr = learned.schedule.dr;
  archive.meta.seed = learned.config.seed;
  archive.meta.n_mc = total;
  return archive;
}

}  // namespace plom
