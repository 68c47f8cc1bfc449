#include <benchmark/benchmark.h>

#include <Eigen/Eigenvalues>
#include <cstdint>

#include "plom/diffusion.hpp"
#include "plom/kde.hpp"
#include "plom/mixture.hpp"
#include "plom/rng.hpp"
#include "plom/sampler.hpp"

namespace {

// Seeded standard-normal ensemble, whitened so it looks like PCA output.
plom::Matrix whitened_cloud(plom::Index nu, plom::Index N, std::uint64_t seed) {
  plom::Matrix x(nu, N);
  plom::RngStream rng(seed, 0);
  rng.fill_gaussian(x);
  x.colwise() -= x.rowwise().mean().eval();
  plom::Matrix cov = (x * x.transpose()) / static_cast<double>(N - 1);
  Eigen::SelfAdjointEigenSolver<plom::Matrix> es(cov);
  return es.operatorInverseSqrt() * x;
}

double mid_grid_eps(const plom::Matrix& eta) {
  std::vector<double> grid = plom::default_eps_grid(eta);
  return grid[grid.size() / 2];
}

void BM_kde_matrix_drift(benchmark::State& state) {
  const plom::Index N = state.range(0);
  plom::Matrix eta = whitened_cloud(9, N, 11);
  plom::KdeModel kde(eta);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kde.drift(eta));
  }
}

void BM_kernel_build(benchmark::State& state) {
  plom::Matrix eta = whitened_cloud(9, 200, 11);
  const double eps = mid_grid_eps(eta);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plom::build_kernel(eta, eps));
  }
}

void BM_basis_solve(benchmark::State& state) {
  plom::Matrix eta = whitened_cloud(9, 200, 11);
  plom::DiffusionKernel kernel = plom::build_kernel(eta, mid_grid_eps(eta));
  for (auto _ : state) {
    benchmark::DoNotOptimize(plom::solve_basis(kernel, 1));
  }
}

void BM_isde_step(benchmark::State& state) {
  plom::Matrix eta = whitened_cloud(9, 200, 11);
  plom::KdeModel kde(eta);
  plom::DiffusionBasis reduced =
      plom::reduce(plom::solve_basis(plom::build_kernel(eta, mid_grid_eps(eta)), 1),
                   state.range(0));
  plom::RngStream rng(3, 0);
  plom::ChainState chain = plom::init_chain(eta, reduced, rng);
  const double dr = 2.0 * 3.141592653589793 * kde.s_hat() / 20.0;
  for (auto _ : state) {
    plom::step(chain, kde, reduced, 1.5, dr, &rng);
    benchmark::DoNotOptimize(chain.z.data());
  }
}

void BM_generate_small(benchmark::State& state) {
  plom::Matrix eta = whitened_cloud(2, 20, 13);
  plom::KdeModel kde(eta);
  plom::DiffusionBasis reduced =
      plom::reduce(plom::solve_basis(plom::build_kernel(eta, mid_grid_eps(eta)), 1), 5);
  plom::IsdeConfig config;
  config.n_chains = 2;
  config.n_mc = 32;
  config.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plom::generate(eta, kde, reduced, config));
  }
}

void BM_mixture_enumerate(benchmark::State& state) {
  const plom::Index N = state.range(0);
  plom::Matrix eta = whitened_cloud(2, N, 17);
  plom::DiffusionBasis reduced =
      plom::reduce(plom::solve_basis(plom::build_kernel(eta, mid_grid_eps(eta)), 1),
                   N - 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plom::enumerate_mixture(eta, reduced));
  }
}

void BM_exact_dsq(benchmark::State& state) {
  const plom::Index N = state.range(0);
  plom::Matrix eta = whitened_cloud(2, N, 17);
  plom::DiffusionBasis reduced =
      plom::reduce(plom::solve_basis(plom::build_kernel(eta, mid_grid_eps(eta)), 1),
                   N - 1);
  plom::MixtureModel model = plom::enumerate_mixture(eta, reduced);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plom::exact_dsq(model));
  }
}

BENCHMARK(BM_kde_matrix_drift)->Arg(50)->Arg(200)->Arg(800);
BENCHMARK(BM_kernel_build);
BENCHMARK(BM_basis_solve);
BENCHMARK(BM_isde_step)->Arg(10)->Arg(200);
BENCHMARK(BM_generate_small);
BENCHMARK(BM_mixture_enumerate)->Arg(4)->Arg(5);
BENCHMARK(BM_exact_dsq)->Arg(4)->Arg(5);

}  // namespace

BENCHMARK_MAIN();
