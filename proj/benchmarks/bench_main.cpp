#include "scsd/dirfilter.hpp"
#include "scsd/model.hpp"
#include "scsd/phantom.hpp"
#include "scsd/solver.hpp"
#include "scsd/tv.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace scsd;

namespace {

Dictionary make_dict(int recon_order) {
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = 3000.0;
  return build_dictionary(acq, icosa_tessellate(recon_order, true).directions,
                          SfrParams{17e-4, 3e-4, 3000.0});
}

SignalVolume make_phantom_volume() {
  PhantomSpec spec;
  spec.sfr = SfrParams{17e-4, 3e-4, 3000.0};
  spec.snr = 7.0;
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = 3000.0;
  return generate_phantom(spec, acq).signal;
}

std::vector<double> random_image(Dims3 d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> q(static_cast<size_t>(d.count()));
  for (auto& x : q) x = u(rng);
  return q;
}

void BM_BuildDictionary(benchmark::State& state) {
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = 3000.0;
  const auto recon = icosa_tessellate(3, true).directions;
  const SfrParams sfr{17e-4, 3e-4, 3000.0};
  for (auto _ : state) benchmark::DoNotOptimize(build_dictionary(acq, recon, sfr));
}
BENCHMARK(BM_BuildDictionary)->Unit(benchmark::kMillisecond);

void BM_BuildFilter(benchmark::State& state) {
  const Vec3 v = Vec3(0.3, 0.5, 0.81).normalized();
  for (auto _ : state) benchmark::DoNotOptimize(build_filter(v, 0.8));
}
BENCHMARK(BM_BuildFilter)->Unit(benchmark::kMillisecond);

void BM_ApplyFilter(benchmark::State& state) {
  const Dims3 dims{16, 16, 12};
  const auto f = build_filter(Vec3(0.3, 0.5, 0.81).normalized(), 0.8);
  const auto q = random_image(dims, 1);
  std::vector<double> out(q.size());
  FirWorkspace ws(dims);
  for (auto _ : state) {
    ws.apply(f, q.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * dims.count());
}
BENCHMARK(BM_ApplyFilter);

void BM_TvProx(benchmark::State& state) {
  const Dims3 dims{16, 16, 12};
  const auto q = random_image(dims, 2);
  TvConfig cfg;
  cfg.weight = 0.02;
  for (auto _ : state) benchmark::DoNotOptimize(tv_prox(q, cfg, dims));
}
BENCHMARK(BM_TvProx)->Unit(benchmark::kMillisecond);

void BM_LsStep(benchmark::State& state) {
  const Dictionary dict = make_dict(3);
  const SignalVolume s = make_phantom_volume();
  SolverConfig cfg;
  cfg.num_threads = static_cast<int>(state.range(0));
  const PrecomputedLs pre = precompute_ls(dict, s, cfg);
  SolverState st = SolverState::zeros(dict.num_recon() + 1, s.dims.count());
  st.u.setRandom();
  st.v.setRandom();
  for (auto _ : state) {
    step_ls(st, pre, cfg);
    benchmark::DoNotOptimize(st.f.data());
  }
}
BENCHMARK(BM_LsStep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_SpatialStep(benchmark::State& state) {
  const Dictionary dict = make_dict(3);
  SolverConfig cfg;
  cfg.mu = 0.4;
  cfg.nu = 0.01;
  cfg.num_threads = static_cast<int>(state.range(0));
  const Dims3 dims{16, 16, 12};
  const FilterBank filters(dict.recon_dirs, cfg.tau());
  SolverState st = SolverState::zeros(dict.num_recon() + 1, dims.count());
  st.f.setRandom();
  st.f = st.f.cwiseAbs();
  for (auto _ : state) {
    step_spatial(st, cfg, &filters, dims);
    benchmark::DoNotOptimize(st.v.data());
  }
}
BENCHMARK(BM_SpatialStep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_AdmmIteration(benchmark::State& state) {
  const Dictionary dict = make_dict(3);
  const SignalVolume s = make_phantom_volume();
  SolverConfig cfg;
  cfg.lambda = 0.03;
  cfg.mu = 0.4;
  cfg.nu = 0.01;
  cfg.num_threads = static_cast<int>(state.range(0));
  cfg.track_objective = false;
  cfg.max_iters = 1;
  cfg.primal_tol = 1e-30;
  const FilterBank filters(dict.recon_dirs, cfg.tau());
  const auto fact = std::make_shared<LsFactorization>(factor_normal_matrix(dict.Phi, 1.0));
  for (auto _ : state)
    benchmark::DoNotOptimize(admm_solve(s, dict, cfg, &filters, fact));
}
BENCHMARK(BM_AdmmIteration)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
