// Microbenchmarks for the hot path: spectral primitives and one full step of
// each scheme on a settled 8-chromosome state.
#include <benchmark/benchmark.h>

#include <cmath>
#include <map>
#include <memory>

#include "nar/geometry.hpp"
#include "nar/model.hpp"
#include "nar/schemes.hpp"
#include "nar/spectral.hpp"

using namespace nar;

namespace {

ScalarField2D smooth_field(const std::shared_ptr<const Grid2D>& g) {
  ScalarField2D f(g);
  for (int j = 0; j < g->ny; ++j)
    for (int i = 0; i < g->nx; ++i)
      f.at(i, j) = std::sin(3 * g->x(i)) * std::cos(2 * g->y(j)) +
                   0.3 * std::cos(5 * g->x(i) - g->y(j));
  return f;
}

void BM_Laplacian(benchmark::State& st) {
  const auto g = Grid2D::make(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)));
  SpectralOps ops(g);
  const ScalarField2D f = smooth_field(g);
  for (auto _ : st) benchmark::DoNotOptimize(ops.laplacian(f));
}

void BM_ModifiedHelmholtz(benchmark::State& st) {
  const auto g = Grid2D::make(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)));
  SpectralOps ops(g);
  const ScalarField2D f = smooth_field(g);
  for (auto _ : st) benchmark::DoNotOptimize(ops.solve_modified_helmholtz(1e3, 5e-3, f));
}

void BM_Integrate(benchmark::State& st) {
  const auto g = Grid2D::make(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)));
  SpectralOps ops(g);
  const ScalarField2D f = smooth_field(g);
  for (auto _ : st) benchmark::DoNotOptimize(ops.integrate(f));
}

// Fixed nucleus, frozen volume targets, two preparatory steps so the
// extrapolation history is realistic.  Built once per grid size.
struct StepFixture {
  std::shared_ptr<const Grid2D> g;
  SpectralOps ops;
  ModelParams p;
  ScheduleSet sched;
  SolverOptions opts;
  NuclearState now, prev;

  explicit StepFixture(int nx) : g(Grid2D::make(nx, nx)), ops(g) {
    p.eps2_phi = 0.01;
    p.eps2_psi = 0.05;
    p.beta0 = 5.0 / 3.0;
    p.beta_phi = 1.0;
    p.beta_psi = 2.0 / 3.0;
    p.gamma = 0.0;
    p.n_chromosomes = 8;

    const double cx[] = {0, -1, -0.3, 1, 0, 1, 0, -1};
    const double cy[] = {2.5, 1.4, -0.5, -1, 0.6, 1.3, -2.5, -0.8};
    ScenarioLayout lay;
    lay.eps_phi = 0.1;
    for (int m = 0; m < 8; ++m) {
      lay.chromosomes.push_back({cx[m], cy[m], 0.2, 0.4});
      lay.hetero_seeds.push_back({cx[m], cy[m], 0.15, 0.25});
    }
    sched.rx = make_ramp(2.0, 2.0, 1.0, 0.0, 1.0);
    sched.ry = make_ramp(2.9, 2.9, 1.0, 0.0, 1.0);
    sched.nucleus_eps = 0.1;
    sched.V.assign(8, make_ramp(1.0, 1.0, 1.0, 0.0, 1.0));
    VolumeTarget vt;
    sched.v.assign(8, vt);
    NuclearState s0 = build_initial_state(lay, sched, g);
    for (int m = 0; m < 8; ++m) {
      const double V0 = volume(m, s0, ops), v0 = hetero_volume(m, s0, ops);
      sched.V[m] = make_ramp(V0, V0, 1.0, 0.0, 1.0);
      sched.v[m].ramp = make_ramp(v0, v0, 1.0, 0.0, 1.0);
    }
    now = prev = s0;
    for (int s = 0; s < 2; ++s) {
      StepInputs in{now, prev, 1e-3, p, sched, opts, nullptr};
      StepResult r = step_volume_preserving(in, ops);
      prev = std::move(now);
      now = std::move(r.state);
    }
  }

  static StepFixture& at(int nx) {
    static std::map<int, std::unique_ptr<StepFixture>> cache;
    auto& slot = cache[nx];
    if (!slot) slot = std::make_unique<StepFixture>(nx);
    return *slot;
  }
};

void bench_step(benchmark::State& st, SchemeKind kind) {
  StepFixture& f = StepFixture::at(static_cast<int>(st.range(0)));
  StepInputs in{f.now, f.prev, 1e-3, f.p, f.sched, f.opts, nullptr};
  for (auto _ : st) {
    try {
      benchmark::DoNotOptimize(step(kind, in, f.ops));
    } catch (const std::exception& e) {
      st.SkipWithError(e.what());
      break;
    }
  }
}

void BM_StepVolumePreserving(benchmark::State& st) {
  bench_step(st, SchemeKind::VolumePreserving);
}
void BM_StepLinear(benchmark::State& st) { bench_step(st, SchemeKind::Linear); }
void BM_StepEnergyStable(benchmark::State& st) {
  bench_step(st, SchemeKind::EnergyStable);
}

BENCHMARK(BM_Laplacian)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ModifiedHelmholtz)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Integrate)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StepVolumePreserving)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StepLinear)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StepEnergyStable)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
