#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "field_helpers.hpp"
#include "nar/driver.hpp"
#include "nar/geometry.hpp"

using namespace nar;
using nar::test::linf_diff;

namespace {

RampSchedule constant_ramp(double v) { return make_ramp(v, v, 1.0, 0.0, 1.0); }

struct Small {
  std::shared_ptr<const Grid2D> g;
  SpectralOps ops;
  ModelParams params;
  ScheduleSet sched;
  NuclearState s0;

  Small() : g(Grid2D::make(16, 16)), ops(g) {
    params.eps2_phi = 0.01;
    params.eps2_psi = 0.05;
    params.beta0 = 5.0 / 3.0;
    params.beta_phi = 1.0;
    params.beta_psi = 2.0 / 3.0;
    params.gamma = 0.0;
    params.n_chromosomes = 1;

    sched.rx = constant_ramp(2.0);
    sched.ry = constant_ramp(2.0);
    sched.nucleus_eps = 0.1;
    ScenarioLayout layout;
    layout.eps_phi = 0.25;
    layout.chromosomes = {{0.1, -0.2, 0.8, 0.6}};
    layout.hetero_seeds = {{0.1, -0.2, 0.3, 0.25}};
    sched.V = {constant_ramp(1.0)};
    VolumeTarget vt;
    vt.ramp = constant_ramp(0.1);
    sched.v = {vt};
    s0 = build_initial_state(layout, sched, g);
    sched.V[0] = constant_ramp(volume(0, s0, ops));
    sched.v[0].ramp = constant_ramp(hetero_volume(0, s0, ops));
  }

  // upward volume ramp ending at t0 so switching plans have work to do
  void make_moving(double t0) {
    const double V0 = sched.V[0].value(0.0);
    sched.V[0] = make_ramp(V0, 1.1 * V0, 1.0, 2.0, t0);
    const double v0 = sched.v[0].value(0.0);
    sched.v[0].ramp = make_ramp(v0, 1.1 * v0, 1.0, 2.0, t0);
  }
};

}  // namespace

TEST_CASE("output cadence and step accounting") {
  Small fx;
  RunPlan plan;
  plan.plan = SchemePlan::Linear;
  plan.dt = 1e-3;
  plan.t_max = 0.01;
  plan.diag_every = 3;
  plan.snap_every = 0;

  std::vector<double> row_t;
  std::vector<int> snap_steps;
  RunCallbacks cb;
  cb.on_row = [&](const DiagnosticsRow& r) { row_t.push_back(r.t); };
  cb.on_snapshot = [&](const NuclearState&, int step) { snap_steps.push_back(step); };

  const RunReport rep = run_simulation(fx.s0, fx.params, fx.sched, plan, fx.ops, cb);
  CHECK(rep.steps == 10);
  CHECK(rep.halvings == 0);
  CHECK(rep.state.t == doctest::Approx(0.01).epsilon(1e-12));
  // initial row, steps 3, 6, 9 and the final step
  REQUIRE(row_t.size() == 5);
  CHECK(row_t.front() == 0.0);
  CHECK(row_t[1] == doctest::Approx(3e-3).epsilon(1e-12));
  CHECK(row_t.back() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(snap_steps == std::vector<int>{0, 10});
}

TEST_CASE("horizon not a multiple of dt ends exactly at t_max") {
  Small fx;
  RunPlan plan;
  plan.plan = SchemePlan::Linear;
  plan.dt = 1e-3;
  plan.t_max = 0.0035;
  const RunReport rep = run_simulation(fx.s0, fx.params, fx.sched, plan, fx.ops);
  CHECK(rep.steps == 4);  // three full steps and one clamped remainder
  CHECK(rep.state.t == doctest::Approx(0.0035).epsilon(1e-12));
}

TEST_CASE("zero horizon reports the initial state only") {
  Small fx;
  RunPlan plan;
  plan.t_max = 0.0;
  int rows = 0;
  RunCallbacks cb;
  cb.on_row = [&](const DiagnosticsRow&) { ++rows; };
  const RunReport rep = run_simulation(fx.s0, fx.params, fx.sched, plan, fx.ops, cb);
  CHECK(rep.steps == 0);
  CHECK(rows == 1);
  CHECK(linf_diff(rep.state.psi, fx.s0.psi) == 0.0);
}

TEST_CASE("switch plans defer the stabilized scheme until the targets freeze") {
  Small fx;
  fx.make_moving(0.004);
  RunPlan plan;
  plan.plan = SchemePlan::SwitchToEnergyStable;
  plan.dt = 1e-3;
  plan.t_max = 0.008;

  // the stabilized scheme alone rejects moving targets outright
  RunPlan direct = plan;
  direct.plan = SchemePlan::EnergyStable;
  CHECK_THROWS_AS(run_simulation(fx.s0, fx.params, fx.sched, direct, fx.ops),
                  std::invalid_argument);
  // forcing the switch before the freeze reaches the same rejection
  RunPlan early = plan;
  early.switch_time = 0.0;
  CHECK_THROWS_AS(run_simulation(fx.s0, fx.params, fx.sched, early, fx.ops),
                  std::invalid_argument);

  // the deferred plan runs through and keeps the exact scheme's constraints
  const RunReport rep = run_simulation(fx.s0, fx.params, fx.sched, plan, fx.ops);
  CHECK(rep.steps == 8);
  const double tol = plan.opts.tol_abs(fx.g->area());
  CHECK(std::abs(volume(0, rep.state, fx.ops) - fx.sched.V[0].value(0.008)) <= 1e2 * tol);
}

TEST_CASE("persistent failures give up after the halving budget") {
  Small fx;
  RunPlan plan;
  plan.plan = SchemePlan::VolumePreserving;
  plan.dt = 1e-3;
  plan.t_max = 0.01;
  plan.opts.newton_max_iter = 0;  // solver may not move, residual stays finite
  plan.opts.max_sweeps = 1;
  plan.opts.max_dt_halvings = 3;

  int warnings = 0;
  RunCallbacks cb;
  cb.on_warning = [&](const std::string&) { ++warnings; };
  try {
    run_simulation(fx.s0, fx.params, fx.sched, plan, fx.ops, cb);
    FAIL("expected StepFailure");
  } catch (const StepFailure& e) {
    CHECK(std::string(e.what()).find("halvings") != std::string::npos);
  }
  CHECK(warnings == 3);
}
