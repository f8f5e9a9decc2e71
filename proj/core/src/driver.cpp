#include "nar/driver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nar {

namespace {

SchemeKind active_kind(const RunPlan& plan, const ScheduleSet& sched, double t) {
  switch (plan.plan) {
    case SchemePlan::VolumePreserving: return SchemeKind::VolumePreserving;
    case SchemePlan::Linear: return SchemeKind::Linear;
    case SchemePlan::EnergyStable: return SchemeKind::EnergyStable;
    default: break;
  }
  const double sw = plan.switch_time >= 0.0 ? plan.switch_time : sched.t0();
  const bool switched = t >= sw - 1e-12 * std::max(1.0, std::abs(sw));
  if (!switched) return SchemeKind::VolumePreserving;
  return plan.plan == SchemePlan::SwitchToLinear ? SchemeKind::Linear
                                                 : SchemeKind::EnergyStable;
}

}  // namespace

RunReport run_simulation(const NuclearState& s0, const ModelParams& p,
                         const ScheduleSet& sched, const RunPlan& plan,
                         const SpectralOps& ops, const RunCallbacks& cb) {
  if (!(plan.dt > 0.0)) throw std::invalid_argument("run_simulation: dt must be positive");
  if (!(plan.t_max >= s0.t))
    throw std::invalid_argument("run_simulation: t_max precedes the initial time");
  if (plan.diag_every < 0 || plan.snap_every < 0)
    throw std::invalid_argument("run_simulation: output cadence must be nonnegative");

  RunReport rep;
  rep.state = s0;
  NuclearState prev = s0;
  bool have_prev = false;  // extrapolation history valid for the current dt

  if (cb.on_row) cb.on_row(measure(rep.state, p, ops));
  if (cb.on_snapshot) cb.on_snapshot(rep.state, 0);

  const double t_end = plan.t_max;
  const double t_eps = 1e-12 * std::max(1.0, std::abs(t_end));
  const MultiplierRecord* warm = nullptr;

  while (rep.state.t < t_end - t_eps) {
    const double dt_nominal = std::min(plan.dt, t_end - rep.state.t);
    const SchemeKind kind = active_kind(plan, sched, rep.state.t);

    double dt = dt_nominal;
    bool fresh_history = !have_prev || dt_nominal != plan.dt;
    StepResult out = [&] {
      for (int tries = 0;; ++tries) {
        const NuclearState& back = fresh_history ? rep.state : prev;
        try {
          return step(kind, StepInputs{rep.state, back, dt, p, sched, plan.opts, warm},
                      ops);
        } catch (const StepFailure& e) {
          if (tries >= plan.opts.max_dt_halvings)
            throw StepFailure("step at t = " + std::to_string(rep.state.t) +
                                  " failed after " + std::to_string(tries) +
                                  " halvings: " + e.what(),
                              e.residual, e.iterations);
          dt *= 0.5;
          fresh_history = true;  // the uniform-step extrapolant no longer applies
          ++rep.halvings;
          if (cb.on_warning)
            cb.on_warning("step at t = " + std::to_string(rep.state.t) +
                          " failed (" + e.what() + "), retrying with dt = " +
                          std::to_string(dt));
        }
      }
    }();

    prev = std::move(rep.state);
    rep.state = std::move(out.state);
    rep.multipliers = std::move(out.multipliers);
    warm = &rep.multipliers;
    have_prev = dt == plan.dt;  // only a full step leaves usable history
    ++rep.steps;

    const bool last = rep.state.t >= t_end - t_eps;
    if (cb.on_row && (last || (plan.diag_every > 0 && rep.steps % plan.diag_every == 0)))
      cb.on_row(measure(rep.state, p, ops, &rep.multipliers));
    if (cb.on_snapshot &&
        (last || (plan.snap_every > 0 && rep.steps % plan.snap_every == 0)))
      cb.on_snapshot(rep.state, rep.steps);
  }
  return rep;
}

}  // namespace nar
