#pragma once

#include <functional>
#include <string>

#include "nar/diagnostics.hpp"
#include "nar/schemes.hpp"

namespace nar {

// Which stepper advances the run.  The switching plans use the exact scheme
// while the targets still move and hand over at the switch time, by default
// the schedules' t0.
enum class SchemePlan {
  VolumePreserving,
  Linear,
  EnergyStable,
  SwitchToLinear,
  SwitchToEnergyStable,
};

struct RunPlan {
  SchemePlan plan = SchemePlan::VolumePreserving;
  double dt = 1e-3;
  double t_max = 1.0;
  double switch_time = -1.0;  // negative: use the schedules' t0
  int diag_every = 10;        // steps between rows; 0 means first and last only
  int snap_every = 0;         // steps between snapshots; 0 means first and last only
  SolverOptions opts;
};

struct RunCallbacks {
  std::function<void(const DiagnosticsRow&)> on_row;
  std::function<void(const NuclearState&, int step)> on_snapshot;
  std::function<void(const std::string&)> on_warning;
};

struct RunReport {
  NuclearState state;
  MultiplierRecord multipliers;  // from the last accepted step
  int steps = 0;
  int halvings = 0;  // step retries forced by solver failures
};

// Advances s0 to t_max.  A StepFailure halves the step and retries, up to
// opts.max_dt_halvings times per step, then rethrows; the nominal dt is
// restored on the next step.
RunReport run_simulation(const NuclearState& s0, const ModelParams& p,
                         const ScheduleSet& sched, const RunPlan& plan,
                         const SpectralOps& ops, const RunCallbacks& cb = {});

}  // namespace nar
