#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nar/driver.hpp"
#include "nar/geometry.hpp"

namespace nar {

// Mirrors the scenario file layout.  Parsing is strict: unknown sections or
// keys, missing required keys and malformed numbers are all errors that name
// the file and line.  Numbers accept plain decimals and p/q rationals.
struct NucleusConfig {
  double rx0 = 2.0, rx1 = 2.0;
  double ry0 = 2.0, ry1 = 2.0;
  double alpha1 = 1.0, alpha2 = 0.0, t0 = 1.0;
  double eps = 0.1;
};

enum class VolumeMode { NucleusFraction, Initial, Explicit };
enum class HeteroMode { Ratio, Rate, Initial };

struct ScenarioConfig {
  int nx = 256, ny = 256;
  ModelParams params;
  NucleusConfig nucleus;

  std::vector<double> cx, cy, crx, cry;  // territory seed ellipses
  double seed_eps = 0.1;
  bool has_hetero_seeds = false;
  std::vector<double> hx, hy, hrx, hry;

  VolumeMode vol_mode = VolumeMode::Initial;
  double vol_t0 = 1.0, vol_alpha1 = 1.0, vol_alpha2 = 0.0;
  double fill = 1.0;                 // nucleus_fraction mode
  std::vector<double> vol_targets;   // explicit mode

  HeteroMode het_mode = HeteroMode::Initial;
  double het_ratio = 0.0;
  double het_t0 = 1.0, het_alpha1 = 1.0, het_alpha2 = 0.0;
  double rho0 = 0.0;
  std::vector<double> rho_bar;

  SchemePlan plan = SchemePlan::VolumePreserving;
  double dt = 1e-3, t_max = 1.0, switch_time = -1.0;
  int diag_every = 10, snap_every = 0;
  SolverOptions opts;
};

ScenarioConfig parse_scenario(const std::string& text, const std::string& name);
ScenarioConfig load_scenario(const std::string& path);

// canonical echo of a parsed scenario; parsing it back gives the same config
std::string format_scenario(const ScenarioConfig& c);

const char* scheme_plan_name(SchemePlan plan);

// Everything needed to run: schedules built from the measured initial
// volumes, so targets ramp from what the seeds actually hold on this grid.
struct ScenarioInstance {
  std::shared_ptr<const Grid2D> grid;
  ModelParams params;
  ScheduleSet sched;
  NuclearState initial;
  RunPlan plan;
};

ScenarioInstance build_scenario(const ScenarioConfig& c, const WarnFn& warn = {});

}  // namespace nar
