#pragma once

#include <vector>

namespace nar {

// Sigmoid ramp f0 -> target on [0, t0], clamped to target afterwards.
// delta is chosen so the ramp hits the target exactly at t0, which makes the
// clamp continuous; without it the sigmoid only reaches the target as t -> inf.
struct RampSchedule {
  double f0 = 0.0;
  double target = 0.0;
  double alpha1 = 1.0;
  double alpha2 = 0.0;
  double t0 = 1.0;
  double delta = 0.0;

  double value(double t) const;
  bool constant() const { return f0 == target; }
};

// delta that makes the sigmoid reach the target at t0 exactly
double solve_delta(double f0, double target, double alpha1, double alpha2, double t0);

// validates t0 > 0, alpha1 >= 0 and fills in delta
RampSchedule make_ramp(double f0, double target, double alpha1, double alpha2, double t0);

// unclamped conversion-rate sigmoid rho0 + rho_bar * t / (t + alpha1 e^{-alpha2 t})
double conversion_rate(double rho0, double rho_bar, double alpha1, double alpha2, double t);

// samples [0, t0] and warns (returns false) if an upward ramp ever decreases
bool ramp_is_monotone(const RampSchedule& r, int samples = 2000);

// Per-chromosome volume target: either a ramp of its own, or a conversion
// rate multiplying the chromosome volume target (heterochromatin case).
struct VolumeTarget {
  enum class Kind { Ramp, RateTimesVolume } kind = Kind::Ramp;
  RampSchedule ramp;             // Kind::Ramp
  double rho0 = 0.0;             // Kind::RateTimesVolume
  double rho_bar = 0.0;
  double rate_alpha1 = 1.0;
  double rate_alpha2 = 0.0;
  RampSchedule base;  // chromosome volume schedule the rate scales

  double value(double t) const;
  double rate(double t) const;  // 1 for plain ramps
  // true once the target can no longer change (used by the stabilized scheme)
  bool frozen_at(double t) const;
};

// All time-dependent inputs of a scenario: per-chromosome volume targets,
// heterochromatin targets and the nucleus radii.
struct ScheduleSet {
  std::vector<RampSchedule> V;   // chromosome volume targets
  std::vector<VolumeTarget> v;   // heterochromatin volume targets
  RampSchedule rx, ry;           // nucleus semi-axes
  double nucleus_eps = 0.1;      // interface width of the lamina profile

  double t0() const { return V.empty() ? rx.t0 : V.front().t0; }
  bool frozen_at(double t) const;
};

}  // namespace nar
