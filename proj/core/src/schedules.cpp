#include "nar/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace nar {

double solve_delta(double f0, double target, double alpha1, double alpha2, double t0) {
  if (!(t0 > 0.0)) throw std::invalid_argument("schedule: t0 must be positive");
  // value(t0) = f0 + (target - f0 + delta) * t0 / (t0 + alpha1 e^{-alpha2 t0})
  const double s = t0 / (t0 + alpha1 * std::exp(-alpha2 * t0));
  return (target - f0) * (1.0 - s) / s;
}

RampSchedule make_ramp(double f0, double target, double alpha1, double alpha2, double t0) {
  if (!(t0 > 0.0)) throw std::invalid_argument("schedule: t0 must be positive");
  if (alpha1 < 0.0) throw std::invalid_argument("schedule: alpha1 must be nonnegative");
  RampSchedule r;
  r.f0 = f0;
  r.target = target;
  r.alpha1 = alpha1;
  r.alpha2 = alpha2;
  r.t0 = t0;
  r.delta = solve_delta(f0, target, alpha1, alpha2, t0);
  return r;
}

double RampSchedule::value(double t) const {
  if (t >= t0) return target;
  if (t <= 0.0) return f0;
  return f0 + (target - f0 + delta) * t / (t + alpha1 * std::exp(-alpha2 * t));
}

double conversion_rate(double rho0, double rho_bar, double alpha1, double alpha2,
                       double t) {
  if (t <= 0.0) return rho0;
  return rho0 + rho_bar * t / (t + alpha1 * std::exp(-alpha2 * t));
}

bool ramp_is_monotone(const RampSchedule& r, int samples) {
  if (r.target < r.f0) return true;  // only upward ramps are checked
  double prev = r.value(0.0);
  for (int i = 1; i <= samples; ++i) {
    const double v = r.value(r.t0 * i / samples);
    if (v < prev - 1e-12 * (std::abs(prev) + 1.0)) return false;
    prev = v;
  }
  return true;
}

double VolumeTarget::rate(double t) const {
  if (kind == Kind::Ramp) return 1.0;
  return conversion_rate(rho0, rho_bar, rate_alpha1, rate_alpha2, t);
}

double VolumeTarget::value(double t) const {
  if (kind == Kind::Ramp) return ramp.value(t);
  return rate(t) * base.value(t);
}

bool VolumeTarget::frozen_at(double t) const {
  if (kind == Kind::Ramp) return ramp.constant() || t >= ramp.t0;
  // a conversion rate never clamps; it only freezes if it has no room to move
  return rho_bar == 0.0 && (base.constant() || t >= base.t0);
}

bool ScheduleSet::frozen_at(double t) const {
  for (const auto& s : V)
    if (!(s.constant() || t >= s.t0)) return false;
  for (const auto& s : v)
    if (!s.frozen_at(t)) return false;
  if (!(rx.constant() || t >= rx.t0)) return false;
  if (!(ry.constant() || t >= ry.t0)) return false;
  return true;
}

}  // namespace nar
