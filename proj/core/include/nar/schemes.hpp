#pragma once

#include <stdexcept>
#include <vector>

#include "nar/model.hpp"
#include "nar/schedules.hpp"
#include "nar/spectral.hpp"

namespace nar {

enum class SchemeKind { VolumePreserving, Linear, EnergyStable };

enum class MultiplierCoupling { Full, PerChromosome };

struct SolverOptions {
  double constraint_tol = 1e-12;  // absolute, scaled by the domain area
  int newton_max_iter = 50;
  int max_sweeps = 25;            // Gauss-Seidel passes over chromosomes
  MultiplierCoupling coupling = MultiplierCoupling::Full;  // linear scheme only
  bool dealias = false;           // 2/3-rule filter on nonlinear terms
  int max_dt_halvings = 8;        // run driver retry budget

  double tol_abs(double area) const { return constraint_tol * area; }
};

struct MultiplierRecord {
  std::vector<double> lambda;  // territory volume multipliers
  std::vector<double> eta;     // heterochromatin volume multipliers
  double R = 1.0;              // dissipation multiplier, 1 unless stabilized
  double residual_inf = 0.0;   // solver residual at acceptance
  int newton_iters = 0;
};

// thrown when a multiplier solve does not reach tolerance; the driver
// reacts by halving the step
struct StepFailure : std::runtime_error {
  double residual;
  int iterations;
  StepFailure(const std::string& msg, double res, int iters)
      : std::runtime_error(msg), residual(res), iterations(iters) {}
};

struct StepInputs {
  const NuclearState& now;   // state at t^n
  const NuclearState& prev;  // state at t^{n-1}; pass now on the first step
  double dt;
  const ModelParams& params;
  const ScheduleSet& sched;
  const SolverOptions& opts;
  const MultiplierRecord* warm = nullptr;  // initial multiplier guess
};

struct StepResult {
  NuclearState state;
  MultiplierRecord multipliers;
};

// second-order extrapolant 3/2 f^n - 1/2 f^{n-1} used for the explicit
// nonlinear terms; phi0 is taken analytically at t^n + dt/2
NuclearState extrapolate(const NuclearState& now, const NuclearState& prev, double dt,
                         const ScheduleSet& sched);

// The new fields are affine in the multipliers.  Each substep solves one
// modified Helmholtz problem; the full update is assembled as
//   phi^{n+1} = base + lambda vol + eta het (+ R diss, stabilized scheme)
//   psi^{n+1} = base + sum_m eta_m het[m]   (+ R diss)
struct PhiSubsteps {
  ScalarField2D base, vol, het, diss;
};
struct PsiSubsteps {
  ScalarField2D base;
  std::vector<ScalarField2D> het;
  ScalarField2D diss;
};

// star is the extrapolated midpoint state; d_star, when given, is the
// matching variational derivative so shared work is not recomputed
PhiSubsteps solve_substeps_phi(int m, SchemeKind kind, const StepInputs& in,
                               const NuclearState& star, const SpectralOps& ops,
                               const ScalarField2D* d_star = nullptr);
PsiSubsteps solve_substeps_psi(SchemeKind kind, const StepInputs& in,
                               const NuclearState& star, const SpectralOps& ops,
                               const ScalarField2D* d_star = nullptr);

// exact volume enforcement, per-chromosome Newton inside Gauss-Seidel sweeps
StepResult step_volume_preserving(const StepInputs& in, const SpectralOps& ops);
// linearized constraints, one dense multiplier solve
StepResult step_linear(const StepInputs& in, const SpectralOps& ops);
// discrete energy law enforced through the extra multiplier R; requires
// all schedules frozen (t >= t0)
StepResult step_energy_stable(const StepInputs& in, const SpectralOps& ops);

StepResult step(SchemeKind kind, const StepInputs& in, const SpectralOps& ops);

}  // namespace nar
