#pragma once

#include <vector>

#include "nar/geometry.hpp"
#include "nar/schemes.hpp"

namespace nar::detail {

// per-step scratch shared by the three schemes: extrapolated state,
// explicit variational derivatives, substep fields and target values
struct StepContext {
  double t_next = 0.0;
  double tol = 0.0;  // absolute constraint tolerance for this grid
  NuclearState star;
  std::vector<ScalarField2D> dphi_star;
  ScalarField2D dpsi_star;
  std::vector<PhiSubsteps> phi_sub;
  PsiSubsteps psi_sub;
  std::vector<double> Vt, vt;  // targets at t^{n+1}
};

StepContext build_context(SchemeKind kind, const StepInputs& in, const SpectralOps& ops);

void validate_inputs(const StepInputs& in, const char* where);

// multiplier record sized for n chromosomes, warm started when available
MultiplierRecord init_record(const StepInputs& in, int n);

// state advanced with frozen fields (zero mobility shortcut)
StepResult frozen_step(const StepInputs& in);

inline ScalarField2D apply_h(const ScalarField2D& f) {
  ScalarField2D out(f.grid_ptr());
  for (int k = 0; k < f.size(); ++k) out[k] = h_poly(f[k]);
  return out;
}
inline ScalarField2D apply_h_prime(const ScalarField2D& f) {
  ScalarField2D out(f.grid_ptr());
  for (int k = 0; k < f.size(); ++k) out[k] = h_prime(f[k]);
  return out;
}

inline double linf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace nar::detail
