#pragma once

#include <vector>

#include "nar/model.hpp"
#include "nar/schemes.hpp"

namespace nar {

// Everything reported per output row.  energy_decrement is left to the
// consumer since it needs the previous row.
struct DiagnosticsRow {
  double t = 0.0;
  EnergyBreakdown energy;
  std::vector<double> V, v, rho;  // measured volumes and conversion ratios
  double mean_V = 0.0, mean_v = 0.0;
  std::vector<double> lambda, eta;
  double R = 1.0;
  double residual_inf = 0.0;
  int newton_iters = 0;
  double nucleus_vol = 0.0;
  double packing = 0.0;  // sum of territory volumes minus the nucleus volume
};

DiagnosticsRow measure(const NuclearState& s, const ModelParams& p, const SpectralOps& ops,
                       const MultiplierRecord* mu = nullptr);

// fraction of heterochromatin mass inside the elliptical annulus
// |sqrt((x/rx)^2 + (y/ry)^2) - 1| < band; throws if there is no mass
double envelope_localization(const ScalarField2D& psi, double rx, double ry, double band);

// connected regions with h(psi) above the threshold, 4-connected with periodic
// wraparound; specks below min_cells are ignored
int cluster_count(const ScalarField2D& psi, double threshold = 0.5, int min_cells = 4);

// Self-convergence in time against a small-step reference of the same scheme.
// Errors are L_inf at t = T over all fields; orders are log2 ratios between
// consecutive step sizes.
struct ConvergenceResult {
  std::vector<double> dts;
  std::vector<double> err_phi, err_psi;
  std::vector<double> order_phi, order_psi;
};

ConvergenceResult convergence_study(const NuclearState& s0, const ModelParams& p,
                                    const ScheduleSet& sched, const SolverOptions& opts,
                                    SchemeKind kind, std::vector<double> dts, double ref_dt,
                                    double T, const SpectralOps& ops);

}  // namespace nar
