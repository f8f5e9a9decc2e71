#pragma once

#include <vector>

#include "nar/grid.hpp"
#include "nar/spectral.hpp"

namespace nar {

// smooth volume indicator h and double well g, both flat at 0 and 1
inline double h_poly(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
inline double h_prime(double x) {
  const double u = x * (1.0 - x);
  return 30.0 * u * u;
}
inline double g_well(double x) {
  const double u = x * (1.0 - x);
  return 0.25 * u * u;
}
inline double g_well_prime(double x) { return 0.5 * x * (1.0 - x) * (1.0 - 2.0 * x); }

struct ModelParams {
  double eps2_phi = 0.01;  // squared interface width of territories
  double eps2_psi = 0.05;  // squared interface width of heterochromatin
  double beta0 = 0.0;      // lamina repulsion of territories
  double beta_phi = 0.0;   // territory-territory exclusion
  double beta_psi = 0.0;   // confinement of heterochromatin to territories
  double gamma = 0.0;      // heterochromatin-lamina affinity (0 disables)
  double mobility = 1.0;
  int n_chromosomes = 1;

  void validate() const;  // throws std::invalid_argument naming the bad field
};

// phi0 is the fixed lamina profile: 0 inside the nucleus, 1 outside.
// phi[m] are chromosome territories, psi the heterochromatin fraction.
struct NuclearState {
  double t = 0.0;
  ScalarField2D phi0;
  std::vector<ScalarField2D> phi;
  ScalarField2D psi;
};

void validate_state(const NuclearState& s, const ModelParams& p, const char* where);

struct EnergyBreakdown {
  double total = 0.0;
  double e0 = 0.0;      // interface energy: gradient terms plus double wells
  double e1 = 0.0;      // lamina repulsion, overlap exclusion, confinement
  double e2 = 0.0;      // heterochromatin-lamina affinity
  double etilde = 0.0;  // total minus the quadratic gradient terms
};

EnergyBreakdown energy_total(const NuclearState& s, const ModelParams& p,
                             const SpectralOps& ops);

// variational derivatives of etilde (the part treated explicitly in time)
ScalarField2D dEtilde_dphi(int m, const NuclearState& s, const ModelParams& p,
                           const SpectralOps& ops);
ScalarField2D dEtilde_dpsi(const NuclearState& s, const ModelParams& p,
                           const SpectralOps& ops);
// all m at once; shares the overlap sum across chromosomes
std::vector<ScalarField2D> dEtilde_dphi_all(const NuclearState& s, const ModelParams& p,
                                            const SpectralOps& ops);

double volume(int m, const NuclearState& s, const SpectralOps& ops);
double hetero_volume(int m, const NuclearState& s, const SpectralOps& ops);
double nucleus_volume(const NuclearState& s, const SpectralOps& ops);

}  // namespace nar
