#include "nar/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nar {

void ModelParams::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("params: " + msg); };
  if (!(eps2_phi > 0.0)) fail("eps2_phi must be positive");
  if (!(eps2_psi > 0.0)) fail("eps2_psi must be positive");
  if (beta0 < 0.0) fail("beta0 must be nonnegative");
  if (beta_phi < 0.0) fail("beta_phi must be nonnegative");
  if (beta_psi < 0.0) fail("beta_psi must be nonnegative");
  if (!std::isfinite(gamma)) fail("gamma must be finite");
  if (!(mobility >= 0.0)) fail("mobility must be nonnegative");
  if (n_chromosomes < 1) fail("n_chromosomes must be at least 1");
}

void validate_state(const NuclearState& s, const ModelParams& p, const char* where) {
  const std::string w(where);
  if (s.phi0.empty() || s.psi.empty()) throw std::invalid_argument(w + ": empty state field");
  if (static_cast<int>(s.phi.size()) != p.n_chromosomes)
    throw std::invalid_argument(w + ": state has " + std::to_string(s.phi.size()) +
                                " chromosome fields, params say " +
                                std::to_string(p.n_chromosomes));
  for (const auto& f : s.phi)
    if (f.empty() || !same_grid(f, s.phi0))
      throw std::invalid_argument(w + ": chromosome field grid mismatch");
  if (!same_grid(s.psi, s.phi0)) throw std::invalid_argument(w + ": psi grid mismatch");
}

namespace {

// overlap sum S = sum_m h(phi_m) and its square sum Q = sum_m h(phi_m)^2;
// the pairwise exclusion energy is beta_phi * integral of (S^2 - Q)
void overlap_sums(const NuclearState& s, ScalarField2D& S, ScalarField2D& Q) {
  S.fill(0.0);
  Q.fill(0.0);
  for (const auto& f : s.phi) {
    const double* p = f.data();
    double* ps = S.data();
    double* pq = Q.data();
    for (int k = 0; k < f.size(); ++k) {
      const double hm = h_poly(p[k]);
      ps[k] += hm;
      pq[k] += hm * hm;
    }
  }
}

}  // namespace

EnergyBreakdown energy_total(const NuclearState& s, const ModelParams& p,
                             const SpectralOps& ops) {
  validate_state(s, p, "energy_total");
  const auto g = s.phi0.grid_ptr();
  const int n = s.psi.size();

  EnergyBreakdown e;
  ScalarField2D S(g), Q(g);
  overlap_sums(s, S, Q);

  ScalarField2D tmp(g);
  double wells = 0.0;
  for (const auto& f : s.phi) {
    e.e0 += 0.5 * p.eps2_phi * ops.grad_norm_sq(f);
    for (int k = 0; k < n; ++k) tmp[k] = g_well(f[k]);
    wells += ops.integrate(tmp);
  }
  e.e0 += 0.5 * p.eps2_psi * ops.grad_norm_sq(s.psi);
  for (int k = 0; k < n; ++k) tmp[k] = g_well(s.psi[k]);
  wells += ops.integrate(tmp);
  e.e0 += wells;

  ScalarField2D hpsi(g);
  for (int k = 0; k < n; ++k) hpsi[k] = h_poly(s.psi[k]);
  ScalarField2D hphi0(g);
  for (int k = 0; k < n; ++k) hphi0[k] = h_poly(s.phi0[k]);

  double e1 = p.beta0 * ops.inner_product(hphi0, S);
  for (int k = 0; k < n; ++k) tmp[k] = (1.0 - S[k]) * hpsi[k];
  e1 += p.beta_psi * ops.integrate(tmp);
  for (int k = 0; k < n; ++k) tmp[k] = S[k] * S[k] - Q[k];
  e1 += p.beta_phi * ops.integrate(tmp);
  e.e1 = e1;

  if (p.gamma != 0.0) e.e2 = p.gamma * ops.grad_inner(hphi0, hpsi);

  e.total = e.e0 + e.e1 + e.e2;
  e.etilde = wells + e.e1 + e.e2;
  return e;
}

ScalarField2D dEtilde_dphi(int m, const NuclearState& s, const ModelParams& p,
                           const SpectralOps& ops) {
  validate_state(s, p, "dEtilde_dphi");
  if (m < 0 || m >= p.n_chromosomes)
    throw std::invalid_argument("dEtilde_dphi: chromosome index out of range");
  (void)ops;
  const auto g = s.phi0.grid_ptr();
  ScalarField2D S(g), Q(g);
  overlap_sums(s, S, Q);
  ScalarField2D out(g);
  const ScalarField2D& f = s.phi[m];
  for (int k = 0; k < out.size(); ++k) {
    const double couple = p.beta0 * h_poly(s.phi0[k]) - p.beta_psi * h_poly(s.psi[k]) +
                          2.0 * p.beta_phi * (S[k] - h_poly(f[k]));
    out[k] = g_well_prime(f[k]) + couple * h_prime(f[k]);
  }
  return out;
}

std::vector<ScalarField2D> dEtilde_dphi_all(const NuclearState& s, const ModelParams& p,
                                            const SpectralOps& ops) {
  validate_state(s, p, "dEtilde_dphi_all");
  (void)ops;
  const auto g = s.phi0.grid_ptr();
  ScalarField2D S(g), Q(g);
  overlap_sums(s, S, Q);
  std::vector<ScalarField2D> out;
  out.reserve(s.phi.size());
  for (const auto& f : s.phi) {
    ScalarField2D d(g);
    for (int k = 0; k < d.size(); ++k) {
      const double couple = p.beta0 * h_poly(s.phi0[k]) - p.beta_psi * h_poly(s.psi[k]) +
                            2.0 * p.beta_phi * (S[k] - h_poly(f[k]));
      d[k] = g_well_prime(f[k]) + couple * h_prime(f[k]);
    }
    out.push_back(std::move(d));
  }
  return out;
}

ScalarField2D dEtilde_dpsi(const NuclearState& s, const ModelParams& p,
                           const SpectralOps& ops) {
  validate_state(s, p, "dEtilde_dpsi");
  const auto g = s.phi0.grid_ptr();
  ScalarField2D S(g), Q(g);
  overlap_sums(s, S, Q);
  ScalarField2D out(g);
  if (p.gamma != 0.0) {
    // affinity weight: -gamma * lap h(phi0), shared with the energy via parts
    ScalarField2D hphi0(g);
    for (int k = 0; k < out.size(); ++k) hphi0[k] = h_poly(s.phi0[k]);
    out = ops.laplacian(hphi0);
    out.scale(-p.gamma);
  }
  for (int k = 0; k < out.size(); ++k) {
    const double w = out[k];
    out[k] = g_well_prime(s.psi[k]) +
             (p.beta_psi * (1.0 - S[k]) + w) * h_prime(s.psi[k]);
  }
  return out;
}

double volume(int m, const NuclearState& s, const SpectralOps& ops) {
  if (m < 0 || m >= static_cast<int>(s.phi.size()))
    throw std::invalid_argument("volume: chromosome index out of range");
  const ScalarField2D& f = s.phi[m];
  ScalarField2D tmp(f.grid_ptr());
  for (int k = 0; k < f.size(); ++k) tmp[k] = h_poly(f[k]);
  return ops.integrate(tmp);
}

double hetero_volume(int m, const NuclearState& s, const SpectralOps& ops) {
  if (m < 0 || m >= static_cast<int>(s.phi.size()))
    throw std::invalid_argument("hetero_volume: chromosome index out of range");
  const ScalarField2D& f = s.phi[m];
  ScalarField2D tmp(f.grid_ptr());
  for (int k = 0; k < f.size(); ++k) tmp[k] = h_poly(f[k]) * h_poly(s.psi[k]);
  return ops.integrate(tmp);
}

double nucleus_volume(const NuclearState& s, const SpectralOps& ops) {
  ScalarField2D tmp(s.phi0.grid_ptr());
  for (int k = 0; k < tmp.size(); ++k) tmp[k] = 1.0 - h_poly(s.phi0[k]);
  return ops.integrate(tmp);
}

}  // namespace nar
