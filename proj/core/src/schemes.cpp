#include "nar/schemes.hpp"

#include <cmath>

#include "dense_lu.hpp"
#include "schemes_detail.hpp"

namespace nar {

NuclearState extrapolate(const NuclearState& now, const NuclearState& prev, double dt,
                         const ScheduleSet& sched) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("extrapolate: dt must be positive and finite");
  NuclearState star;
  star.t = now.t + 0.5 * dt;
  star.phi0 = nucleus_field(star.t, sched, now.phi0.grid_ptr());
  star.psi = ScalarField2D(now.psi.grid_ptr());
  for (int k = 0; k < star.psi.size(); ++k)
    star.psi[k] = 1.5 * now.psi[k] - 0.5 * prev.psi[k];
  star.phi.reserve(now.phi.size());
  for (size_t m = 0; m < now.phi.size(); ++m) {
    ScalarField2D f(now.phi[m].grid_ptr());
    for (int k = 0; k < f.size(); ++k)
      f[k] = 1.5 * now.phi[m][k] - 0.5 * prev.phi[m][k];
    star.phi.push_back(std::move(f));
  }
  return star;
}

namespace detail {

void validate_inputs(const StepInputs& in, const char* where) {
  in.params.validate();
  validate_state(in.now, in.params, where);
  validate_state(in.prev, in.params, where);
  if (!same_grid(in.now.phi0, in.prev.phi0))
    throw std::invalid_argument(std::string(where) + ": state grids differ");
  if (!(in.dt > 0.0) || !std::isfinite(in.dt))
    throw std::invalid_argument(std::string(where) + ": dt must be positive and finite");
  const size_t n = in.now.phi.size();
  if (in.sched.V.size() != n || in.sched.v.size() != n)
    throw std::invalid_argument(std::string(where) +
                                ": schedule count does not match chromosome count");
}

MultiplierRecord init_record(const StepInputs& in, int n) {
  MultiplierRecord r;
  if (in.warm && static_cast<int>(in.warm->lambda.size()) == n &&
      static_cast<int>(in.warm->eta.size()) == n) {
    r.lambda = in.warm->lambda;
    r.eta = in.warm->eta;
    r.R = in.warm->R;
  } else {
    r.lambda.assign(n, 0.0);
    r.eta.assign(n, 0.0);
    r.R = 1.0;
  }
  return r;
}

StepResult frozen_step(const StepInputs& in) {
  StepResult out;
  out.state = in.now;
  out.state.t = in.now.t + in.dt;
  out.state.phi0 = nucleus_field(out.state.t, in.sched, in.now.phi0.grid_ptr());
  const int n = static_cast<int>(in.now.phi.size());
  out.multipliers.lambda.assign(n, 0.0);
  out.multipliers.eta.assign(n, 0.0);
  out.multipliers.R = 1.0;
  return out;
}

StepContext build_context(SchemeKind kind, const StepInputs& in, const SpectralOps& ops) {
  StepContext c;
  c.t_next = in.now.t + in.dt;
  c.tol = in.opts.tol_abs(ops.grid().area());
  c.star = extrapolate(in.now, in.prev, in.dt, in.sched);
  c.dphi_star = dEtilde_dphi_all(c.star, in.params, ops);
  c.dpsi_star = dEtilde_dpsi(c.star, in.params, ops);
  if (in.opts.dealias) {
    for (auto& d : c.dphi_star) d = ops.dealias_23(d);
    c.dpsi_star = ops.dealias_23(c.dpsi_star);
  }
  const int n = static_cast<int>(in.now.phi.size());
  c.phi_sub.reserve(n);
  for (int m = 0; m < n; ++m)
    c.phi_sub.push_back(solve_substeps_phi(m, kind, in, c.star, ops, &c.dphi_star[m]));
  c.psi_sub = solve_substeps_psi(kind, in, c.star, ops, &c.dpsi_star);
  c.Vt.resize(n);
  c.vt.resize(n);
  for (int m = 0; m < n; ++m) {
    c.Vt[m] = in.sched.V[m].value(c.t_next);
    c.vt[m] = in.sched.v[m].value(c.t_next);
  }
  return c;
}

}  // namespace detail

using detail::StepContext;

PhiSubsteps solve_substeps_phi(int m, SchemeKind kind, const StepInputs& in,
                               const NuclearState& star, const SpectralOps& ops,
                               const ScalarField2D* d_star) {
  if (m < 0 || m >= static_cast<int>(in.now.phi.size()))
    throw std::invalid_argument("solve_substeps_phi: chromosome index out of range");
  if (!(in.params.mobility > 0.0))
    throw std::invalid_argument("solve_substeps_phi: requires positive mobility");
  const double a = 1.0 / (in.params.mobility * in.dt);
  const double b = 0.5 * in.params.eps2_phi;
  const auto g = in.now.phi0.grid_ptr();

  ScalarField2D dE;
  if (d_star) {
    dE = *d_star;
  } else {
    dE = dEtilde_dphi(m, star, in.params, ops);
    if (in.opts.dealias) dE = ops.dealias_23(dE);
  }

  PhiSubsteps out;
  const ScalarField2D& fn = in.now.phi[m];
  ScalarField2D lap_n = ops.laplacian(fn);
  ScalarField2D rhs(g);
  // base carries the old state and, except in the stabilized scheme, the
  // explicit energy derivative; the Crank-Nicolson half of the laplacian
  // sits on the right hand side
  for (int k = 0; k < rhs.size(); ++k) {
    rhs[k] = a * fn[k] + b * lap_n[k];
    if (kind != SchemeKind::EnergyStable) rhs[k] -= dE[k];
  }
  out.base = ops.solve_modified_helmholtz(a, b, rhs);

  ScalarField2D hp(g);
  for (int k = 0; k < hp.size(); ++k) hp[k] = h_prime(star.phi[m][k]);
  if (in.opts.dealias) hp = ops.dealias_23(hp);
  out.vol = ops.solve_modified_helmholtz(a, b, hp);

  for (int k = 0; k < rhs.size(); ++k) rhs[k] = hp[k] * h_poly(star.psi[k]);
  if (in.opts.dealias) rhs = ops.dealias_23(rhs);
  out.het = ops.solve_modified_helmholtz(a, b, rhs);

  if (kind == SchemeKind::EnergyStable) {
    for (int k = 0; k < rhs.size(); ++k) rhs[k] = -dE[k];
    out.diss = ops.solve_modified_helmholtz(a, b, rhs);
  }
  return out;
}

PsiSubsteps solve_substeps_psi(SchemeKind kind, const StepInputs& in,
                               const NuclearState& star, const SpectralOps& ops,
                               const ScalarField2D* d_star) {
  if (!(in.params.mobility > 0.0))
    throw std::invalid_argument("solve_substeps_psi: requires positive mobility");
  const double a = 1.0 / (in.params.mobility * in.dt);
  const double b = 0.5 * in.params.eps2_psi;
  const auto g = in.now.phi0.grid_ptr();

  ScalarField2D dE;
  if (d_star) {
    dE = *d_star;
  } else {
    dE = dEtilde_dpsi(star, in.params, ops);
    if (in.opts.dealias) dE = ops.dealias_23(dE);
  }

  PsiSubsteps out;
  const ScalarField2D& fn = in.now.psi;
  ScalarField2D lap_n = ops.laplacian(fn);
  ScalarField2D rhs(g);
  for (int k = 0; k < rhs.size(); ++k) {
    rhs[k] = a * fn[k] + b * lap_n[k];
    if (kind != SchemeKind::EnergyStable) rhs[k] -= dE[k];
  }
  out.base = ops.solve_modified_helmholtz(a, b, rhs);

  ScalarField2D hps(g);
  for (int k = 0; k < hps.size(); ++k) hps[k] = h_prime(star.psi[k]);
  out.het.reserve(star.phi.size());
  for (const auto& f : star.phi) {
    for (int k = 0; k < rhs.size(); ++k) rhs[k] = h_poly(f[k]) * hps[k];
    if (in.opts.dealias) rhs = ops.dealias_23(rhs);
    out.het.push_back(ops.solve_modified_helmholtz(a, b, rhs));
  }

  if (kind == SchemeKind::EnergyStable) {
    for (int k = 0; k < rhs.size(); ++k) rhs[k] = -dE[k];
    out.diss = ops.solve_modified_helmholtz(a, b, rhs);
  }
  return out;
}

namespace {

// residual and Jacobian of the two volume constraints of chromosome m,
// evaluated in one fused pass; psi_base excludes this chromosome's eta
struct PairEval {
  double F1, F2;
  double J11, J12, J21, J22;
};

PairEval eval_pair(const PhiSubsteps& ps, const ScalarField2D& psi_base,
                   const ScalarField2D& psi_het, double lambda, double eta, double Vt,
                   double vt, double cell) {
  PairEval e{};
  double c1 = 0.0, c2 = 0.0;  // Kahan compensation for the two residuals
  const int n = ps.base.size();
  const double* pb = ps.base.data();
  const double* pv = ps.vol.data();
  const double* ph = ps.het.data();
  const double* qb = psi_base.data();
  const double* qh = psi_het.data();
  for (int k = 0; k < n; ++k) {
    const double u = pb[k] + lambda * pv[k] + eta * ph[k];
    const double w = qb[k] + eta * qh[k];
    const double hu = h_poly(u), hpu = h_prime(u);
    const double hw = h_poly(w), hpw = h_prime(w);
    {
      double y = hu - c1, t = e.F1 + y;
      c1 = (t - e.F1) - y;
      e.F1 = t;
    }
    {
      double y = hu * hw - c2, t = e.F2 + y;
      c2 = (t - e.F2) - y;
      e.F2 = t;
    }
    e.J11 += hpu * pv[k];
    e.J12 += hpu * ph[k];
    e.J21 += hpu * hw * pv[k];
    e.J22 += hpu * hw * ph[k] + hu * hpw * qh[k];
  }
  e.F1 = e.F1 * cell - Vt;
  e.F2 = e.F2 * cell - vt;
  e.J11 *= cell;
  e.J12 *= cell;
  e.J21 *= cell;
  e.J22 *= cell;
  return e;
}

double pair_res(const PairEval& e) { return std::max(std::abs(e.F1), std::abs(e.F2)); }

}  // namespace

StepResult step_volume_preserving(const StepInputs& in, const SpectralOps& ops) {
  detail::validate_inputs(in, "step_volume_preserving");
  if (in.params.mobility == 0.0) return detail::frozen_step(in);
  StepContext c = detail::build_context(SchemeKind::VolumePreserving, in, ops);
  const int n = static_cast<int>(in.now.phi.size());
  const double cell = ops.grid().cell_area();
  MultiplierRecord rec = detail::init_record(in, n);

  // current psi for the present multipliers
  ScalarField2D psi_cur = c.psi_sub.base;
  for (int m = 0; m < n; ++m)
    if (rec.eta[m] != 0.0) psi_cur.add_scaled(c.psi_sub.het[m], rec.eta[m]);

  ScalarField2D psi_base(psi_cur.grid_ptr());
  double global_res = 0.0;
  int sweeps = 0;
  for (; sweeps < in.opts.max_sweeps; ++sweeps) {
    for (int m = 0; m < n; ++m) {
      psi_base = psi_cur;
      psi_base.add_scaled(c.psi_sub.het[m], -rec.eta[m]);
      double lam = rec.lambda[m], eta = rec.eta[m];

      PairEval e = eval_pair(c.phi_sub[m], psi_base, c.psi_sub.het[m], lam, eta,
                             c.Vt[m], c.vt[m], cell);
      int stalls = 0;
      for (int it = 0; it < in.opts.newton_max_iter && pair_res(e) > 0.5 * c.tol; ++it) {
        ++rec.newton_iters;
        const double det = e.J11 * e.J22 - e.J12 * e.J21;
        if (!(std::abs(det) > 1e-300) || !std::isfinite(det))
          throw StepFailure("volume Newton singular for chromosome " + std::to_string(m),
                            pair_res(e), rec.newton_iters);
        const double dl = (e.F1 * e.J22 - e.F2 * e.J12) / det;
        const double de = (e.J11 * e.F2 - e.J21 * e.F1) / det;
        // halve the step while the residual grows
        double s = 1.0;
        PairEval trial{};
        bool ok = false;
        for (int half = 0; half < 8; ++half) {
          trial = eval_pair(c.phi_sub[m], psi_base, c.psi_sub.het[m], lam - s * dl,
                            eta - s * de, c.Vt[m], c.vt[m], cell);
          if (pair_res(trial) < pair_res(e)) {
            ok = true;
            break;
          }
          if (half + 1 < 8) s *= 0.5;
        }
        lam -= s * dl;
        eta -= s * de;
        e = trial;
        if (!ok && ++stalls >= 2) break;  // let the sweep move the coupling
      }
      rec.lambda[m] = lam;
      rec.eta[m] = eta;
      psi_cur = psi_base;
      psi_cur.add_scaled(c.psi_sub.het[m], eta);
    }

    // true residual of every constraint with the final psi of this sweep
    global_res = 0.0;
    for (int m = 0; m < n; ++m) {
      ScalarField2D none(psi_cur.grid_ptr());
      PairEval e = eval_pair(c.phi_sub[m], psi_cur, none, rec.lambda[m], rec.eta[m],
                             c.Vt[m], c.vt[m], cell);
      global_res = std::max(global_res, pair_res(e));
    }
    if (global_res <= c.tol) break;
  }
  if (global_res > c.tol)
    throw StepFailure("volume constraints not met after " + std::to_string(sweeps) +
                          " sweeps, residual " + std::to_string(global_res),
                      global_res, rec.newton_iters);

  rec.residual_inf = global_res;
  rec.R = 1.0;
  StepResult out;
  out.state.t = c.t_next;
  out.state.phi0 = nucleus_field(c.t_next, in.sched, in.now.phi0.grid_ptr());
  out.state.phi.reserve(n);
  for (int m = 0; m < n; ++m) {
    ScalarField2D f = c.phi_sub[m].base;
    f.add_scaled(c.phi_sub[m].vol, rec.lambda[m]);
    f.add_scaled(c.phi_sub[m].het, rec.eta[m]);
    out.state.phi.push_back(std::move(f));
  }
  out.state.psi = std::move(psi_cur);
  out.multipliers = std::move(rec);
  return out;
}

StepResult step(SchemeKind kind, const StepInputs& in, const SpectralOps& ops) {
  switch (kind) {
    case SchemeKind::VolumePreserving:
      return step_volume_preserving(in, ops);
    case SchemeKind::Linear:
      return step_linear(in, ops);
    case SchemeKind::EnergyStable:
      return step_energy_stable(in, ops);
  }
  throw std::logic_error("step: unknown scheme");
}

}  // namespace nar
