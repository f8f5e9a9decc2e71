#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dense_lu.hpp"
#include "nar/schemes.hpp"
#include "schemes_detail.hpp"

namespace nar {

using detail::StepContext;

namespace {

// Kahan-compensated accumulator
struct Acc {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

// non-quadratic energy of explicit fields: double wells plus interactions,
// with the lamina entering through cached h(phi0) and the affinity weight
// W = -gamma lap h(phi0)
double etilde_direct(const std::vector<ScalarField2D>& phi, const ScalarField2D& psi,
                     const ScalarField2D& hphi0, const ScalarField2D& W,
                     const ModelParams& p, double cell) {
  const int npts = psi.size();
  const int n = static_cast<int>(phi.size());
  Acc acc;
  for (int k = 0; k < npts; ++k) {
    double S = 0.0, Q = 0.0, wells = 0.0;
    for (int m = 0; m < n; ++m) {
      const double x = phi[m][k];
      const double hx = h_poly(x);
      S += hx;
      Q += hx * hx;
      wells += g_well(x);
    }
    const double hw = h_poly(psi[k]);
    acc.add(wells + g_well(psi[k]) + p.beta0 * hphi0[k] * S +
            p.beta_psi * (1.0 - S) * hw + p.beta_phi * (S * S - Q) + W[k] * hw);
  }
  return acc.s * cell;
}

// The stabilized step couples all multipliers through one nonlinear system:
// 2n volume constraints plus the discrete energy balance row that defines R.
// Everything outside Etilde(u, Psi) is affine in z = (lambda, eta, R), so
// those inner products are tabulated once.
struct StableSystem {
  const StepInputs* in = nullptr;
  const StepContext* c = nullptr;
  int n = 0;
  double cell = 0.0;
  double Et_n = 0.0;  // Etilde at t^n

  ScalarField2D hphi0, W;
  std::vector<ScalarField2D> diffb;  // phi base - phi^n
  ScalarField2D psid;                // psi base - psi^n

  // per chromosome: inner products of a weight with {diffb, vol, het, diss}
  std::vector<std::array<double, 4>> chp, chh, cP;
  // psi side: weight against {psid, het_0..het_{n-1}, diss}
  std::vector<double> cQ;
  std::vector<std::vector<double>> chf;

  // scratch reused across evaluations
  std::vector<ScalarField2D> hm;
  ScalarField2D S, Qq, hw;

  double phi_dot(const std::array<double, 4>& t, const std::vector<double>& z,
                 int m) const {
    return t[0] + z[m] * t[1] + z[n + m] * t[2] + z[2 * n] * t[3];
  }
  double psi_dot(const std::vector<double>& t, const std::vector<double>& z) const {
    double s = t[0] + z[2 * n] * t[n + 1];
    for (int j = 0; j < n; ++j) s += z[n + j] * t[1 + j];
    return s;
  }

  // residual: F[0..n-1] volumes, F[n..2n-1] heterochromatin volumes, F[2n] energy
  void eval(const std::vector<double>& z, std::vector<double>& F) {
    const int npts = S.size();
    const double R = z[2 * n];
    double* ps = S.data();
    double* pq = Qq.data();
    for (int k = 0; k < npts; ++k) {
      ps[k] = 0.0;
      pq[k] = 0.0;
    }
    Acc wells;
    for (int m = 0; m < n; ++m) {
      const double lam = z[m], eta = z[n + m];
      const double* b = c->phi_sub[m].base.data();
      const double* v = c->phi_sub[m].vol.data();
      const double* h = c->phi_sub[m].het.data();
      const double* d = c->phi_sub[m].diss.data();
      double* out = hm[m].data();
      Acc vol;
      for (int k = 0; k < npts; ++k) {
        const double u = b[k] + lam * v[k] + eta * h[k] + R * d[k];
        const double hu = h_poly(u);
        out[k] = hu;
        ps[k] += hu;
        pq[k] += hu * hu;
        wells.add(g_well(u));
        vol.add(hu);
      }
      F[m] = vol.s * cell - c->Vt[m];
    }
    {
      const double* b = c->psi_sub.base.data();
      const double* d = c->psi_sub.diss.data();
      double* out = hw.data();
      Acc w;
      for (int k = 0; k < npts; ++k) {
        double u = b[k] + R * d[k];
        for (int j = 0; j < n; ++j) u += z[n + j] * c->psi_sub.het[j][k];
        out[k] = h_poly(u);
        w.add(g_well(u));
      }
      wells.add(w.s);
    }
    const ModelParams& p = in->params;
    Acc inter;
    for (int k = 0; k < npts; ++k)
      inter.add(p.beta0 * hphi0[k] * ps[k] + p.beta_psi * (1.0 - ps[k]) * hw[k] +
                p.beta_phi * (ps[k] * ps[k] - pq[k]) + W[k] * hw[k]);
    const double Et = (wells.s + inter.s) * cell;

    for (int m = 0; m < n; ++m) {
      Acc dot;
      const double* a = hm[m].data();
      const double* b = hw.data();
      for (int k = 0; k < npts; ++k) dot.add(a[k] * b[k]);
      F[n + m] = dot.s * cell - c->vt[m];
    }

    // energy row: change in Etilde balanced against the multiplier work
    double fe = Et - Et_n;
    for (int m = 0; m < n; ++m) {
      fe -= R * phi_dot(cP[m], z, m);
      fe += z[m] * phi_dot(chp[m], z, m);
      fe += z[n + m] * (phi_dot(chh[m], z, m) + psi_dot(chf[m], z));
    }
    fe -= R * psi_dot(cQ, z);
    F[2 * n] = fe;
  }
};

}  // namespace

StepResult step_energy_stable(const StepInputs& in, const SpectralOps& ops) {
  detail::validate_inputs(in, "step_energy_stable");
  if (in.params.mobility == 0.0) return detail::frozen_step(in);
  {
    const double t = in.now.t;
    const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (std::abs(t) + 1.0);
    if (!in.sched.frozen_at(t + slack))
      throw std::invalid_argument(
          "step_energy_stable: requires frozen schedules (t >= t0 and no moving targets)");
  }
  StepContext c = detail::build_context(SchemeKind::EnergyStable, in, ops);
  const int n = static_cast<int>(in.now.phi.size());
  const auto g = in.now.phi0.grid_ptr();
  const double cell = ops.grid().cell_area();

  StableSystem sys;
  sys.in = &in;
  sys.c = &c;
  sys.n = n;
  sys.cell = cell;
  sys.hphi0 = detail::apply_h(c.star.phi0);
  if (in.params.gamma != 0.0) {
    sys.W = ops.laplacian(sys.hphi0);
    sys.W.scale(-in.params.gamma);
  } else {
    sys.W = ScalarField2D(g);
  }
  sys.Et_n = etilde_direct(in.now.phi, in.now.psi, sys.hphi0, sys.W, in.params, cell);

  sys.diffb.reserve(n);
  for (int m = 0; m < n; ++m) {
    ScalarField2D d = c.phi_sub[m].base;
    d.add_scaled(in.now.phi[m], -1.0);
    sys.diffb.push_back(std::move(d));
  }
  sys.psid = c.psi_sub.base;
  sys.psid.add_scaled(in.now.psi, -1.0);

  // affine coefficient tables for the energy row
  ScalarField2D hs = detail::apply_h(c.star.psi);
  ScalarField2D hps = detail::apply_h_prime(c.star.psi);
  sys.chp.resize(n);
  sys.chh.resize(n);
  sys.cP.resize(n);
  sys.chf.assign(n, std::vector<double>(n + 2, 0.0));
  sys.cQ.assign(n + 2, 0.0);
  ScalarField2D wfield(g);
  for (int m = 0; m < n; ++m) {
    ScalarField2D hp = detail::apply_h_prime(c.star.phi[m]);
    const std::array<const ScalarField2D*, 4> basis = {
        &sys.diffb[m], &c.phi_sub[m].vol, &c.phi_sub[m].het, &c.phi_sub[m].diss};
    for (int j = 0; j < 4; ++j) sys.chp[m][j] = ops.inner_product(hp, *basis[j]);
    for (int k = 0; k < wfield.size(); ++k) wfield[k] = hp[k] * hs[k];
    for (int j = 0; j < 4; ++j) sys.chh[m][j] = ops.inner_product(wfield, *basis[j]);
    for (int j = 0; j < 4; ++j) sys.cP[m][j] = ops.inner_product(c.dphi_star[m], *basis[j]);
  }
  {
    std::vector<const ScalarField2D*> basis;
    basis.push_back(&sys.psid);
    for (int j = 0; j < n; ++j) basis.push_back(&c.psi_sub.het[j]);
    basis.push_back(&c.psi_sub.diss);
    for (size_t j = 0; j < basis.size(); ++j)
      sys.cQ[j] = ops.inner_product(c.dpsi_star, *basis[j]);
    for (int m = 0; m < n; ++m) {
      for (int k = 0; k < wfield.size(); ++k)
        wfield[k] = h_poly(c.star.phi[m][k]) * hps[k];
      for (size_t j = 0; j < basis.size(); ++j)
        sys.chf[m][j] = ops.inner_product(wfield, *basis[j]);
    }
  }

  sys.hm.assign(n, ScalarField2D(g));
  sys.S = ScalarField2D(g);
  sys.Qq = ScalarField2D(g);
  sys.hw = ScalarField2D(g);

  // damped Newton on (lambda, eta, R) with a finite-difference Jacobian that
  // is reused until progress stalls
  const int dim = 2 * n + 1;
  MultiplierRecord rec = detail::init_record(in, n);
  std::vector<double> z(dim);
  for (int m = 0; m < n; ++m) {
    z[m] = rec.lambda[m];
    z[n + m] = rec.eta[m];
  }
  z[2 * n] = rec.R;

  std::vector<double> F(dim), Ft(dim), Fp(dim), zt(dim), zp(dim), dz(dim);
  std::vector<double> J(static_cast<size_t>(dim) * dim);
  std::vector<int> perm;
  sys.eval(z, F);
  double res = detail::linf(F);
  bool have_jac = false;
  int stalls = 0;
  int it = 0;
  for (; it < in.opts.newton_max_iter && res > c.tol; ++it) {
    ++rec.newton_iters;
    if (!have_jac) {
      for (int j = 0; j < dim; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(z[j]));
        zp = z;
        zp[j] += h;
        sys.eval(zp, Fp);
        for (int r = 0; r < dim; ++r)
          J[static_cast<size_t>(r) * dim + j] = (Fp[r] - F[r]) / h;
      }
      std::vector<double> lu = J;
      try {
        perm = detail::lu_factor(lu, dim);
      } catch (const detail::SingularMatrix&) {
        throw StepFailure("stabilized multiplier system has a singular Jacobian", res,
                          rec.newton_iters);
      }
      J.swap(lu);  // keep the factorization
      have_jac = true;
    }
    detail::lu_solve(J, perm, dim, F, dz);

    double s = 1.0;
    bool ok = false;
    for (int half = 0; half < 8; ++half) {
      for (int j = 0; j < dim; ++j) zt[j] = z[j] - s * dz[j];
      sys.eval(zt, Ft);
      if (detail::linf(Ft) < res) {
        ok = true;
        break;
      }
      if (half + 1 < 8) s *= 0.5;
    }
    z = zt;
    F = Ft;
    const double newres = detail::linf(F);
    // a stall or weak contraction means the frozen Jacobian is stale
    if (!ok || newres > 0.5 * res) {
      have_jac = false;
      stalls = ok ? 0 : stalls + 1;
      if (stalls >= 3)
        throw StepFailure("stabilized multiplier solve stalled, residual " +
                              std::to_string(newres),
                          newres, rec.newton_iters);
    } else {
      stalls = 0;
    }
    res = newres;
  }
  if (res > c.tol)
    throw StepFailure("stabilized multiplier solve did not converge, residual " +
                          std::to_string(res),
                      res, rec.newton_iters);

  for (int m = 0; m < n; ++m) {
    rec.lambda[m] = z[m];
    rec.eta[m] = z[n + m];
  }
  rec.R = z[2 * n];
  rec.residual_inf = res;

  StepResult out;
  out.state.t = c.t_next;
  out.state.phi0 = nucleus_field(c.t_next, in.sched, g);
  out.state.phi.reserve(n);
  for (int m = 0; m < n; ++m) {
    ScalarField2D f = c.phi_sub[m].base;
    f.add_scaled(c.phi_sub[m].vol, rec.lambda[m]);
    f.add_scaled(c.phi_sub[m].het, rec.eta[m]);
    f.add_scaled(c.phi_sub[m].diss, rec.R);
    out.state.phi.push_back(std::move(f));
  }
  ScalarField2D psi = c.psi_sub.base;
  for (int m = 0; m < n; ++m) psi.add_scaled(c.psi_sub.het[m], rec.eta[m]);
  psi.add_scaled(c.psi_sub.diss, rec.R);
  out.state.psi = std::move(psi);
  out.multipliers = std::move(rec);
  return out;
}

}  // namespace nar
