#include <cmath>

#include "dense_lu.hpp"
#include "nar/schemes.hpp"
#include "schemes_detail.hpp"

namespace nar {

using detail::StepContext;

// Linearized volume constraints: h at t^{n+1} is expanded about the
// extrapolated state, which turns both constraints into one dense linear
// system in (lambda, eta).  Unknown ordering: lambda_0..lambda_{n-1},
// eta_0..eta_{n-1}.
StepResult step_linear(const StepInputs& in, const SpectralOps& ops) {
  detail::validate_inputs(in, "step_linear");
  if (in.params.mobility == 0.0) return detail::frozen_step(in);
  StepContext c = detail::build_context(SchemeKind::Linear, in, ops);
  const int n = static_cast<int>(in.now.phi.size());
  const auto g = in.now.phi0.grid_ptr();

  // star-state weights of the linearized constraints
  std::vector<ScalarField2D> hp(n), hh(n), hf(n);
  ScalarField2D hs = detail::apply_h(c.star.psi);
  ScalarField2D hps = detail::apply_h_prime(c.star.psi);
  for (int m = 0; m < n; ++m) {
    hp[m] = detail::apply_h_prime(c.star.phi[m]);
    hh[m] = ScalarField2D(g);
    hf[m] = ScalarField2D(g);
    for (int k = 0; k < hs.size(); ++k) {
      hh[m][k] = hp[m][k] * hs[k];
      hf[m][k] = h_poly(c.star.phi[m][k]) * hps[k];
    }
  }

  const int dim = 2 * n;
  std::vector<double> A(static_cast<size_t>(dim) * dim, 0.0), b(dim, 0.0);
  ScalarField2D diff(g);

  for (int m = 0; m < n; ++m) {
    // volume row: lambda_m and eta_m only
    A[static_cast<size_t>(m) * dim + m] = ops.inner_product(hp[m], c.phi_sub[m].vol);
    A[static_cast<size_t>(m) * dim + n + m] = ops.inner_product(hp[m], c.phi_sub[m].het);
    for (int k = 0; k < diff.size(); ++k) diff[k] = c.phi_sub[m].base[k] - in.now.phi[m][k];
    const double Vn = volume(m, in.now, ops);
    b[m] = c.Vt[m] - Vn - ops.inner_product(hp[m], diff);

    // heterochromatin row: lambda_m, eta_m and, through psi, every eta
    const int r = n + m;
    A[static_cast<size_t>(r) * dim + m] = ops.inner_product(hh[m], c.phi_sub[m].vol);
    A[static_cast<size_t>(r) * dim + n + m] = ops.inner_product(hh[m], c.phi_sub[m].het);
    if (in.opts.coupling == MultiplierCoupling::Full) {
      for (int mm = 0; mm < n; ++mm)
        A[static_cast<size_t>(r) * dim + n + mm] +=
            ops.inner_product(hf[m], c.psi_sub.het[mm]);
    } else {
      A[static_cast<size_t>(r) * dim + n + m] +=
          ops.inner_product(hf[m], c.psi_sub.het[m]);
    }
    const double vn = hetero_volume(m, in.now, ops);
    double rhs = c.vt[m] - vn - ops.inner_product(hh[m], diff);
    for (int k = 0; k < diff.size(); ++k) diff[k] = c.psi_sub.base[k] - in.now.psi[k];
    rhs -= ops.inner_product(hf[m], diff);
    b[m + n] = rhs;
  }

  std::vector<double> z;
  try {
    z = detail::dense_solve(A, dim, b);
  } catch (const detail::SingularMatrix& e) {
    const std::string which =
        e.row < n ? "volume constraint of chromosome " + std::to_string(e.row)
                  : "heterochromatin constraint of chromosome " + std::to_string(e.row - n);
    throw StepFailure("linear multiplier system singular on the " + which, 0.0, 0);
  }
  for (double x : z)
    if (!std::isfinite(x))
      throw StepFailure("linear multiplier solve produced a non-finite value", 0.0, 0);

  // residual of the solved system, for the record
  double res = 0.0;
  for (int r = 0; r < dim; ++r) {
    double ax = 0.0;
    for (int cidx = 0; cidx < dim; ++cidx) ax += A[static_cast<size_t>(r) * dim + cidx] * z[cidx];
    res = std::max(res, std::abs(ax - b[r]));
  }

  MultiplierRecord rec;
  rec.lambda.assign(z.begin(), z.begin() + n);
  rec.eta.assign(z.begin() + n, z.end());
  rec.R = 1.0;
  rec.residual_inf = res;
  rec.newton_iters = 1;

  StepResult out;
  out.state.t = c.t_next;
  out.state.phi0 = nucleus_field(c.t_next, in.sched, g);
  out.state.phi.reserve(n);
  for (int m = 0; m < n; ++m) {
    ScalarField2D f = c.phi_sub[m].base;
    f.add_scaled(c.phi_sub[m].vol, rec.lambda[m]);
    f.add_scaled(c.phi_sub[m].het, rec.eta[m]);
    out.state.phi.push_back(std::move(f));
  }
  ScalarField2D psi = c.psi_sub.base;
  for (int m = 0; m < n; ++m) psi.add_scaled(c.psi_sub.het[m], rec.eta[m]);
  out.state.psi = std::move(psi);
  out.multipliers = std::move(rec);
  return out;
}

}  // namespace nar
