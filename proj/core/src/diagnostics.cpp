#include "nar/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nar {

DiagnosticsRow measure(const NuclearState& s, const ModelParams& p, const SpectralOps& ops,
                       const MultiplierRecord* mu) {
  const int n = static_cast<int>(s.phi.size());
  DiagnosticsRow row;
  row.t = s.t;
  row.energy = energy_total(s, p, ops);
  row.V.resize(n);
  row.v.resize(n);
  row.rho.resize(n);
  for (int m = 0; m < n; ++m) {
    row.V[m] = volume(m, s, ops);
    row.v[m] = hetero_volume(m, s, ops);
    row.rho[m] = row.V[m] > 1e-14 ? row.v[m] / row.V[m] : 0.0;
    row.mean_V += row.V[m];
    row.mean_v += row.v[m];
  }
  row.nucleus_vol = nucleus_volume(s, ops);
  row.packing = row.mean_V - row.nucleus_vol;
  if (n > 0) {
    row.mean_V /= n;
    row.mean_v /= n;
  }
  if (mu) {
    row.lambda = mu->lambda;
    row.eta = mu->eta;
    row.R = mu->R;
    row.residual_inf = mu->residual_inf;
    row.newton_iters = mu->newton_iters;
  } else {
    row.lambda.assign(n, 0.0);
    row.eta.assign(n, 0.0);
  }
  return row;
}

double envelope_localization(const ScalarField2D& psi, double rx, double ry, double band) {
  if (!(rx > 0.0) || !(ry > 0.0))
    throw std::invalid_argument("envelope_localization: semi-axes must be positive");
  if (!(band > 0.0))
    throw std::invalid_argument("envelope_localization: band must be positive");
  const Grid2D& g = psi.grid();
  double total = 0.0, near = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y(j);
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      const double mass = h_poly(psi.at(i, j));
      total += mass;
      const double r = std::sqrt((x / rx) * (x / rx) + (y / ry) * (y / ry));
      if (std::abs(r - 1.0) < band) near += mass;
    }
  }
  if (total <= 1e-12)
    throw std::domain_error("envelope_localization: no heterochromatin mass");
  return near / total;
}

int cluster_count(const ScalarField2D& psi, double threshold, int min_cells) {
  const Grid2D& g = psi.grid();
  const int nx = g.nx, ny = g.ny;
  std::vector<char> in(psi.size()), seen(psi.size(), 0);
  for (int k = 0; k < psi.size(); ++k) in[k] = h_poly(psi[k]) > threshold;

  int count = 0;
  std::vector<int> stack;
  for (int start = 0; start < psi.size(); ++start) {
    if (!in[start] || seen[start]) continue;
    int cells = 0;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      ++cells;
      const int i = k % nx, j = k / nx;
      const int nb[4] = {((i + 1) % nx) + j * nx, ((i + nx - 1) % nx) + j * nx,
                         i + ((j + 1) % ny) * nx, i + ((j + ny - 1) % ny) * nx};
      for (int q : nb)
        if (in[q] && !seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
    }
    if (cells >= min_cells) ++count;
  }
  return count;
}

namespace {

NuclearState advance_fixed(const NuclearState& s0, const ModelParams& p,
                           const ScheduleSet& sched, const SolverOptions& opts,
                           SchemeKind kind, double dt, int steps, const SpectralOps& ops) {
  NuclearState prev = s0;
  NuclearState now = s0;
  MultiplierRecord warm;
  const MultiplierRecord* warm_p = nullptr;
  for (int k = 0; k < steps; ++k) {
    StepResult out = step(kind, StepInputs{now, prev, dt, p, sched, opts, warm_p}, ops);
    prev = std::move(now);
    now = std::move(out.state);
    warm = std::move(out.multipliers);
    warm_p = &warm;
  }
  return now;
}

int step_count(double T, double dt, const char* what) {
  const double raw = T / dt;
  const int steps = static_cast<int>(std::llround(raw));
  if (steps < 1 || std::abs(raw - steps) > 1e-9 * raw)
    throw std::invalid_argument(std::string("convergence_study: ") + what +
                                " must divide the horizon evenly");
  return steps;
}

}  // namespace

ConvergenceResult convergence_study(const NuclearState& s0, const ModelParams& p,
                                    const ScheduleSet& sched, const SolverOptions& opts,
                                    SchemeKind kind, std::vector<double> dts, double ref_dt,
                                    double T, const SpectralOps& ops) {
  if (dts.empty()) throw std::invalid_argument("convergence_study: no step sizes");
  if (!(T > 0.0)) throw std::invalid_argument("convergence_study: horizon must be positive");
  std::sort(dts.begin(), dts.end(), std::greater<>());
  for (double dt : dts)
    if (!(dt > 0.0)) throw std::invalid_argument("convergence_study: step sizes must be positive");
  if (!(ref_dt > 0.0) || ref_dt >= dts.back() / 4.0)
    throw std::invalid_argument(
        "convergence_study: reference step must be under a quarter of the smallest dt");

  ConvergenceResult res;
  res.dts = dts;
  const NuclearState ref =
      advance_fixed(s0, p, sched, opts, kind, ref_dt, step_count(T, ref_dt, "ref dt"), ops);

  for (double dt : dts) {
    const NuclearState at =
        advance_fixed(s0, p, sched, opts, kind, dt, step_count(T, dt, "dt"), ops);
    double ep = 0.0;
    for (size_t m = 0; m < at.phi.size(); ++m)
      for (int k = 0; k < at.phi[m].size(); ++k)
        ep = std::max(ep, std::abs(at.phi[m][k] - ref.phi[m][k]));
    double es = 0.0;
    for (int k = 0; k < at.psi.size(); ++k)
      es = std::max(es, std::abs(at.psi[k] - ref.psi[k]));
    res.err_phi.push_back(ep);
    res.err_psi.push_back(es);
  }
  for (size_t i = 0; i + 1 < res.dts.size(); ++i) {
    const double span = std::log2(res.dts[i] / res.dts[i + 1]);
    res.order_phi.push_back(std::log2(res.err_phi[i] / res.err_phi[i + 1]) / span);
    res.order_psi.push_back(std::log2(res.err_psi[i] / res.err_psi[i + 1]) / span);
  }
  return res;
}

}  // namespace nar
