#include "multiplier_oracles.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "nar/geometry.hpp"

namespace nar::test {

namespace {

double plain_integral_h(const ScalarField2D& f, double cell) {
  long double s = 0.0L;
  for (int k = 0; k < f.size(); ++k) s += h_poly(f[k]);
  return static_cast<double>(s) * cell;
}

double plain_dot(const ScalarField2D& f, const ScalarField2D& g, double cell) {
  long double s = 0.0L;
  for (int k = 0; k < f.size(); ++k) s += static_cast<long double>(f[k]) * g[k];
  return static_cast<double>(s) * cell;
}

// the explicitly treated energy, written out directly from its integrand
double etilde_plain(const std::vector<ScalarField2D>& phi, const ScalarField2D& psi,
                    const ScalarField2D& hphi0, const ScalarField2D& W,
                    const ModelParams& p, double cell) {
  const int n = static_cast<int>(phi.size());
  long double acc = 0.0L;
  for (int k = 0; k < psi.size(); ++k) {
    double S = 0.0, Q = 0.0, wells = g_well(psi[k]);
    for (int m = 0; m < n; ++m) {
      const double hx = h_poly(phi[m][k]);
      S += hx;
      Q += hx * hx;
      wells += g_well(phi[m][k]);
    }
    const double hw = h_poly(psi[k]);
    acc += wells + p.beta0 * hphi0[k] * S + p.beta_psi * (1.0 - S) * hw +
           p.beta_phi * (S * S - Q) + W[k] * hw;
  }
  return static_cast<double>(acc) * cell;
}

// Rebuilt step pieces: extrapolated weights, Helmholtz substeps, targets.
struct Pack {
  int n = 0;
  double cell = 0.0;
  double t_next = 0.0;
  NuclearState star;
  std::vector<ScalarField2D> dphi_star;
  ScalarField2D dpsi_star;
  std::vector<ScalarField2D> base, vol, het, diss;  // phi substeps
  ScalarField2D psibase, psidiss;
  std::vector<ScalarField2D> psihet;
  std::vector<ScalarField2D> hp, hh, hf;  // h'(phi*), h'(phi*)h(psi*), h(phi*)h'(psi*)
  ScalarField2D hphi0, W;
  std::vector<double> Vt, vt;
  double etilde_n = 0.0;
};

Pack build_pack(SchemeKind kind, const StepInputs& in, const SpectralOps& ops) {
  Pack pk;
  const auto g = in.now.phi0.grid_ptr();
  pk.n = static_cast<int>(in.now.phi.size());
  pk.cell = g->cell_area();
  pk.t_next = in.now.t + in.dt;
  pk.star = extrapolate(in.now, in.prev, in.dt, in.sched);
  pk.dphi_star = dEtilde_dphi_all(pk.star, in.params, ops);
  pk.dpsi_star = dEtilde_dpsi(pk.star, in.params, ops);

  const double a_phi = 1.0 / (in.params.mobility * in.dt);
  const double b_phi = 0.5 * in.params.eps2_phi;
  const double a_psi = a_phi;
  const double b_psi = 0.5 * in.params.eps2_psi;
  const bool stabilized = kind == SchemeKind::EnergyStable;

  ScalarField2D hs(g), hps(g);
  for (int k = 0; k < hs.size(); ++k) {
    hs[k] = h_poly(pk.star.psi[k]);
    hps[k] = h_prime(pk.star.psi[k]);
  }

  ScalarField2D rhs(g);
  for (int m = 0; m < pk.n; ++m) {
    ScalarField2D hp(g), hh(g), hf(g);
    for (int k = 0; k < hp.size(); ++k) {
      hp[k] = h_prime(pk.star.phi[m][k]);
      hh[k] = hp[k] * hs[k];
      hf[k] = h_poly(pk.star.phi[m][k]) * hps[k];
    }

    ScalarField2D lap_n = ops.laplacian(in.now.phi[m]);
    for (int k = 0; k < rhs.size(); ++k) {
      rhs[k] = a_phi * in.now.phi[m][k] + b_phi * lap_n[k];
      if (!stabilized) rhs[k] -= pk.dphi_star[m][k];
    }
    pk.base.push_back(ops.solve_modified_helmholtz(a_phi, b_phi, rhs));
    pk.vol.push_back(ops.solve_modified_helmholtz(a_phi, b_phi, hp));
    pk.het.push_back(ops.solve_modified_helmholtz(a_phi, b_phi, hh));
    if (stabilized) {
      for (int k = 0; k < rhs.size(); ++k) rhs[k] = -pk.dphi_star[m][k];
      pk.diss.push_back(ops.solve_modified_helmholtz(a_phi, b_phi, rhs));
    }
    pk.hp.push_back(std::move(hp));
    pk.hh.push_back(std::move(hh));
    pk.hf.push_back(std::move(hf));
  }

  ScalarField2D lap_n = ops.laplacian(in.now.psi);
  for (int k = 0; k < rhs.size(); ++k) {
    rhs[k] = a_psi * in.now.psi[k] + b_psi * lap_n[k];
    if (!stabilized) rhs[k] -= pk.dpsi_star[k];
  }
  pk.psibase = ops.solve_modified_helmholtz(a_psi, b_psi, rhs);
  for (int m = 0; m < pk.n; ++m) {
    for (int k = 0; k < rhs.size(); ++k) rhs[k] = h_poly(pk.star.phi[m][k]) * hps[k];
    pk.psihet.push_back(ops.solve_modified_helmholtz(a_psi, b_psi, rhs));
  }
  if (stabilized) {
    for (int k = 0; k < rhs.size(); ++k) rhs[k] = -pk.dpsi_star[k];
    pk.psidiss = ops.solve_modified_helmholtz(a_psi, b_psi, rhs);
  }

  pk.Vt.resize(pk.n);
  pk.vt.resize(pk.n);
  for (int m = 0; m < pk.n; ++m) {
    pk.Vt[m] = in.sched.V[m].value(pk.t_next);
    pk.vt[m] = in.sched.v[m].value(pk.t_next);
  }

  pk.hphi0 = ScalarField2D(g);
  for (int k = 0; k < pk.hphi0.size(); ++k) pk.hphi0[k] = h_poly(pk.star.phi0[k]);
  if (in.params.gamma != 0.0) {
    pk.W = ops.laplacian(pk.hphi0);
    pk.W.scale(-in.params.gamma);
  } else {
    pk.W = ScalarField2D(g);
  }
  pk.etilde_n =
      etilde_plain(in.now.phi, in.now.psi, pk.hphi0, pk.W, in.params, pk.cell);
  return pk;
}

void assemble_fields(const Pack& pk, const Eigen::VectorXd& z, bool stabilized,
                     std::vector<ScalarField2D>& u, ScalarField2D& Psi) {
  const int n = pk.n;
  const double R = stabilized ? z[2 * n] : 1.0;
  for (int m = 0; m < n; ++m) {
    ScalarField2D f = pk.base[m];
    f.add_scaled(pk.vol[m], z[m]);
    f.add_scaled(pk.het[m], z[n + m]);
    if (stabilized) f.add_scaled(pk.diss[m], R);
    u[m] = std::move(f);
  }
  Psi = pk.psibase;
  for (int m = 0; m < n; ++m) Psi.add_scaled(pk.psihet[m], z[n + m]);
  if (stabilized) Psi.add_scaled(pk.psidiss, R);
}

}  // namespace

OracleSolution oracle_volume_preserving(const StepInputs& in, const SpectralOps& ops) {
  const Pack pk = build_pack(SchemeKind::VolumePreserving, in, ops);
  const int n = pk.n;
  const int dim = 2 * n;
  const double tol = 1e-13 * ops.grid().area();

  std::vector<ScalarField2D> u(n);
  ScalarField2D Psi;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dim), F(dim);

  auto residual = [&](const Eigen::VectorXd& zz, Eigen::VectorXd& FF) {
    assemble_fields(pk, zz, false, u, Psi);
    for (int m = 0; m < n; ++m) {
      long double V = 0.0L, v = 0.0L;
      for (int k = 0; k < Psi.size(); ++k) {
        const double hu = h_poly(u[m][k]);
        V += hu;
        v += hu * h_poly(Psi[k]);
      }
      FF[m] = static_cast<double>(V) * pk.cell - pk.Vt[m];
      FF[n + m] = static_cast<double>(v) * pk.cell - pk.vt[m];
    }
  };

  residual(z, F);
  OracleSolution sol;
  for (int it = 0; it < 100; ++it) {
    if (F.lpNorm<Eigen::Infinity>() <= tol) {
      sol.converged = true;
      break;
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
    for (int m = 0; m < n; ++m) {
      long double jlv = 0.0L, jle = 0.0L, jhv = 0.0L, jhe = 0.0L;
      for (int k = 0; k < Psi.size(); ++k) {
        const double hpu = h_prime(u[m][k]);
        const double hP = h_poly(Psi[k]);
        jlv += hpu * pk.vol[m][k];
        jle += hpu * pk.het[m][k];
        jhv += hpu * pk.vol[m][k] * hP;
        jhe += hpu * pk.het[m][k] * hP;
      }
      J(m, m) = static_cast<double>(jlv) * pk.cell;
      J(m, n + m) = static_cast<double>(jle) * pk.cell;
      J(n + m, m) = static_cast<double>(jhv) * pk.cell;
      J(n + m, n + m) = static_cast<double>(jhe) * pk.cell;
      // psi couples the heterochromatin row of m to every eta
      for (int j = 0; j < n; ++j) {
        long double c = 0.0L;
        for (int k = 0; k < Psi.size(); ++k)
          c += h_poly(u[m][k]) * h_prime(Psi[k]) * pk.psihet[j][k];
        J(n + m, n + j) += static_cast<double>(c) * pk.cell;
      }
    }
    const Eigen::VectorXd dz = J.fullPivLu().solve(-F);
    const double res0 = F.lpNorm<Eigen::Infinity>();
    double s = 1.0;
    Eigen::VectorXd Fs(dim);
    for (int half = 0; half < 10; ++half) {
      residual(z + s * dz, Fs);
      if (Fs.lpNorm<Eigen::Infinity>() < res0) break;
      s *= 0.5;
    }
    z += s * dz;
    F = Fs;
  }
  if (F.lpNorm<Eigen::Infinity>() <= tol) sol.converged = true;

  sol.lambda.assign(z.data(), z.data() + n);
  sol.eta.assign(z.data() + n, z.data() + dim);
  return sol;
}

OracleSolution oracle_linear(const StepInputs& in, const SpectralOps& ops) {
  const Pack pk = build_pack(SchemeKind::Linear, in, ops);
  const int n = pk.n;
  const int dim = 2 * n;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b(dim);
  const auto g = in.now.phi0.grid_ptr();
  ScalarField2D diff(g), psidiff(g);
  for (int k = 0; k < psidiff.size(); ++k)
    psidiff[k] = pk.psibase[k] - in.now.psi[k];

  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < diff.size(); ++k) diff[k] = pk.base[m][k] - in.now.phi[m][k];
    const double Vn = plain_integral_h(in.now.phi[m], pk.cell);
    A(m, m) = plain_dot(pk.hp[m], pk.vol[m], pk.cell);
    A(m, n + m) = plain_dot(pk.hp[m], pk.het[m], pk.cell);
    b[m] = pk.Vt[m] - Vn - plain_dot(pk.hp[m], diff, pk.cell);

    long double vn = 0.0L;
    for (int k = 0; k < diff.size(); ++k)
      vn += h_poly(in.now.phi[m][k]) * h_poly(in.now.psi[k]);
    A(n + m, m) = plain_dot(pk.hh[m], pk.vol[m], pk.cell);
    A(n + m, n + m) = plain_dot(pk.hh[m], pk.het[m], pk.cell);
    for (int j = 0; j < n; ++j)
      A(n + m, n + j) += plain_dot(pk.hf[m], pk.psihet[j], pk.cell);
    b[n + m] = pk.vt[m] - static_cast<double>(vn) * pk.cell -
               plain_dot(pk.hh[m], diff, pk.cell) -
               plain_dot(pk.hf[m], psidiff, pk.cell);
  }

  const Eigen::VectorXd z = A.fullPivLu().solve(b);
  OracleSolution sol;
  sol.converged = (A * z - b).lpNorm<Eigen::Infinity>() < 1e-10;
  sol.lambda.assign(z.data(), z.data() + n);
  sol.eta.assign(z.data() + n, z.data() + dim);
  return sol;
}

OracleSolution oracle_energy_stable(const StepInputs& in, const SpectralOps& ops,
                                    int starts) {
  const Pack pk = build_pack(SchemeKind::EnergyStable, in, ops);
  const int n = pk.n;
  const int dim = 2 * n + 1;
  const double tol = 1e-14 * std::max(1.0, ops.grid().area());

  std::vector<ScalarField2D> u(n);
  ScalarField2D Psi;
  const auto g = in.now.phi0.grid_ptr();
  ScalarField2D du(g), dPsi(g);

  auto residual = [&](const Eigen::VectorXd& z, Eigen::VectorXd& F) {
    assemble_fields(pk, z, true, u, Psi);
    const double R = z[2 * n];
    for (int m = 0; m < n; ++m) {
      long double V = 0.0L, v = 0.0L;
      for (int k = 0; k < Psi.size(); ++k) {
        const double hu = h_poly(u[m][k]);
        V += hu;
        v += hu * h_poly(Psi[k]);
      }
      F[m] = static_cast<double>(V) * pk.cell - pk.Vt[m];
      F[n + m] = static_cast<double>(v) * pk.cell - pk.vt[m];
    }
    // energy row: Etilde change balanced against multiplier work
    double fe = etilde_plain(u, Psi, pk.hphi0, pk.W, in.params, pk.cell) - pk.etilde_n;
    for (int k = 0; k < dPsi.size(); ++k) dPsi[k] = Psi[k] - in.now.psi[k];
    for (int m = 0; m < n; ++m) {
      for (int k = 0; k < du.size(); ++k) du[k] = u[m][k] - in.now.phi[m][k];
      fe -= R * plain_dot(pk.dphi_star[m], du, pk.cell);
      fe += z[m] * plain_dot(pk.hp[m], du, pk.cell);
      fe += z[n + m] * (plain_dot(pk.hh[m], du, pk.cell) +
                        plain_dot(pk.hf[m], dPsi, pk.cell));
    }
    fe -= R * plain_dot(pk.dpsi_star, dPsi, pk.cell);
    F[2 * n] = fe;
  };

  auto newton = [&](Eigen::VectorXd z, Eigen::VectorXd& out) {
    Eigen::VectorXd F(dim), Fp(dim), Fm(dim), Fs(dim);
    residual(z, F);
    for (int it = 0; it < 120; ++it) {
      if (!F.allFinite()) return false;
      if (F.lpNorm<Eigen::Infinity>() <= tol) {
        out = z;
        return true;
      }
      Eigen::MatrixXd J(dim, dim);
      for (int j = 0; j < dim; ++j) {
        const double h = 1e-7 * std::max(1.0, std::abs(z[j]));
        Eigen::VectorXd zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        residual(zp, Fp);
        residual(zm, Fm);
        J.col(j) = (Fp - Fm) / (2.0 * h);
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
      if (!lu.isInvertible()) return false;
      const Eigen::VectorXd dz = lu.solve(-F);
      const double res0 = F.lpNorm<Eigen::Infinity>();
      double s = 1.0;
      bool moved = false;
      for (int half = 0; half < 12; ++half) {
        residual(z + s * dz, Fs);
        if (Fs.allFinite() && Fs.lpNorm<Eigen::Infinity>() < res0) {
          moved = true;
          break;
        }
        s *= 0.5;
      }
      if (!moved) return false;
      z += s * dz;
      F = Fs;
    }
    return F.lpNorm<Eigen::Infinity>() <= tol ? (out = z, true) : false;
  };

  std::vector<Eigen::VectorXd> roots;
  std::vector<int> hits;
  std::mt19937 rng(20240817u);
  std::uniform_real_distribution<double> mult(-2.0, 2.0), rr(-0.5, 3.0);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(dim);
    if (s == 0) {
      z0[2 * n] = 1.0;
    } else {
      for (int j = 0; j < 2 * n; ++j) z0[j] = mult(rng);
      z0[2 * n] = rr(rng);
    }
    Eigen::VectorXd root;
    if (!newton(z0, root)) continue;
    bool matched = false;
    for (size_t r = 0; r < roots.size(); ++r) {
      const double scale = 1.0 + roots[r].lpNorm<Eigen::Infinity>();
      if ((roots[r] - root).lpNorm<Eigen::Infinity>() <= 1e-6 * scale) {
        ++hits[r];
        matched = true;
        break;
      }
    }
    if (!matched) {
      roots.push_back(root);
      hits.push_back(1);
    }
  }

  OracleSolution sol;
  sol.distinct_roots = static_cast<int>(roots.size());
  if (roots.empty()) return sol;
  size_t best = 0;
  for (size_t r = 1; r < roots.size(); ++r)
    if (hits[r] > hits[best]) best = r;
  const Eigen::VectorXd& z = roots[best];
  sol.converged = true;
  sol.lambda.assign(z.data(), z.data() + n);
  sol.eta.assign(z.data() + n, z.data() + 2 * n);
  sol.R = z[2 * n];
  for (const Eigen::VectorXd& r : roots)
    sol.roots.emplace_back(r.data(), r.data() + dim);
  return sol;
}

}  // namespace nar::test
