#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nar/config.hpp"
#include "nar/io.hpp"

namespace fs = std::filesystem;
using namespace nar;

namespace {

SchemePlan plan_from_name(const std::string& name) {
  for (SchemePlan p :
       {SchemePlan::VolumePreserving, SchemePlan::Linear, SchemePlan::EnergyStable,
        SchemePlan::SwitchToLinear, SchemePlan::SwitchToEnergyStable})
    if (name == scheme_plan_name(p)) return p;
  throw std::runtime_error("unknown scheme '" + name +
                           "', use A, B, C, A-then-B or A-then-C");
}

SchemeKind pure_kind(const std::string& name) {
  if (name == "A") return SchemeKind::VolumePreserving;
  if (name == "B") return SchemeKind::Linear;
  if (name == "C") return SchemeKind::EnergyStable;
  throw std::runtime_error("convergence studies need a plain scheme: A, B or C");
}

WarnFn stderr_warn() {
  return [](const std::string& w) { std::fprintf(stderr, "warning: %s\n", w.c_str()); };
}

std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06d.nars", step);
  return buf;
}

int do_run(const std::string& config, const std::string& outdir,
           const std::string& scheme, double dt, double tmax) {
  ScenarioConfig cfg = load_scenario(config);
  if (!scheme.empty()) cfg.plan = plan_from_name(scheme);
  if (dt > 0.0) cfg.dt = dt;
  if (tmax >= 0.0) cfg.t_max = tmax;
  const ScenarioInstance inst = build_scenario(cfg, stderr_warn());

  fs::create_directories(outdir);
  CsvWriter csv((fs::path(outdir) / "diagnostics.csv").string(),
                inst.params.n_chromosomes);
  std::printf("scenario %s: %d chromosomes on %dx%d, scheme %s, dt %g, t_max %g\n",
              config.c_str(), inst.params.n_chromosomes, inst.grid->nx, inst.grid->ny,
              scheme_plan_name(cfg.plan), cfg.dt, cfg.t_max);

  SpectralOps ops(inst.grid);
  RunCallbacks cb;
  cb.on_row = [&](const DiagnosticsRow& row) {
    csv.write(row);
    std::printf("t %-10.6g E %-14.8g residual %-10.3e iters %d\n", row.t,
                row.energy.total, row.residual_inf, row.newton_iters);
    std::fflush(stdout);
  };
  cb.on_snapshot = [&](const NuclearState& s, int step) {
    write_snapshot((fs::path(outdir) / snapshot_name(step)).string(), s);
  };
  cb.on_warning = [](const std::string& w) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  };

  const auto start = std::chrono::steady_clock::now();
  const RunReport rep = run_simulation(inst.initial, inst.params, inst.sched, inst.plan,
                                       ops, cb);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string view =
      (fs::path(outdir) / (png_supported() ? "final.png" : "final.ppm")).string();
  render_composite(view, rep.state);
  std::printf("done: %d steps (%d retries) to t = %g in %.1f s\n", rep.steps,
              rep.halvings, rep.state.t, secs);
  std::printf("outputs in %s\n", outdir.c_str());
  return 0;
}

int do_convergence(const std::string& config, const std::string& scheme,
                   const std::vector<double>& dts, double ref_dt, double T) {
  const ScenarioConfig cfg = load_scenario(config);
  const ScenarioInstance inst = build_scenario(cfg, stderr_warn());
  SpectralOps ops(inst.grid);
  const ConvergenceResult res =
      convergence_study(inst.initial, inst.params, inst.sched, inst.plan.opts,
                        pure_kind(scheme), dts, ref_dt, T, ops);

  std::printf("%12s %14s %14s %11s %11s\n", "dt", "err_phi", "err_psi", "order_phi",
              "order_psi");
  for (size_t i = 0; i < res.dts.size(); ++i) {
    if (i == 0) {
      std::printf("%12.4e %14.6e %14.6e %11s %11s\n", res.dts[i], res.err_phi[i],
                  res.err_psi[i], "-", "-");
    } else {
      std::printf("%12.4e %14.6e %14.6e %11.3f %11.3f\n", res.dts[i], res.err_phi[i],
                  res.err_psi[i], res.order_phi[i - 1], res.order_psi[i - 1]);
    }
  }
  return 0;
}

int do_render(const std::string& snapshot, const std::string& out) {
  const NuclearState s = read_snapshot(snapshot);
  render_composite(out, s);
  std::printf("rendered %s (t = %g, %zu chromosomes) to %s\n", snapshot.c_str(), s.t,
              s.phi.size(), out.c_str());
  return 0;
}

int do_validate(const std::string& config, bool echo) {
  const ScenarioConfig cfg = load_scenario(config);
  int warnings = 0;
  const ScenarioInstance inst = build_scenario(cfg, [&](const std::string& w) {
    ++warnings;
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  });
  if (echo) {
    std::fputs(format_scenario(cfg).c_str(), stdout);
    return 0;
  }
  std::printf("%s is valid\n", config.c_str());
  std::printf("  grid          %dx%d on [-pi, pi)^2\n", inst.grid->nx, inst.grid->ny);
  std::printf("  chromosomes   %d\n", inst.params.n_chromosomes);
  std::printf("  scheme        %s, dt %g, t_max %g\n", scheme_plan_name(cfg.plan), cfg.dt,
              cfg.t_max);
  std::printf("  targets ramp until t0 = %g%s\n", inst.sched.t0(),
              inst.sched.frozen_at(0.0) ? " (already frozen)" : "");
  SpectralOps ops(inst.grid);
  double V0 = 0.0, v0 = 0.0;
  for (int m = 0; m < inst.params.n_chromosomes; ++m) {
    V0 += volume(m, inst.initial, ops);
    v0 += hetero_volume(m, inst.initial, ops);
  }
  std::printf("  initial volumes: territories %.6g, heterochromatin %.6g, nucleus %.6g\n",
              V0, v0, nucleus_volume(inst.initial, ops));
  std::printf("  %d warning(s)\n", warnings);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained multi phase field simulator of nuclear architecture"};
  app.require_subcommand(1);

  std::string config, outdir = "out", scheme, conv_scheme = "B", snapshot, out;
  double dt = -1.0, tmax = -1.0, ref_dt = 0.0, horizon = 0.0;
  std::vector<double> dts;
  bool echo = false;

  CLI::App* run = app.add_subcommand("run", "advance a scenario and write diagnostics");
  run->add_option("--config", config, "scenario file")->required();
  run->add_option("--output-dir", outdir, "directory for csv, snapshots and renders");
  run->add_option("--scheme", scheme, "override the scenario scheme");
  run->add_option("--dt", dt, "override the time step");
  run->add_option("--tmax", tmax, "override the horizon");

  CLI::App* conv = app.add_subcommand("convergence", "temporal self convergence study");
  conv->add_option("--config", config, "scenario file")->required();
  conv->add_option("--dts", dts, "step sizes to compare")->required()->delimiter(',');
  conv->add_option("--ref-dt", ref_dt, "reference step size")->required();
  conv->add_option("--T", horizon, "horizon for the comparison")->required();
  conv->add_option("--scheme", conv_scheme, "A, B or C");

  CLI::App* rend = app.add_subcommand("render", "draw a snapshot as an image");
  rend->add_option("--snapshot", snapshot, "snapshot file")->required();
  rend->add_option("--out", out, "output image, .ppm or .png")->required();

  CLI::App* val = app.add_subcommand("validate", "check a scenario file");
  val->add_option("--config", config, "scenario file")->required();
  val->add_flag("--echo", echo, "print the canonical form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return do_run(config, outdir, scheme, dt, tmax);
    if (*conv) return do_convergence(config, conv_scheme, dts, ref_dt, horizon);
    if (*rend) return do_render(snapshot, out);
    if (*val) return do_validate(config, echo);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
