#include "nar/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "nar/spectral.hpp"

namespace nar {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct Section {
  int line = 0;
  bool used = false;
  std::map<std::string, Entry> kv;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// scenario text split into sections; every key must be consumed
class Ini {
 public:
  Ini(const std::string& text, std::string name) : name_(std::move(name)) {
    std::istringstream in(text);
    std::string raw;
    Section* cur = nullptr;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = raw;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(lineno, "malformed section header");
        const std::string sec = trim(line.substr(1, line.size() - 2));
        if (sec.empty()) fail(lineno, "empty section name");
        if (secs_.count(sec)) fail(lineno, "duplicate section [" + sec + "]");
        cur = &secs_[sec];
        cur->line = lineno;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(lineno, "expected key = value");
      if (!cur) fail(lineno, "key outside of any section");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) fail(lineno, "empty key");
      if (cur->kv.count(key)) fail(lineno, "duplicate key '" + key + "'");
      cur->kv[key] = {trim(line.substr(eq + 1)), lineno, false};
    }
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw std::runtime_error(name_ + ":" + std::to_string(line) + ": " + msg);
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error(name_ + ": " + msg);
  }

  Section& section(const std::string& sec) {
    auto it = secs_.find(sec);
    if (it == secs_.end()) fail("missing section [" + sec + "]");
    it->second.used = true;
    return it->second;
  }
  Section* optional_section(const std::string& sec) {
    auto it = secs_.find(sec);
    if (it == secs_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  Entry& require(Section& s, const std::string& sec, const std::string& key) {
    auto it = s.kv.find(key);
    if (it == s.kv.end()) fail("[" + sec + "] is missing key '" + key + "'");
    it->second.used = true;
    return it->second;
  }
  Entry* optional(Section& s, const std::string& key) {
    auto it = s.kv.find(key);
    if (it == s.kv.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  double number(const Entry& e) const {
    const auto slash = e.value.find('/');
    if (slash != std::string::npos) {
      const double num = plain_number(e.value.substr(0, slash), e.line);
      const double den = plain_number(e.value.substr(slash + 1), e.line);
      if (den == 0.0) fail(e.line, "division by zero in '" + e.value + "'");
      return num / den;
    }
    return plain_number(e.value, e.line);
  }

  long integer(const Entry& e) const {
    const std::string t = trim(e.value);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
      fail(e.line, "expected an integer, got '" + e.value + "'");
    return v;
  }

  bool boolean(const Entry& e) const {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    fail(e.line, "expected true or false, got '" + e.value + "'");
  }

  std::vector<double> list(const Entry& e) const {
    std::vector<double> out;
    std::string rest = e.value;
    for (;;) {
      const auto comma = rest.find(',');
      const std::string item = trim(rest.substr(0, comma));
      if (item.empty()) fail(e.line, "empty list element");
      Entry tmp{item, e.line, true};
      out.push_back(number(tmp));
      if (comma == std::string::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

  // a single value broadcasts to n entries
  std::vector<double> list_n(const Entry& e, size_t n, const std::string& what) const {
    std::vector<double> out = list(e);
    if (out.size() == 1 && n > 1) out.assign(n, out[0]);
    if (out.size() != n)
      fail(e.line, what + " needs " + std::to_string(n) + " values, got " +
                       std::to_string(out.size()));
    return out;
  }

  void reject_unused() const {
    for (const auto& [sec, s] : secs_) {
      if (!s.used) fail(s.line, "unknown section [" + sec + "]");
      for (const auto& [key, e] : s.kv)
        if (!e.used) fail(e.line, "unknown key '" + key + "' in [" + sec + "]");
    }
  }

 private:
  double plain_number(const std::string& text, int line) const {
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
      fail(line, "expected a number, got '" + t + "'");
    if (!std::isfinite(v)) fail(line, "number out of range: '" + t + "'");
    return v;
  }

  std::string name_;
  std::map<std::string, Section> secs_;
};

SchemePlan parse_plan(Ini& ini, const Entry& e) {
  if (e.value == "A") return SchemePlan::VolumePreserving;
  if (e.value == "B") return SchemePlan::Linear;
  if (e.value == "C") return SchemePlan::EnergyStable;
  if (e.value == "A-then-B") return SchemePlan::SwitchToLinear;
  if (e.value == "A-then-C") return SchemePlan::SwitchToEnergyStable;
  ini.fail(e.line, "unknown scheme '" + e.value + "', use A, B, C, A-then-B or A-then-C");
}

}  // namespace

const char* scheme_plan_name(SchemePlan plan) {
  switch (plan) {
    case SchemePlan::VolumePreserving: return "A";
    case SchemePlan::Linear: return "B";
    case SchemePlan::EnergyStable: return "C";
    case SchemePlan::SwitchToLinear: return "A-then-B";
    case SchemePlan::SwitchToEnergyStable: return "A-then-C";
  }
  return "?";
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& name) {
  Ini ini(text, name);
  ScenarioConfig c;

  {
    Section& s = ini.section("domain");
    c.nx = static_cast<int>(ini.integer(ini.require(s, "domain", "nx")));
    c.ny = static_cast<int>(ini.integer(ini.require(s, "domain", "ny")));
  }
  {
    Section& s = ini.section("model");
    c.params.n_chromosomes =
        static_cast<int>(ini.integer(ini.require(s, "model", "n_chromosomes")));
    c.params.eps2_phi = ini.number(ini.require(s, "model", "eps2_phi"));
    c.params.eps2_psi = ini.number(ini.require(s, "model", "eps2_psi"));
    c.params.beta0 = ini.number(ini.require(s, "model", "beta0"));
    c.params.beta_phi = ini.number(ini.require(s, "model", "beta_phi"));
    c.params.beta_psi = ini.number(ini.require(s, "model", "beta_psi"));
    c.params.gamma = ini.number(ini.require(s, "model", "gamma"));
    if (Entry* e = ini.optional(s, "mobility")) c.params.mobility = ini.number(*e);
  }
  {
    Section& s = ini.section("nucleus");
    c.nucleus.rx0 = ini.number(ini.require(s, "nucleus", "rx0"));
    c.nucleus.rx1 = ini.number(ini.require(s, "nucleus", "rx1"));
    c.nucleus.ry0 = ini.number(ini.require(s, "nucleus", "ry0"));
    c.nucleus.ry1 = ini.number(ini.require(s, "nucleus", "ry1"));
    c.nucleus.alpha1 = ini.number(ini.require(s, "nucleus", "alpha1"));
    c.nucleus.alpha2 = ini.number(ini.require(s, "nucleus", "alpha2"));
    c.nucleus.t0 = ini.number(ini.require(s, "nucleus", "t0"));
    c.nucleus.eps = ini.number(ini.require(s, "nucleus", "eps"));
  }
  const size_t n = static_cast<size_t>(std::max(1, c.params.n_chromosomes));
  {
    Section& s = ini.section("chromosomes");
    c.cx = ini.list_n(ini.require(s, "chromosomes", "centers_x"), n, "centers_x");
    c.cy = ini.list_n(ini.require(s, "chromosomes", "centers_y"), n, "centers_y");
    c.crx = ini.list_n(ini.require(s, "chromosomes", "rx"), n, "rx");
    c.cry = ini.list_n(ini.require(s, "chromosomes", "ry"), n, "ry");
    c.seed_eps = ini.number(ini.require(s, "chromosomes", "eps"));
  }
  if (Section* s = ini.optional_section("hetero_seeds")) {
    c.has_hetero_seeds = true;
    c.hx = ini.list_n(ini.require(*s, "hetero_seeds", "centers_x"), n, "centers_x");
    c.hy = ini.list_n(ini.require(*s, "hetero_seeds", "centers_y"), n, "centers_y");
    c.hrx = ini.list_n(ini.require(*s, "hetero_seeds", "rx"), n, "rx");
    c.hry = ini.list_n(ini.require(*s, "hetero_seeds", "ry"), n, "ry");
  }
  {
    Section& s = ini.section("volume_targets");
    const Entry& mode = ini.require(s, "volume_targets", "mode");
    if (mode.value == "nucleus_fraction") {
      c.vol_mode = VolumeMode::NucleusFraction;
    } else if (mode.value == "initial") {
      c.vol_mode = VolumeMode::Initial;
    } else if (mode.value == "explicit") {
      c.vol_mode = VolumeMode::Explicit;
    } else {
      ini.fail(mode.line, "unknown volume target mode '" + mode.value +
                              "', use nucleus_fraction, initial or explicit");
    }
    if (c.vol_mode != VolumeMode::Initial) {
      c.vol_t0 = ini.number(ini.require(s, "volume_targets", "t0"));
      c.vol_alpha1 = ini.number(ini.require(s, "volume_targets", "alpha1"));
      c.vol_alpha2 = ini.number(ini.require(s, "volume_targets", "alpha2"));
    }
    if (c.vol_mode == VolumeMode::NucleusFraction)
      if (Entry* e = ini.optional(s, "fill")) c.fill = ini.number(*e);
    if (c.vol_mode == VolumeMode::Explicit)
      c.vol_targets = ini.list_n(ini.require(s, "volume_targets", "targets"), n, "targets");
  }
  {
    Section& s = ini.section("hetero_targets");
    const Entry& mode = ini.require(s, "hetero_targets", "mode");
    if (mode.value == "ratio") {
      c.het_mode = HeteroMode::Ratio;
      c.het_ratio = ini.number(ini.require(s, "hetero_targets", "ratio"));
      c.het_t0 = ini.number(ini.require(s, "hetero_targets", "t0"));
      c.het_alpha1 = ini.number(ini.require(s, "hetero_targets", "alpha1"));
      c.het_alpha2 = ini.number(ini.require(s, "hetero_targets", "alpha2"));
    } else if (mode.value == "rate") {
      c.het_mode = HeteroMode::Rate;
      c.rho0 = ini.number(ini.require(s, "hetero_targets", "rho0"));
      c.rho_bar = ini.list_n(ini.require(s, "hetero_targets", "rho_bar"), n, "rho_bar");
      c.het_alpha1 = ini.number(ini.require(s, "hetero_targets", "alpha1"));
      c.het_alpha2 = ini.number(ini.require(s, "hetero_targets", "alpha2"));
    } else if (mode.value == "initial") {
      c.het_mode = HeteroMode::Initial;
    } else {
      ini.fail(mode.line,
               "unknown hetero target mode '" + mode.value + "', use ratio, rate or initial");
    }
  }
  {
    Section& s = ini.section("run");
    c.plan = parse_plan(ini, ini.require(s, "run", "scheme"));
    c.dt = ini.number(ini.require(s, "run", "dt"));
    c.t_max = ini.number(ini.require(s, "run", "t_max"));
    if (Entry* e = ini.optional(s, "switch_time")) c.switch_time = ini.number(*e);
    if (Entry* e = ini.optional(s, "diag_every"))
      c.diag_every = static_cast<int>(ini.integer(*e));
    if (Entry* e = ini.optional(s, "snap_every"))
      c.snap_every = static_cast<int>(ini.integer(*e));
    if (Entry* e = ini.optional(s, "dealias")) c.opts.dealias = ini.boolean(*e);
    if (Entry* e = ini.optional(s, "constraint_tol"))
      c.opts.constraint_tol = ini.number(*e);
    if (Entry* e = ini.optional(s, "newton_max_iter"))
      c.opts.newton_max_iter = static_cast<int>(ini.integer(*e));
    if (Entry* e = ini.optional(s, "max_sweeps"))
      c.opts.max_sweeps = static_cast<int>(ini.integer(*e));
    if (Entry* e = ini.optional(s, "max_dt_halvings"))
      c.opts.max_dt_halvings = static_cast<int>(ini.integer(*e));
  }
  ini.reject_unused();

  // cross checks that need more than one key
  try {
    c.params.validate();
  } catch (const std::exception& e) {
    ini.fail(std::string("[model] ") + e.what());
  }
  if (!(c.dt > 0.0)) ini.fail("[run] dt must be positive");
  if (!(c.t_max >= 0.0)) ini.fail("[run] t_max must be nonnegative");
  if (c.diag_every < 0 || c.snap_every < 0) ini.fail("[run] cadence must be nonnegative");
  if (c.het_mode == HeteroMode::Ratio && !(c.het_ratio > 0.0 && c.het_ratio < 1.0))
    ini.fail("[hetero_targets] ratio must lie in (0, 1)");
  if (c.vol_mode == VolumeMode::NucleusFraction && !(c.fill > 0.0 && c.fill <= 1.0))
    ini.fail("[volume_targets] fill must lie in (0, 1]");
  for (double v : c.vol_targets)
    if (!(v > 0.0)) ini.fail("[volume_targets] explicit targets must be positive");
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("scenario " + path + ": cannot open");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str(), path);
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += num(v[i]);
  }
  return out;
}

}  // namespace

std::string format_scenario(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "[domain]\nnx = " << c.nx << "\nny = " << c.ny << "\n\n";
  o << "[model]\nn_chromosomes = " << c.params.n_chromosomes
    << "\neps2_phi = " << num(c.params.eps2_phi) << "\neps2_psi = " << num(c.params.eps2_psi)
    << "\nbeta0 = " << num(c.params.beta0) << "\nbeta_phi = " << num(c.params.beta_phi)
    << "\nbeta_psi = " << num(c.params.beta_psi) << "\ngamma = " << num(c.params.gamma)
    << "\nmobility = " << num(c.params.mobility) << "\n\n";
  o << "[nucleus]\nrx0 = " << num(c.nucleus.rx0) << "\nrx1 = " << num(c.nucleus.rx1)
    << "\nry0 = " << num(c.nucleus.ry0) << "\nry1 = " << num(c.nucleus.ry1)
    << "\nalpha1 = " << num(c.nucleus.alpha1) << "\nalpha2 = " << num(c.nucleus.alpha2)
    << "\nt0 = " << num(c.nucleus.t0) << "\neps = " << num(c.nucleus.eps) << "\n\n";
  o << "[chromosomes]\ncenters_x = " << num_list(c.cx) << "\ncenters_y = " << num_list(c.cy)
    << "\nrx = " << num_list(c.crx) << "\nry = " << num_list(c.cry)
    << "\neps = " << num(c.seed_eps) << "\n\n";
  if (c.has_hetero_seeds)
    o << "[hetero_seeds]\ncenters_x = " << num_list(c.hx)
      << "\ncenters_y = " << num_list(c.hy) << "\nrx = " << num_list(c.hrx)
      << "\nry = " << num_list(c.hry) << "\n\n";
  o << "[volume_targets]\nmode = ";
  switch (c.vol_mode) {
    case VolumeMode::NucleusFraction:
      o << "nucleus_fraction\nt0 = " << num(c.vol_t0) << "\nalpha1 = " << num(c.vol_alpha1)
        << "\nalpha2 = " << num(c.vol_alpha2) << "\nfill = " << num(c.fill);
      break;
    case VolumeMode::Initial: o << "initial"; break;
    case VolumeMode::Explicit:
      o << "explicit\nt0 = " << num(c.vol_t0) << "\nalpha1 = " << num(c.vol_alpha1)
        << "\nalpha2 = " << num(c.vol_alpha2) << "\ntargets = " << num_list(c.vol_targets);
      break;
  }
  o << "\n\n[hetero_targets]\nmode = ";
  switch (c.het_mode) {
    case HeteroMode::Ratio:
      o << "ratio\nratio = " << num(c.het_ratio) << "\nt0 = " << num(c.het_t0)
        << "\nalpha1 = " << num(c.het_alpha1) << "\nalpha2 = " << num(c.het_alpha2);
      break;
    case HeteroMode::Rate:
      o << "rate\nrho0 = " << num(c.rho0) << "\nrho_bar = " << num_list(c.rho_bar)
        << "\nalpha1 = " << num(c.het_alpha1) << "\nalpha2 = " << num(c.het_alpha2);
      break;
    case HeteroMode::Initial: o << "initial"; break;
  }
  o << "\n\n[run]\nscheme = " << scheme_plan_name(c.plan) << "\ndt = " << num(c.dt)
    << "\nt_max = " << num(c.t_max);
  if (c.switch_time >= 0.0) o << "\nswitch_time = " << num(c.switch_time);
  o << "\ndiag_every = " << c.diag_every << "\nsnap_every = " << c.snap_every
    << "\ndealias = " << (c.opts.dealias ? "true" : "false")
    << "\nconstraint_tol = " << num(c.opts.constraint_tol)
    << "\nnewton_max_iter = " << c.opts.newton_max_iter
    << "\nmax_sweeps = " << c.opts.max_sweeps
    << "\nmax_dt_halvings = " << c.opts.max_dt_halvings << "\n";
  return o.str();
}

ScenarioInstance build_scenario(const ScenarioConfig& c, const WarnFn& warn) {
  ScenarioInstance inst;
  inst.grid = Grid2D::make(c.nx, c.ny);
  inst.params = c.params;
  const int n = c.params.n_chromosomes;

  inst.sched.nucleus_eps = c.nucleus.eps;
  inst.sched.rx = make_ramp(c.nucleus.rx0, c.nucleus.rx1, c.nucleus.alpha1,
                            c.nucleus.alpha2, c.nucleus.t0);
  inst.sched.ry = make_ramp(c.nucleus.ry0, c.nucleus.ry1, c.nucleus.alpha1,
                            c.nucleus.alpha2, c.nucleus.t0);

  ScenarioLayout layout;
  layout.eps_phi = c.seed_eps;
  for (int m = 0; m < n; ++m) layout.chromosomes.push_back({c.cx[m], c.cy[m], c.crx[m], c.cry[m]});
  if (c.has_hetero_seeds)
    for (int m = 0; m < n; ++m)
      layout.hetero_seeds.push_back({c.hx[m], c.hy[m], c.hrx[m], c.hry[m]});
  inst.initial = build_initial_state(layout, inst.sched, inst.grid, warn);

  SpectralOps ops(inst.grid);
  std::vector<double> V0(n), v0(n);
  for (int m = 0; m < n; ++m) {
    V0[m] = volume(m, inst.initial, ops);
    v0[m] = hetero_volume(m, inst.initial, ops);
  }

  inst.sched.V.clear();
  switch (c.vol_mode) {
    case VolumeMode::Initial:
      for (int m = 0; m < n; ++m)
        inst.sched.V.push_back(make_ramp(V0[m], V0[m], 1.0, 0.0, 1.0));
      break;
    case VolumeMode::NucleusFraction: {
      // equal share of the settled nucleus, measured on this grid
      const ScalarField2D phi0_final =
          nucleus_field(c.nucleus.t0, inst.sched, inst.grid);
      const double a_nuc = inst.grid->area() - ops.integrate(phi0_final);
      const double share = c.fill * a_nuc / n;
      for (int m = 0; m < n; ++m)
        inst.sched.V.push_back(make_ramp(V0[m], share, c.vol_alpha1, c.vol_alpha2, c.vol_t0));
      break;
    }
    case VolumeMode::Explicit:
      for (int m = 0; m < n; ++m)
        inst.sched.V.push_back(
            make_ramp(V0[m], c.vol_targets[m], c.vol_alpha1, c.vol_alpha2, c.vol_t0));
      break;
  }

  inst.sched.v.clear();
  for (int m = 0; m < n; ++m) {
    VolumeTarget t;
    switch (c.het_mode) {
      case HeteroMode::Initial:
        t.ramp = make_ramp(v0[m], v0[m], 1.0, 0.0, 1.0);
        break;
      case HeteroMode::Ratio:
        t.ramp = make_ramp(v0[m], c.het_ratio * inst.sched.V[m].target, c.het_alpha1,
                           c.het_alpha2, c.het_t0);
        break;
      case HeteroMode::Rate:
        t.kind = VolumeTarget::Kind::RateTimesVolume;
        t.rho0 = c.rho0;
        t.rho_bar = c.rho_bar[m];
        t.rate_alpha1 = c.het_alpha1;
        t.rate_alpha2 = c.het_alpha2;
        t.base = inst.sched.V[m];
        break;
    }
    inst.sched.v.push_back(t);
  }

  if (warn) {
    for (int m = 0; m < n; ++m) {
      if (!ramp_is_monotone(inst.sched.V[m]))
        warn("volume target of chromosome " + std::to_string(m) +
             " dips below its start before reaching the target");
      const double Vf = inst.sched.V[m].value(1e300);
      const double vf = inst.sched.v[m].value(1e300);
      if (vf >= Vf)
        warn("heterochromatin target of chromosome " + std::to_string(m) +
             " reaches its territory volume");
      if (v0[m] > inst.sched.v[m].value(0.0) + 1e-9)
        warn("chromosome " + std::to_string(m) +
             " starts above its heterochromatin target");
    }
  }

  inst.plan.plan = c.plan;
  inst.plan.dt = c.dt;
  inst.plan.t_max = c.t_max;
  inst.plan.switch_time = c.switch_time;
  inst.plan.diag_every = c.diag_every;
  inst.plan.snap_every = c.snap_every;
  inst.plan.opts = c.opts;
  return inst;
}

}  // namespace nar
