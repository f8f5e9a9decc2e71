#include "nar/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nar {

double ellipse_tanh_value(const EllipseSpec& e, double eps, double x, double y) {
  const double sx = (x - e.cx) / e.rx;
  const double sy = (y - e.cy) / e.ry;
  const double r = std::sqrt(sx * sx + sy * sy) - 1.0;
  return 0.5 * (1.0 - std::tanh(r / (std::sqrt(2.0) * eps)));
}

ScalarField2D ellipse_tanh_field(const EllipseSpec& e, double eps,
                                 const std::shared_ptr<const Grid2D>& g) {
  if (!(e.rx > 0.0) || !(e.ry > 0.0))
    throw std::invalid_argument("ellipse: semi-axes must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("ellipse: interface width must be positive");
  ScalarField2D f(g);
  for (int j = 0; j < g->ny; ++j)
    for (int i = 0; i < g->nx; ++i) f.at(i, j) = ellipse_tanh_value(e, eps, g->x(i), g->y(j));
  return f;
}

ScalarField2D nucleus_field(double t, const ScheduleSet& sched,
                            const std::shared_ptr<const Grid2D>& g) {
  EllipseSpec e;
  e.rx = sched.rx.value(t);
  e.ry = sched.ry.value(t);
  ScalarField2D f = ellipse_tanh_field(e, sched.nucleus_eps, g);
  for (int k = 0; k < f.size(); ++k) f[k] = 1.0 - f[k];
  return f;
}

NuclearState build_initial_state(const ScenarioLayout& layout, const ScheduleSet& sched,
                                 const std::shared_ptr<const Grid2D>& g,
                                 const WarnFn& warn) {
  auto say = [&](const std::string& m) {
    if (warn) warn(m);
  };
  NuclearState s;
  s.t = 0.0;
  s.phi0 = nucleus_field(0.0, sched, g);

  const double rx0 = sched.rx.value(0.0), ry0 = sched.ry.value(0.0);
  auto check_inside = [&](const EllipseSpec& e, const char* what, size_t idx) {
    const double sx = e.cx / rx0, sy = e.cy / ry0;
    if (std::sqrt(sx * sx + sy * sy) + std::max(e.rx / rx0, e.ry / ry0) > 1.0)
      say(std::string(what) + " seed " + std::to_string(idx) +
          " is not contained in the nucleus");
    if (std::abs(e.cx) + e.rx > 0.5 * g->Lx || std::abs(e.cy) + e.ry > 0.5 * g->Ly)
      say(std::string(what) + " seed " + std::to_string(idx) + " leaves the domain");
  };

  for (size_t m = 0; m < layout.chromosomes.size(); ++m) {
    check_inside(layout.chromosomes[m], "chromosome", m);
    s.phi.push_back(ellipse_tanh_field(layout.chromosomes[m], layout.eps_phi, g));
  }

  const auto& seeds =
      layout.hetero_seeds.empty() ? layout.chromosomes : layout.hetero_seeds;
  ScalarField2D psi(g);
  for (size_t m = 0; m < seeds.size(); ++m) {
    check_inside(seeds[m], "heterochromatin", m);
    psi.add_scaled(ellipse_tanh_field(seeds[m], layout.eps_phi, g), 1.0);
  }
  bool clipped = false;
  for (int k = 0; k < psi.size(); ++k)
    if (psi[k] > 1.0) {
      psi[k] = 1.0;
      clipped = true;
    }
  if (clipped) say("heterochromatin seeds overlap; psi clipped to 1");
  s.psi = std::move(psi);
  return s;
}

}  // namespace nar
