#pragma once

#include <functional>
#include <vector>

#include "nar/grid.hpp"
#include "nar/model.hpp"
#include "nar/schedules.hpp"

namespace nar {

struct EllipseSpec {
  double cx = 0.0, cy = 0.0;  // center
  double rx = 1.0, ry = 1.0;  // semi-axes
};

// smooth indicator of an ellipse: 1 deep inside, 0 outside, 1/2 on the boundary
double ellipse_tanh_value(const EllipseSpec& e, double eps, double x, double y);
ScalarField2D ellipse_tanh_field(const EllipseSpec& e, double eps,
                                 const std::shared_ptr<const Grid2D>& g);

// lamina profile at time t: 0 inside the nucleus ellipse, 1 outside
ScalarField2D nucleus_field(double t, const ScheduleSet& sched,
                            const std::shared_ptr<const Grid2D>& g);

// Initial seed layout. Heterochromatin seeds default to the territory centers.
struct ScenarioLayout {
  std::vector<EllipseSpec> chromosomes;
  std::vector<EllipseSpec> hetero_seeds;
  double eps_phi = 0.1;  // interface width of territory and hetero seeds
};

using WarnFn = std::function<void(const std::string&)>;

// Builds the t = 0 state: phi0 from the nucleus schedules, territory seeds,
// psi as the sum of hetero seeds clipped to 1. Overlapping hetero seeds and
// seeds leaving the domain are reported through warn (not fatal).
NuclearState build_initial_state(const ScenarioLayout& layout, const ScheduleSet& sched,
                                 const std::shared_ptr<const Grid2D>& g,
                                 const WarnFn& warn = {});

}  // namespace nar
