#include <cmath>

#include "sciagent/errors.hpp"
#include "sciagent/workbench.hpp"

namespace sciagent {

double six_hump_camel(double x1, double x2) {
  double a = x1 * x1;
  double b = x2 * x2;
  return (4.0 - 2.1 * a + a * a / 3.0) * a + x1 * x2 + (-4.0 + 4.0 * b) * b;
}

bool Box::contains(const Vec& x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

Vec Box::to_unit(const Vec& x) const {
  Vec u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - lo[i]) / (hi[i] - lo[i]);
  return u;
}

Vec Box::from_unit(const Vec& u) const {
  Vec x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) x[i] = lo[i] + u[i] * (hi[i] - lo[i]);
  return x;
}

Box camel_box() { return {{-3.0, -2.0}, {3.0, 2.0}}; }

const std::array<DesignParameter, 5>& design_parameters() {
  static const std::array<DesignParameter, 5> params{{
      {"ablator_outer_radius", "um", 1100.0, 1600.0},
      {"cushion_thickness", "um", 20.0, 120.0},
      {"tamper_thickness", "um", 10.0, 60.0},
      {"inner_shell_thickness", "um", 5.0, 40.0},
      {"fuel_radius", "um", 200.0, 400.0},
  }};
  return params;
}

Box design_box() {
  Box b;
  for (const auto& p : design_parameters()) {
    b.lo.push_back(p.lo);
    b.hi.push_back(p.hi);
  }
  return b;
}

double synthetic_yield(const Vec& design) {
  auto box = design_box();
  if (design.size() != box.dim()) {
    throw OutOfBounds("design needs " + std::to_string(box.dim()) + " parameters, got " +
                      std::to_string(design.size()));
  }
  const auto& params = design_parameters();
  for (std::size_t i = 0; i < design.size(); ++i) {
    if (!std::isfinite(design[i]) || design[i] < box.lo[i] || design[i] > box.hi[i]) {
      throw OutOfBounds(params[i].name + " = " + std::to_string(design[i]) + " outside [" +
                        std::to_string(box.lo[i]) + ", " + std::to_string(box.hi[i]) + "]");
    }
  }
  auto u = box.to_unit(design);
  bool cliff = true;
  for (double v : u) cliff = cliff && v > 0.75;
  if (cliff) return 0.0;
  double broad = 0.0;
  double narrow = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double d = u[i] - kYieldCenter[i];
    broad += d * d;
    double s = d / kYieldWidths[i];
    narrow += s * s;
  }
  constexpr double kBroadWidth = 0.35;
  return 10.0 + 3.0 * std::exp(-0.5 * broad / (kBroadWidth * kBroadWidth)) + 4.5 * std::exp(-0.5 * narrow);
}

Vec yield_optimum() {
  return design_box().from_unit(Vec(kYieldCenter.begin(), kYieldCenter.end()));
}

}  // namespace sciagent
