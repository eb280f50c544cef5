#include "cav/trajectory.hpp"

namespace cav {

double extended_position(const CubicTrajectory& c, double t) {
  if (t < c.t0) return c.phi0 + c.phi1 * (t - c.t0);
  if (t > c.tf) return c.position(c.tf) + c.speed(c.tf) * (t - c.tf);
  return c.position(t);
}

double extended_speed(const CubicTrajectory& c, double t) {
  if (t < c.t0) return c.phi1;
  if (t > c.tf) return c.speed(c.tf);
  return c.speed(t);
}

}  // namespace cav
