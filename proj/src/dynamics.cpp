#include "cav/dynamics.hpp"

#include <cmath>

#include "cav/errors.hpp"

namespace cav {

LongitudinalState step_double_integrator(const LongitudinalState& s, double u, double dt) {
  return {s.p + s.v * dt, s.v + u * dt};
}

BicycleState step_bicycle(const BicycleState& s, const ControlInput& u, double sigma, double dt) {
  BicycleState n;
  n.x = s.x + s.v * std::cos(s.theta) * dt;
  n.y = s.y + s.v * std::sin(s.theta) * dt;
  n.theta = s.theta + (s.v / sigma) * u.u1 * dt;
  n.v = s.v + u.u2 * dt;
  return n;
}

double steering_transform(double delta) {
  constexpr double kHalfPi = 1.5707963267948966;
  if (!(std::fabs(delta) < kHalfPi)) {
    throw DomainError("steering angle must satisfy |delta| < pi/2");
  }
  return std::tan(delta);
}

double steering_inverse(double u1) { return std::atan(u1); }

double normalize_angle(double theta) {
  constexpr double kPi = 3.14159265358979323846;
  double t = std::remainder(theta, 2.0 * kPi);  // (-pi, pi]
  if (t == kPi) t = -kPi;                       // close the range to [-pi, pi)
  return t;
}

}  // namespace cav
