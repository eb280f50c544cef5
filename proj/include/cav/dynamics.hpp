#pragma once

namespace cav {

// Longitudinal double-integrator state along a path: arclength and speed.
struct LongitudinalState {
  double p = 0.0;  // m
  double v = 0.0;  // m/s
};

// Planar kinematic bicycle state anchored at the rear axle.
struct BicycleState {
  double x = 0.0;      // m
  double y = 0.0;      // m
  double theta = 0.0;  // rad, heading
  double v = 0.0;      // m/s
};

struct ControlInput {
  double u1 = 0.0;  // tan(steering angle)
  double u2 = 0.0;  // longitudinal acceleration, m/s^2
};

// One explicit Euler step of p' = v, v' = u.
LongitudinalState step_double_integrator(const LongitudinalState& s, double u, double dt);

// One explicit Euler step of x' = v cos(theta), y' = v sin(theta),
// theta' = (v / sigma) u1, v' = u2. sigma is the vehicle length.
BicycleState step_bicycle(const BicycleState& s, const ControlInput& u, double sigma, double dt);

// Steering-angle lift u1 = tan(delta); throws DomainError for |delta| >= pi/2.
double steering_transform(double delta);
double steering_inverse(double u1);  // delta = atan(u1)

// Wrap an angle into [-pi, pi).
double normalize_angle(double theta);

}  // namespace cav
