#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cav/constraint.hpp"
#include "cav/dynamics.hpp"
#include "cav/scenario.hpp"

namespace cav {

// Every row produced here spans the canonical emergency decision vector
// [u1, u2, e, s]; the mode logic drops unused columns when it builds a QP.

struct PedestrianState {
  double x0 = 0.0;
  double y0 = 0.0;
  double v_ped = 0.0;
  double xi = 0.0;  // walking direction, [-pi, pi)
};

struct EllipseUnsafeSet {
  double xc = 0.0;
  double yc = 0.0;
  double A = 0.0;  // semi-major
  double B = 0.0;  // semi-minor
  double xi = 0.0;
};

// Piecewise-linear script evaluation: position interpolated between
// waypoints, speed and walking direction derived from the active segment.
// Returns nullopt before the first waypoint and from the last one onward.
std::optional<PedestrianState> pedestrian_at(const std::vector<PedWaypoint>& script, double t);

// A = epsilon + (v_ped/k1)(d_i/k2)(v_i/k3), B = A/lambda. d_i is the
// CAV-to-pedestrian distance; both axes grow with pedestrian speed,
// distance, and vehicle speed.
std::pair<double, double> ellipse_axes(const PedestrianState& ped, double d_i, double v_i,
                                       const EllipseParams& params);

// Center sits A/2 ahead of the pedestrian along the walking direction, so
// the pedestrian occupies the rear half of the ellipse.
std::pair<double, double> ellipse_center(const PedestrianState& ped, double A);

// Convenience: axes + center + orientation in one step.
EllipseUnsafeSet unsafe_ellipse(const PedestrianState& ped, double d_i, double v_i,
                                const EllipseParams& params);

// Safety margin of the vehicle barycenter (offset sigma/2 ahead of the rear
// axle) against the inflated ellipse: quadratic form - 1 - r_b.
double b5_value(const BicycleState& state, const EllipseUnsafeSet& ell, double sigma, double r_b);

// Directional derivative of b5 along the drift field (v cos/sin theta).
double b5_flow_derivative(const BicycleState& state, const EllipseUnsafeSet& ell, double sigma,
                          double r_b);

// Second-order barrier condition on (u1, u2):
//   Lf2 b5 + Lg1Lf b5 * u1 + Lg2Lf b5 * u2 + 2 Lf b5 + b5 >= 0.
// All Lie derivatives come from nested forward-mode differentiation over the
// bicycle vector fields.
LinearConstraint pedestrian_hocbf(const BicycleState& state, const EllipseUnsafeSet& ell,
                                  double sigma, double r_b);

// Pair of second-order road-edge conditions keeping the bounded coordinate
// (x if x_bounded, else y) inside [lo, hi].
std::pair<LinearConstraint, LinearConstraint> road_boundary_conditions(const BicycleState& state,
                                                                       bool x_bounded, double lo,
                                                                       double hi, double sigma);

// |u1| <= tan(|delta_max0 * (1 - v/v_max)|): full steering authority at rest,
// none at top speed.
std::pair<LinearConstraint, LinearConstraint> steering_limit(double v, double delta_max0,
                                                             double v_max);

// u2_prev + j_min*dt <= u2 <= u2_prev + j_max*dt.
std::pair<LinearConstraint, LinearConstraint> jerk_bounds(double u2_prev, double dt, double j_min,
                                                          double j_max);

// Soft lane-recentering row: quadratic-deviation condition <= e.
LinearConstraint lane_recenter_soft(const BicycleState& state, double x_ref, double y_ref,
                                    double sigma);

// Soft speed row: 2(v - v_ref)*u2 + (v - v_ref)^2 <= s.
LinearConstraint speed_soft(double v, double v_ref);

// One-sided road-edge condition at the lane center shifted a margin mu toward
// the recorded deviation side; stops recovery from over-correcting across the
// centerline. deviation_side: +1 if the vehicle deviated toward increasing
// bounded coordinate, -1 otherwise.
LinearConstraint anti_overshoot(const BicycleState& state, bool x_bounded, double lane_center,
                                int deviation_side, double sigma, double mu);

}  // namespace cav
