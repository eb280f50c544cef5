#pragma once

namespace cav {

// Energy-optimal cubic position profile along a path. Coefficients are in
// local time tau = t - t0, so phi0 = p(t0) and phi1 = v(t0):
//   p(t) = phi3 tau^3 + phi2 tau^2 + phi1 tau + phi0
//   v(t) = 3 phi3 tau^2 + 2 phi2 tau + phi1
//   u(t) = 6 phi3 tau + 2 phi2
struct CubicTrajectory {
  double phi3 = 0.0;
  double phi2 = 0.0;
  double phi1 = 0.0;
  double phi0 = 0.0;
  double t0 = 0.0;
  double tf = 0.0;
  int path_id = 0;

  double position(double t) const {
    const double tau = t - t0;
    return ((phi3 * tau + phi2) * tau + phi1) * tau + phi0;
  }
  double speed(double t) const {
    const double tau = t - t0;
    return (3.0 * phi3 * tau + 2.0 * phi2) * tau + phi1;
  }
  double accel(double t) const { return 6.0 * phi3 * (t - t0) + 2.0 * phi2; }
};

// Evaluation extended outside [t0, tf] by constant-speed motion: before t0 the
// vehicle is projected backward at its entry speed, after tf it keeps the exit
// speed. Used when committed trajectories of different windows are compared.
double extended_position(const CubicTrajectory& c, double t);
double extended_speed(const CubicTrajectory& c, double t);

}  // namespace cav
