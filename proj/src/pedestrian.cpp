#include "cav/pedestrian.hpp"

#include <cmath>

#include "cav/autodiff.hpp"
#include "cav/errors.hpp"

namespace cav {
namespace {

// b5 as an expression over any scalar type (double or dual); depends on
// (x, y, theta) only — speed enters through the vector fields.
template <typename T>
T b5_expr(const T& x, const T& y, const T& theta, const EllipseUnsafeSet& ell, double sigma,
          double r_b) {
  const T q2 = x + cos(theta) * (sigma / 2.0) - ell.xc;
  const T q3 = y + sin(theta) * (sigma / 2.0) - ell.yc;
  const double cxi = std::cos(ell.xi), sxi = std::sin(ell.xi);
  const T major = q2 * cxi + q3 * sxi;
  const T minor = q2 * sxi - q3 * cxi;
  return major * major / (ell.A * ell.A) + minor * minor / (ell.B * ell.B) - 1.0 - r_b;
}

// Lf b5 = db5/dx * v cos(theta) + db5/dy * v sin(theta), again generic over
// the scalar type so it can be differentiated once more.
template <typename T>
T lf_b5_expr(const T& x, const T& y, const T& theta, const T& v, const EllipseUnsafeSet& ell,
             double sigma, double r_b) {
  using D = Dual4<T>;
  const D b = b5_expr<D>(D::var(x, 0), D::var(y, 1), D::var(theta, 2), ell, sigma, r_b);
  return b.d[0] * (v * cos(theta)) + b.d[1] * (v * sin(theta));
}

void check_ellipse(const EllipseUnsafeSet& ell) {
  if (!(ell.A > 0.0) || !(ell.B > 0.0)) throw DomainError("ellipse axes must be positive");
}

LinearConstraint edge_condition(const BicycleState& s, bool x_bounded, double bound,
                                bool lower_edge, double sigma, ConstraintTag tag) {
  // b = coord - lo (lower edge) or hi - coord (upper edge), relative degree 2.
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  const double flow = x_bounded ? s.v * c : s.v * sn;           // d(coord)/dt
  const double u1c = x_bounded ? -(s.v * s.v / sigma) * sn      // d(flow)/dtheta * v/sigma
                               : (s.v * s.v / sigma) * c;
  const double u2c = x_bounded ? c : sn;                        // d(flow)/dv
  const double coord = x_bounded ? s.x : s.y;
  const double sgn = lower_edge ? 1.0 : -1.0;
  const double b = lower_edge ? coord - bound : bound - coord;

  LinearConstraint lc;
  lc.coeffs = {sgn * u1c, sgn * u2c, 0.0, 0.0};
  lc.rhs = -(sgn * 2.0 * flow + b);
  lc.sense = Sense::Ge;
  lc.tag = tag;
  return lc;
}

}  // namespace

std::optional<PedestrianState> pedestrian_at(const std::vector<PedWaypoint>& script, double t) {
  if (script.size() < 2) return std::nullopt;
  if (t < script.front().t || t >= script.back().t) return std::nullopt;
  std::size_t i = 0;
  while (i + 2 < script.size() && t >= script[i + 1].t) ++i;
  const PedWaypoint& a = script[i];
  const PedWaypoint& b = script[i + 1];
  const double alpha = (t - a.t) / (b.t - a.t);

  PedestrianState p;
  p.x0 = a.x + alpha * (b.x - a.x);
  p.y0 = a.y + alpha * (b.y - a.y);
  const double dist = std::hypot(b.x - a.x, b.y - a.y);
  if (dist < 1e-12) {
    p.v_ped = 0.0;
    p.xi = normalize_angle(a.heading);
  } else {
    p.v_ped = dist / (b.t - a.t);
    p.xi = normalize_angle(std::atan2(b.y - a.y, b.x - a.x));
  }
  return p;
}

std::pair<double, double> ellipse_axes(const PedestrianState& ped, double d_i, double v_i,
                                       const EllipseParams& params) {
  if (d_i < 0.0 || v_i < 0.0) throw DomainError("distance and speed must be >= 0");
  const double A = params.epsilon + (ped.v_ped / params.k1) * (d_i / params.k2) * (v_i / params.k3);
  return {A, A / params.lambda};
}

std::pair<double, double> ellipse_center(const PedestrianState& ped, double A) {
  if (A <= 0.0) throw DomainError("semi-major axis must be > 0");
  return {ped.x0 + (A / 2.0) * std::cos(ped.xi), ped.y0 + (A / 2.0) * std::sin(ped.xi)};
}

EllipseUnsafeSet unsafe_ellipse(const PedestrianState& ped, double d_i, double v_i,
                                const EllipseParams& params) {
  EllipseUnsafeSet ell;
  const auto [A, B] = ellipse_axes(ped, d_i, v_i, params);
  const auto [xc, yc] = ellipse_center(ped, A);
  ell.A = A;
  ell.B = B;
  ell.xc = xc;
  ell.yc = yc;
  ell.xi = ped.xi;
  return ell;
}

double b5_value(const BicycleState& state, const EllipseUnsafeSet& ell, double sigma, double r_b) {
  check_ellipse(ell);
  return b5_expr<double>(state.x, state.y, state.theta, ell, sigma, r_b);
}

double b5_flow_derivative(const BicycleState& state, const EllipseUnsafeSet& ell, double sigma,
                          double r_b) {
  check_ellipse(ell);
  return lf_b5_expr<double>(state.x, state.y, state.theta, state.v, ell, sigma, r_b);
}

LinearConstraint pedestrian_hocbf(const BicycleState& state, const EllipseUnsafeSet& ell,
                                  double sigma, double r_b) {
  check_ellipse(ell);
  using D = Dual4<double>;
  const D L = lf_b5_expr<D>(D::var(state.x, 0), D::var(state.y, 1), D::var(state.theta, 2),
                            D::var(state.v, 3), ell, sigma, r_b);
  const double lfb = L.val;
  const double cth = std::cos(state.theta), sth = std::sin(state.theta);
  const double lf2b = L.d[0] * state.v * cth + L.d[1] * state.v * sth;
  const double u1c = L.d[2] * (state.v / sigma);
  const double u2c = L.d[3];
  const double b5 = b5_expr<double>(state.x, state.y, state.theta, ell, sigma, r_b);

  LinearConstraint lc;
  lc.coeffs = {u1c, u2c, 0.0, 0.0};
  lc.rhs = -(lf2b + 2.0 * lfb + b5);
  lc.sense = Sense::Ge;
  lc.tag = ConstraintTag::Pedestrian;
  return lc;
}

std::pair<LinearConstraint, LinearConstraint> road_boundary_conditions(const BicycleState& state,
                                                                       bool x_bounded, double lo,
                                                                       double hi, double sigma) {
  if (!(lo < hi)) throw DomainError("corridor bounds must satisfy lo < hi");
  return {edge_condition(state, x_bounded, lo, true, sigma, ConstraintTag::RoadEdge),
          edge_condition(state, x_bounded, hi, false, sigma, ConstraintTag::RoadEdge)};
}

std::pair<LinearConstraint, LinearConstraint> steering_limit(double v, double delta_max0,
                                                             double v_max) {
  const double bound = std::tan(std::fabs(delta_max0 * (1.0 - v / v_max)));
  LinearConstraint hi;
  hi.coeffs = {1.0, 0.0, 0.0, 0.0};
  hi.rhs = bound;
  hi.sense = Sense::Le;
  hi.tag = ConstraintTag::Steering;

  LinearConstraint lo;
  lo.coeffs = {1.0, 0.0, 0.0, 0.0};
  lo.rhs = -bound;
  lo.sense = Sense::Ge;
  lo.tag = ConstraintTag::Steering;
  return {hi, lo};
}

std::pair<LinearConstraint, LinearConstraint> jerk_bounds(double u2_prev, double dt, double j_min,
                                                          double j_max) {
  if (dt <= 0.0) throw DomainError("dt must be > 0");
  LinearConstraint hi;
  hi.coeffs = {0.0, 1.0, 0.0, 0.0};
  hi.rhs = u2_prev + j_max * dt;
  hi.sense = Sense::Le;
  hi.tag = ConstraintTag::Jerk;

  LinearConstraint lo;
  lo.coeffs = {0.0, 1.0, 0.0, 0.0};
  lo.rhs = u2_prev + j_min * dt;
  lo.sense = Sense::Ge;
  lo.tag = ConstraintTag::Jerk;
  return {hi, lo};
}

LinearConstraint lane_recenter_soft(const BicycleState& state, double x_ref, double y_ref,
                                    double sigma) {
  const double dx = state.x - x_ref, dy = state.y - y_ref;
  const double cth = std::cos(state.theta), sth = std::sin(state.theta);
  const double E = dx * dx + dy * dy;
  const double flow = dx * state.v * cth + dy * state.v * sth;  // (1/2) dE/dt
  const double u1c = 2.0 * state.v * state.v * (-dx * sth + dy * cth) / sigma;
  const double u2c = 2.0 * (dx * cth + dy * sth);

  LinearConstraint lc;
  lc.coeffs = {u1c, u2c, -1.0, 0.0};
  lc.rhs = -(2.0 * state.v * state.v + 4.0 * flow + E);
  lc.sense = Sense::Le;
  lc.tag = ConstraintTag::SoftLane;
  return lc;
}

LinearConstraint speed_soft(double v, double v_ref) {
  const double dv = v - v_ref;
  LinearConstraint lc;
  lc.coeffs = {0.0, 2.0 * dv, 0.0, -1.0};
  lc.rhs = -dv * dv;
  lc.sense = Sense::Le;
  lc.tag = ConstraintTag::SoftSpeed;
  return lc;
}

LinearConstraint anti_overshoot(const BicycleState& state, bool x_bounded, double lane_center,
                                int deviation_side, double sigma, double mu) {
  if (deviation_side != 1 && deviation_side != -1) throw DomainError("deviation side must be +/-1");
  // Deviated toward +coord: hold coord >= center - mu; toward -coord: <= center + mu.
  const bool lower_edge = deviation_side > 0;
  const double bound = lower_edge ? lane_center - mu : lane_center + mu;
  return edge_condition(state, x_bounded, bound, lower_edge, sigma, ConstraintTag::AntiOvershoot);
}

}  // namespace cav
