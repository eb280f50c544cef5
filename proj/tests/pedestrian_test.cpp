#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cav/barriers.hpp"
#include "cav/dynamics.hpp"
#include "cav/errors.hpp"
#include "cav/pedestrian.hpp"
#include "cav/qpsolve.hpp"
#include "cav/scenario.hpp"

using namespace cav;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Central-difference directional derivative of a state scalar along a
// direction in (x, y, theta, v). Used to cross-check every analytic Lie
// derivative against nothing but the scalar it differentiates.
template <typename F>
double dir_deriv(F&& f, const BicycleState& s, double dx, double dy, double dth, double dv,
                 double h = 1e-6) {
  BicycleState a = s, b = s;
  a.x += h * dx;
  a.y += h * dy;
  a.theta += h * dth;
  a.v += h * dv;
  b.x -= h * dx;
  b.y -= h * dy;
  b.theta -= h * dth;
  b.v -= h * dv;
  return (f(a) - f(b)) / (2.0 * h);
}

template <typename F>
double along_f(F&& f, const BicycleState& s) {
  return dir_deriv(f, s, s.v * std::cos(s.theta), s.v * std::sin(s.theta), 0.0, 0.0);
}
template <typename F>
double along_g1(F&& f, const BicycleState& s, double sigma) {
  return dir_deriv(f, s, 0.0, 0.0, s.v / sigma, 0.0);
}
template <typename F>
double along_g2(F&& f, const BicycleState& s) {
  return dir_deriv(f, s, 0.0, 0.0, 0.0, 1.0);
}

LinearConstraint trim2(LinearConstraint row) {
  row.coeffs.resize(2);
  return row;
}

}  // namespace

TEST_CASE("pedestrian script evaluation") {
  std::vector<PedWaypoint> script{
      {4.0, 6.27, 59.0, 1.4, kPi},
      {5.9, 3.5, 59.0, 1.4, 0.0},
      {7.3, 5.542, 59.0, 1.4, 0.0},
  };
  CHECK_FALSE(pedestrian_at(script, 3.999).has_value());
  CHECK_FALSE(pedestrian_at(script, 7.3).has_value());   // half-open at the end
  CHECK_FALSE(pedestrian_at({script[0]}, 4.5).has_value());

  const auto mid = pedestrian_at(script, 4.95);  // halfway through segment 1
  REQUIRE(mid.has_value());
  CHECK(mid->x0 == doctest::Approx(0.5 * (6.27 + 3.5)));
  CHECK(mid->y0 == doctest::Approx(59.0));
  CHECK(mid->v_ped == doctest::Approx(2.77 / 1.9));
  CHECK(mid->xi == doctest::Approx(-kPi));  // walking toward -x, normalized

  const auto start = pedestrian_at(script, 4.0);
  REQUIRE(start.has_value());
  CHECK(start->x0 == doctest::Approx(6.27));

  // dwell segment: zero displacement => speed 0, heading from the waypoint
  std::vector<PedWaypoint> dwell{{0.0, 1.0, 2.0, 1.4, -kPi / 2}, {5.0, 1.0, 2.0, 1.4, -kPi / 2}};
  const auto still = pedestrian_at(dwell, 2.5);
  REQUIRE(still.has_value());
  CHECK(still->v_ped == 0.0);
  CHECK(still->xi == doctest::Approx(-kPi / 2));
  CHECK(still->x0 == 1.0);
  CHECK(still->y0 == 2.0);
}

TEST_CASE("keep-out ellipse sizing and placement") {
  EllipseParams ep;  // epsilon 2, k1 1.5, k2 18, k3 10, lambda 2
  PedestrianState ped{0.0, 0.0, 1.5, 0.0};
  const auto [A, B] = ellipse_axes(ped, 18.0, 10.0, ep);
  CHECK(A == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(B == doctest::Approx(1.5).epsilon(1e-12));

  // stationary pedestrian: axes collapse to the baseline regardless of range
  PedestrianState still{4.0, 7.0, 0.0, 1.2};
  const auto [A0, B0] = ellipse_axes(still, 55.0, 22.0, ep);
  CHECK(A0 == 2.0);
  CHECK(B0 == 1.0);

  CHECK_THROWS_AS(ellipse_axes(ped, -1.0, 10.0, ep), DomainError);
  CHECK_THROWS_AS(ellipse_axes(ped, 10.0, -0.1, ep), DomainError);

  // center leads the pedestrian by A/2 along the walking direction
  PedestrianState walker{2.0, 3.0, 1.0, kPi / 2};
  const auto [xc, yc] = ellipse_center(walker, 3.0);
  CHECK(xc == doctest::Approx(2.0));
  CHECK(yc == doctest::Approx(4.5));
  CHECK_THROWS_AS(ellipse_center(walker, 0.0), DomainError);

  const auto ell = unsafe_ellipse(ped, 18.0, 10.0, ep);
  CHECK(ell.A == doctest::Approx(3.0));
  CHECK(ell.B == doctest::Approx(1.5));
  CHECK(ell.xc == doctest::Approx(1.5));  // xi = 0 => +x offset
  CHECK(ell.yc == doctest::Approx(0.0));
  CHECK(ell.xi == 0.0);
}

TEST_CASE("pedestrian barrier value: worked example") {
  EllipseUnsafeSet ell{0.0, 0.0, 3.0, 1.5, 0.0};
  BicycleState s{9.0, 0.0, 0.0, 5.0};
  // barycenter at (10, 0): b5 = 10^2/9 - 1 - 1
  CHECK(b5_value(s, ell, 2.0, 1.0) == doctest::Approx(100.0 / 9.0 - 2.0).epsilon(1e-12));

  // boundary of the inflated set: major^2/A^2 = 1 + r_b
  BicycleState edge{3.0 * std::sqrt(2.0) - 1.0, 0.0, 0.0, 5.0};
  CHECK(b5_value(edge, ell, 2.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

  EllipseUnsafeSet bad{0.0, 0.0, 0.0, 1.5, 0.0};
  CHECK_THROWS_AS(b5_value(s, bad, 2.0, 1.0), DomainError);
}

TEST_CASE("pedestrian barrier derivatives match finite differences") {
  std::mt19937 rng(47);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  const double sigma = 2.0, r_b = 1.35;
  for (int i = 0; i < 200; ++i) {
    EllipseUnsafeSet ell;
    ell.xc = -8.0 + 16.0 * d01(rng);
    ell.yc = -8.0 + 16.0 * d01(rng);
    ell.A = 1.5 + 2.5 * d01(rng);
    ell.B = ell.A / (1.3 + 0.9 * d01(rng));
    ell.xi = -kPi + 2.0 * kPi * d01(rng);
    BicycleState s;
    s.x = -10.0 + 20.0 * d01(rng);
    s.y = -10.0 + 20.0 * d01(rng);
    s.theta = -kPi + 2.0 * kPi * d01(rng);
    s.v = 0.5 + 14.5 * d01(rng);

    const auto bfun = [&](const BicycleState& q) { return b5_value(q, ell, sigma, r_b); };
    const auto bdot = [&](const BicycleState& q) {
      return b5_flow_derivative(q, ell, sigma, r_b);
    };

    // first derivative along the drift field
    CHECK(bdot(s) == doctest::Approx(along_f(bfun, s)).epsilon(1e-6));

    // second-order row: input coefficients and the constant term
    const auto row = pedestrian_hocbf(s, ell, sigma, r_b);
    REQUIRE(row.coeffs.size() == 4);
    CHECK(row.sense == Sense::Ge);
    CHECK(row.tag == ConstraintTag::Pedestrian);
    CHECK(row.coeffs[0] == doctest::Approx(along_g1(bdot, s, sigma)).epsilon(1e-6));
    CHECK(row.coeffs[1] == doctest::Approx(along_g2(bdot, s)).epsilon(1e-6));
    CHECK(row.coeffs[2] == 0.0);
    CHECK(row.coeffs[3] == 0.0);
    const double expect_rhs = -(along_f(bdot, s) + 2.0 * bdot(s) + bfun(s));
    CHECK(row.rhs == doctest::Approx(expect_rhs).epsilon(1e-6));
  }
}

TEST_CASE("road edge rows match finite differences and keep-out semantics") {
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  const double sigma = 2.0;
  for (int i = 0; i < 200; ++i) {
    const bool x_bounded = d01(rng) < 0.5;
    const double lo = -6.0 + 2.0 * d01(rng);
    const double hi = 4.0 + 2.0 * d01(rng);
    BicycleState s;
    s.x = -5.0 + 10.0 * d01(rng);
    s.y = -5.0 + 10.0 * d01(rng);
    s.theta = -kPi + 2.0 * kPi * d01(rng);
    s.v = 0.5 + 14.5 * d01(rng);
    const auto [low_row, high_row] = road_boundary_conditions(s, x_bounded, lo, hi, sigma);

    const auto check_row = [&](const LinearConstraint& row, double bound, double sgn) {
      const auto bfun = [&](const BicycleState& q) {
        const double c = x_bounded ? q.x : q.y;
        return sgn > 0 ? c - bound : bound - c;
      };
      const auto bdot = [&](const BicycleState& q) {
        return sgn * (x_bounded ? q.v * std::cos(q.theta) : q.v * std::sin(q.theta));
      };
      CHECK(row.coeffs[0] == doctest::Approx(along_g1(bdot, s, sigma)).epsilon(1e-6));
      CHECK(row.coeffs[1] == doctest::Approx(along_g2(bdot, s)).epsilon(1e-6));
      // Lf(bdot) = 0: heading and speed are untouched by the drift field
      CHECK(row.rhs == doctest::Approx(-(2.0 * bdot(s) + bfun(s))).epsilon(1e-9));
      CHECK(row.sense == Sense::Ge);
      CHECK(row.tag == ConstraintTag::RoadEdge);
    };
    check_row(low_row, lo, 1.0);
    check_row(high_row, hi, -1.0);
  }

  CHECK_THROWS_AS(road_boundary_conditions(BicycleState{}, true, 2.0, 2.0, sigma), DomainError);

  // heading straight down the corridor: zero input leaves slack = b exactly
  BicycleState ahead{1.0, 0.0, kPi / 2, 8.0};
  const auto [lo_row, hi_row] = road_boundary_conditions(ahead, true, -5.25, 5.25, sigma);
  CHECK(lo_row.slack({0.0, 0.0, 0.0, 0.0}) == doctest::Approx(6.25).epsilon(1e-12));
  CHECK(hi_row.slack({0.0, 0.0, 0.0, 0.0}) == doctest::Approx(4.25).epsilon(1e-12));
}

TEST_CASE("lane recentering soft row: worked example and finite differences") {
  BicycleState s{1.0, 0.0, 0.0, 10.0};  // one meter right of the reference
  const auto row = lane_recenter_soft(s, 0.0, 0.0, 2.0);
  REQUIRE(row.coeffs.size() == 4);
  CHECK(row.sense == Sense::Le);
  CHECK(row.tag == ConstraintTag::SoftLane);
  // 2 u2 + 241 <= e
  CHECK(row.coeffs[0] == doctest::Approx(0.0));
  CHECK(row.coeffs[1] == doctest::Approx(2.0));
  CHECK(row.coeffs[2] == -1.0);
  CHECK(row.coeffs[3] == 0.0);
  CHECK(row.rhs == doctest::Approx(-241.0).epsilon(1e-12));
  CHECK(row.slack({0.0, -3.0, 235.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-12));

  std::mt19937 rng(59);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  const double sigma = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double x_ref = -3.0 + 6.0 * d01(rng), y_ref = -3.0 + 6.0 * d01(rng);
    BicycleState q;
    q.x = x_ref - 3.0 + 6.0 * d01(rng);
    q.y = y_ref - 3.0 + 6.0 * d01(rng);
    q.theta = -kPi + 2.0 * kPi * d01(rng);
    q.v = 0.5 + 14.5 * d01(rng);
    const auto r = lane_recenter_soft(q, x_ref, y_ref, sigma);
    const auto vfun = [&](const BicycleState& w) {
      const double dx = w.x - x_ref, dy = w.y - y_ref;
      return dx * dx + dy * dy;
    };
    const auto vdot = [&](const BicycleState& w) {
      const double dx = w.x - x_ref, dy = w.y - y_ref;
      return 2.0 * (dx * w.v * std::cos(w.theta) + dy * w.v * std::sin(w.theta));
    };
    CHECK(r.coeffs[0] == doctest::Approx(along_g1(vdot, q, sigma)).epsilon(1e-6));
    CHECK(r.coeffs[1] == doctest::Approx(along_g2(vdot, q)).epsilon(1e-6));
    CHECK(r.rhs == doctest::Approx(-(along_f(vdot, q) + 2.0 * vdot(q) + vfun(q))).epsilon(1e-6));
  }
}

TEST_CASE("speed tracking soft row") {
  const auto row = speed_soft(10.0, 6.0);
  CHECK(row.sense == Sense::Le);
  CHECK(row.tag == ConstraintTag::SoftSpeed);
  CHECK(row.coeffs == std::vector<double>{0.0, 8.0, 0.0, -1.0});
  CHECK(row.rhs == -16.0);
  // 8 u2 + 16 <= s: satisfied exactly at u2 = -2, s = 0
  CHECK(row.slack({0.0, -2.0, 0.0, 0.0}) == doctest::Approx(0.0));
  // at the reference speed the row collapses to 0 <= s
  const auto at_ref = speed_soft(6.0, 6.0);
  CHECK(at_ref.coeffs[1] == 0.0);
  CHECK(at_ref.rhs == 0.0);
}

TEST_CASE("anti-overshoot holds the shifted half-plane on the deviation side") {
  // deviated toward +x around a lane centered at 2: keep x >= 1.95
  BicycleState s{2.5, 0.0, kPi / 2, 10.0};
  const auto row = anti_overshoot(s, true, 2.0, +1, 2.0, 0.05);
  CHECK(row.tag == ConstraintTag::AntiOvershoot);
  CHECK(row.sense == Sense::Ge);
  // at theta = pi/2 the x-flow is zero, so zero input leaves slack = x - 1.95
  CHECK(row.slack({0.0, 0.0, 0.0, 0.0}) == doctest::Approx(0.55).epsilon(1e-12));

  // deviated toward -x: keep x <= 2.05
  BicycleState s2{1.4, 0.0, kPi / 2, 10.0};
  const auto row2 = anti_overshoot(s2, true, 2.0, -1, 2.0, 0.05);
  CHECK(row2.slack({0.0, 0.0, 0.0, 0.0}) == doctest::Approx(0.65).epsilon(1e-12));

  CHECK_THROWS_AS(anti_overshoot(s, true, 2.0, 0, 2.0, 0.05), DomainError);
}

TEST_CASE("steering envelope shrinks linearly with speed") {
  const auto [hi, lo] = steering_limit(12.5, 0.6, 25.0);
  CHECK(hi.tag == ConstraintTag::Steering);
  CHECK(hi.rhs == doctest::Approx(std::tan(0.3)).epsilon(1e-12));
  CHECK(lo.rhs == doctest::Approx(-std::tan(0.3)).epsilon(1e-12));
  CHECK(hi.slack({std::tan(0.3), 0.0, 0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(lo.slack({-std::tan(0.3), 0.0, 0.0, 0.0}) == doctest::Approx(0.0));

  const auto [hi0, lo0] = steering_limit(0.0, 0.6, 25.0);
  CHECK(hi0.rhs == doctest::Approx(std::tan(0.6)));
  const auto [hiv, lov] = steering_limit(25.0, 0.6, 25.0);
  CHECK(hiv.rhs == doctest::Approx(0.0));
  CHECK(lov.rhs == doctest::Approx(0.0));
}

TEST_CASE("jerk window around the previous acceleration") {
  const auto [hi, lo] = jerk_bounds(0.0, 0.025, -7.0, 5.0);
  CHECK(hi.tag == ConstraintTag::Jerk);
  CHECK(hi.sense == Sense::Le);
  CHECK(lo.sense == Sense::Ge);
  CHECK(hi.rhs == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(lo.rhs == doctest::Approx(-0.175).epsilon(1e-12));
  const auto [hi2, lo2] = jerk_bounds(-1.0, 0.025, -7.0, 5.0);
  CHECK(hi2.rhs == doctest::Approx(-0.875));
  CHECK(lo2.rhs == doctest::Approx(-1.175));
  CHECK_THROWS_AS(jerk_bounds(0.0, 0.0, -7.0, 5.0), DomainError);
}

TEST_CASE("pedestrian invariance: filtered bicycle never enters the inflated ellipse") {
  const double sigma = 2.0, r_b = 1.35, dt = 0.025;
  EllipseParams ep;
  std::mt19937 rng(107);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  for (int run = 0; run < 50; ++run) {
    ep.epsilon = 1.5 + 2.5 * d01(rng);
    ep.lambda = 1.3 + 0.9 * d01(rng);
    // stationary pedestrian just off the lane line; axes stay fixed over time
    PedestrianState ped;
    ped.x0 = (0.4 + 1.8 * d01(rng)) * (d01(rng) < 0.5 ? -1.0 : 1.0);
    ped.y0 = 28.0 + 6.0 * d01(rng);
    ped.v_ped = 0.0;
    ped.xi = -kPi + 2.0 * kPi * d01(rng);

    BicycleState s{0.0, 4.0 * d01(rng), kPi / 2, 4.0 + 4.0 * d01(rng)};
    double u1_ref = 0.0, u2_ref = 0.0;
    for (int step = 0; step < 480; ++step) {
      if (step % 40 == 0) {
        u1_ref = -0.05 + 0.1 * d01(rng);
        u2_ref = 2.0 * d01(rng);  // keeps trying to speed up toward the pedestrian
      }
      const double d_i = std::hypot(s.x - ped.x0, s.y - ped.y0);
      const auto ell = unsafe_ellipse(ped, d_i, s.v, ep);

      QuadraticProgram qp;
      qp.n = 2;
      qp.weights = {1.0, 1.0};
      qp.linear = {-2.0 * u1_ref, -2.0 * u2_ref};
      qp.box_lo = {-1.0, -5.0};
      qp.box_hi = {1.0, 5.0};
      qp.constraints.push_back(trim2(pedestrian_hocbf(s, ell, sigma, r_b)));
      const auto [lo_row, hi_row] = road_boundary_conditions(s, true, -5.25, 5.25, sigma);
      qp.constraints.push_back(trim2(lo_row));
      qp.constraints.push_back(trim2(hi_row));
      const auto [st_hi, st_lo] = steering_limit(s.v, 0.6, 25.0);
      qp.constraints.push_back(trim2(st_hi));
      qp.constraints.push_back(trim2(st_lo));
      const auto [sp_hi, sp_lo] = speed_conditions(s.v, 0.1, 25.0);
      qp.constraints.push_back(embed(sp_hi, 1, 2));
      qp.constraints.push_back(embed(sp_lo, 1, 2));

      const auto sol = solve(qp);
      ControlInput u = sol.status == QPStatus::Optimal ? ControlInput{sol.x[0], sol.x[1]}
                                                       : ControlInput{0.0, -5.0};
      // same speed-band clamp the simulator applies before integrating, so
      // fallback braking cannot push the state outside the model's domain
      u.u2 = std::clamp(u.u2, (0.1 - s.v) / dt, (25.0 - s.v) / dt);
      s = step_bicycle(s, u, sigma, dt);

      const double d_next = std::hypot(s.x - ped.x0, s.y - ped.y0);
      const auto ell_next = unsafe_ellipse(ped, d_next, s.v, ep);
      REQUIRE(b5_value(s, ell_next, sigma, r_b) >= -1e-2);
      REQUIRE(s.x >= -5.25 - 1e-2);
      REQUIRE(s.x <= 5.25 + 1e-2);
    }
  }
}
