#pragma once

#include <optional>
#include <variant>

#include "cav/coordinator.hpp"
#include "cav/scenario.hpp"
#include "cav/trajectory.hpp"

namespace cav {

struct FeasibleRange {
  double t_lower = 0.0;
  double t_upper = 0.0;
};

enum class ViolationKind { SpeedMax, SpeedMin, AccelMax, AccelMin, RearEnd, Lateral };

struct Violation {
  ViolationKind kind = ViolationKind::SpeedMax;
  double t = 0.0;
};

// Traversal-time window over distance L starting at speed v0: fastest =
// full-throttle to v_max then cruise, slowest = full-brake to v_min then
// crawl. Throws InfeasibleEntry when v0 lies outside [v_min, v_max].
FeasibleRange feasible_exit_range(double v0, double L, const ControllerParams& params);

// Unique cubic with p(t0)=p0, v(t0)=v0, p(tf)=pf, u(tf)=0. Throws
// SingularSystem when the window is shorter than 1e-9 s.
CubicTrajectory solve_cubic(double t0, double tf, double p0, double v0, double pf);

// Samples [t0, tf] at dt and checks speed band, input bounds, the rear-end
// gap against the committed predecessor, and the conflict-point condition at
// each shared conflict (evaluated at the earlier crossing time, with the
// later crosser's speed). Returns the earliest violation, or nullopt.
std::optional<Violation> check_feasible(const CubicTrajectory& traj, int vehicle_id,
                                        const CoordinatorDb& db, const ControllerParams& params);

struct PlanRequest {
  int vehicle_id = 0;
  int path_id = 0;
  double t0 = 0.0;    // planning time
  double p0 = 0.0;    // current arclength on the path
  double v0 = 0.0;    // current speed
  double exit_position = 0.0;  // arclength of the control-zone exit
};

// Returned when no exit time on the grid yields a feasible cubic; the caller
// falls back to certificate-filtered driving.
struct NeedsSafetyFilter {};

// Scans exit times t0 + [t_lower, t_upper] on the dt grid and returns the
// first cubic that passes check_feasible. The speed band is capped by the
// coordinator's current speed limit.
std::variant<CubicTrajectory, NeedsSafetyFilter> plan_min_time(const PlanRequest& req,
                                                               const CoordinatorDb& db,
                                                               const ControllerParams& params);

// Planned acceleration at time t; zero once the plan has completed.
double reference_control(const CubicTrajectory& traj, double t);

}  // namespace cav
