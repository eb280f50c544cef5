#include "cav/planner.hpp"

#include <algorithm>
#include <cmath>

#include "cav/errors.hpp"

namespace cav {
namespace {

// Time to cover L with a ramp phase u from v0 toward v_lim, then cruise.
double ramp_then_cruise(double v0, double L, double u, double v_lim) {
  const double t_ramp = (v_lim - v0) / u;  // u and (v_lim - v0) share sign
  const double d_ramp = 0.5 * (v0 + v_lim) * t_ramp;
  if (d_ramp >= L) {
    // L is reached during the ramp: first root of v0 t + u t^2 / 2 = L.
    const double disc = v0 * v0 + 2.0 * u * L;
    return (-v0 + std::sqrt(std::max(disc, 0.0))) / u;
  }
  return t_ramp + (L - d_ramp) / v_lim;
}

struct LateralCheck {
  double t_n;
  double b;  // |p_k - p_i| - phi * v_later - gamma_tilde at t_n
};

}  // namespace

FeasibleRange feasible_exit_range(double v0, double L, const ControllerParams& params) {
  if (L <= 0.0) throw DomainError("distance to exit must be > 0");
  if (v0 < params.v_min || v0 > params.v_max) {
    throw InfeasibleEntry("entry speed " + std::to_string(v0) + " outside [" +
                          std::to_string(params.v_min) + ", " + std::to_string(params.v_max) + "]");
  }
  FeasibleRange r;
  r.t_lower = v0 >= params.v_max ? L / params.v_max
                                 : ramp_then_cruise(v0, L, params.u_max, params.v_max);
  r.t_upper = v0 <= params.v_min ? L / params.v_min
                                 : ramp_then_cruise(v0, L, params.u_min, params.v_min);
  return r;
}

CubicTrajectory solve_cubic(double t0, double tf, double p0, double v0, double pf) {
  const double T = tf - t0;
  if (T < 1e-9) throw SingularSystem("exit time too close to start time");
  // In local time tau: p = phi3 tau^3 + phi2 tau^2 + v0 tau + p0 with
  // u(T) = 0 forcing phi2 = -3 phi3 T; p(T) = pf then fixes phi3.
  const double delta = pf - p0 - v0 * T;
  CubicTrajectory c;
  c.phi3 = -delta / (2.0 * T * T * T);
  c.phi2 = 3.0 * delta / (2.0 * T * T);
  c.phi1 = v0;
  c.phi0 = p0;
  c.t0 = t0;
  c.tf = tf;
  return c;
}

std::optional<Violation> check_feasible(const CubicTrajectory& traj, int vehicle_id,
                                        const CoordinatorDb& db, const ControllerParams& params) {
  constexpr double kTol = 1e-9;
  const double v_cap = std::min(params.v_max, db.speed_limit());
  const double dt = params.dt;

  const auto own = db.record_of(vehicle_id);
  const double entry_time = own ? own->zone_entry_time : traj.t0;
  const auto pred = db.predecessor_of(traj.path_id, entry_time, vehicle_id);

  std::optional<Violation> grid_hit;
  const int steps = static_cast<int>(std::ceil((traj.tf - traj.t0) / dt - 1e-9));
  for (int k = 0; k <= steps && !grid_hit; ++k) {
    const double t = std::min(traj.t0 + k * dt, traj.tf);
    const double v = traj.speed(t);
    const double u = traj.accel(t);
    // k == 0 is the current state: the entry speed is a given, not a
    // decision, so speed bounds apply only from the first step onward.
    // This lets a vehicle that was braked below the floor plan its way out.
    if (k > 0 && v > v_cap + kTol) {
      grid_hit = Violation{ViolationKind::SpeedMax, t};
    } else if (k > 0 && v < params.v_min - kTol) {
      grid_hit = Violation{ViolationKind::SpeedMin, t};
    } else if (u > params.u_max + kTol) {
      grid_hit = Violation{ViolationKind::AccelMax, t};
    } else if (u < params.u_min - kTol) {
      grid_hit = Violation{ViolationKind::AccelMin, t};
    } else if (pred) {
      const double gap = extended_position(pred->traj, t) - traj.position(t);
      if (gap - params.phi * v - params.gamma < -kTol) {
        grid_hit = Violation{ViolationKind::RearEnd, t};
      }
    }
  }

  // Conflict-point checks at the earlier of the two crossing times.
  std::optional<Violation> lateral_hit;
  for (const auto& [other_id, rec] : db.records()) {
    if (other_id == vehicle_id || rec.path_id == traj.path_id) continue;
    const auto shared = db.scenario().shared_conflict(traj.path_id, rec.path_id);
    if (!shared) continue;
    const double L_own = db.scenario().conflict_distance(traj.path_id, *shared);
    const double t_own = crossing_time(traj, L_own);
    const auto it = rec.crossing_times.find(*shared);
    if (it == rec.crossing_times.end()) continue;
    const double t_other = it->second;
    const double t_n = std::min(t_own, t_other);
    if (t_n < traj.t0) continue;  // interaction already resolved before this plan

    const double p_i = extended_position(traj, t_n);
    const double p_k = extended_position(rec.traj, t_n);
    const double v_later = t_own >= t_other ? extended_speed(traj, t_n)
                                            : extended_speed(rec.traj, t_n);
    const double gamma_tilde = params.gamma + db.scenario().zeta(traj.path_id, rec.path_id);
    const double b = std::fabs(p_k - p_i) - params.phi * v_later - gamma_tilde;
    if (b < -kTol && (!lateral_hit || t_n < lateral_hit->t)) {
      lateral_hit = Violation{ViolationKind::Lateral, t_n};
    }
  }

  if (grid_hit && lateral_hit) return grid_hit->t <= lateral_hit->t ? grid_hit : lateral_hit;
  return grid_hit ? grid_hit : lateral_hit;
}

std::variant<CubicTrajectory, NeedsSafetyFilter> plan_min_time(const PlanRequest& req,
                                                               const CoordinatorDb& db,
                                                               const ControllerParams& params) {
  const double L = req.exit_position - req.p0;
  ControllerParams capped = params;
  capped.v_max = std::min(params.v_max, db.speed_limit());
  // The range only seeds the scan window; an entry speed pushed outside the
  // band (e.g. braked to a stop by the safety filter) is clamped here and the
  // true speed still appears in every candidate via solve_cubic.
  const double v_seed = std::clamp(req.v0, capped.v_min, capped.v_max);
  const FeasibleRange range = feasible_exit_range(v_seed, L, capped);

  for (double T = range.t_lower; T <= range.t_upper + 1e-12; T += params.dt) {
    CubicTrajectory cand = solve_cubic(req.t0, req.t0 + T, req.p0, req.v0, req.exit_position);
    cand.path_id = req.path_id;
    if (!check_feasible(cand, req.vehicle_id, db, params)) return cand;
    // Terminal speed 1.5 L / T - 0.5 v0 decreases in T, so once it drops
    // below the floor every longer candidate is infeasible as well.
    if (cand.speed(cand.tf) < params.v_min - 1e-9) break;
  }
  return NeedsSafetyFilter{};
}

double reference_control(const CubicTrajectory& traj, double t) {
  if (t > traj.tf) return 0.0;
  return traj.accel(t);
}

}  // namespace cav
