#include "cav/sim.hpp"

#include <algorithm>
#include <cmath>

#include "cav/barriers.hpp"
#include "cav/errors.hpp"
#include "cav/planner.hpp"
#include "cav/qpsolve.hpp"

namespace cav {
namespace {

constexpr double kEps = 1e-9;

CubicTrajectory constant_speed_record(int path_id, double t0, double p, double v) {
  CubicTrajectory c;
  c.phi0 = p;
  c.phi1 = v;
  c.t0 = t0;
  c.tf = t0;  // zero-length window: evaluation is pure constant-speed extension
  c.path_id = path_id;
  return c;
}

}  // namespace

std::string to_string(VehicleMode mode) {
  switch (mode) {
    case VehicleMode::Normal: return "Normal";
    case VehicleMode::Filtered: return "Filtered";
    case VehicleMode::Emergency: return "Emergency";
    case VehicleMode::Recovery: return "Recovery";
  }
  return "?";
}

World::World(const ScenarioConfig& cfg, const WorldOptions& opts)
    : cfg_(cfg), opts_(opts), db_(cfg), rng_(opts.seed ? *opts.seed : cfg.params.seed) {
  for (const auto& spec : cfg_.vehicles) {
    Vehicle veh;
    veh.id = spec.id;
    veh.path_id = spec.path;
    vehicles_[spec.id] = veh;
  }
}

const Vehicle& World::vehicle(int id) const {
  const auto it = vehicles_.find(id);
  if (it == vehicles_.end()) throw ValidationError("vehicles", "unknown vehicle " + std::to_string(id));
  return it->second;
}

bool World::complete() const {
  return std::all_of(vehicles_.begin(), vehicles_.end(),
                     [](const auto& kv) { return kv.second.done; });
}

void World::run(double until) {
  while (!complete() && t_ < until - kEps) step();
}

void World::step() {
  eval_pedestrian();
  spawn_pending();
  broadcast_if_detected();
  transition_modes();
  apply_controls_and_trace();
  refresh_live_records();
  process_replan_queue();
  t_ += cfg_.params.dt;
}

void World::eval_pedestrian() {
  ped_ = pedestrian_at(cfg_.ped_script, t_);
  ped_roads_.clear();
  if (ped_) {
    for (int road : cfg_.road_ids()) {
      if (cfg_.road_corridor(road).contains(ped_->x0, ped_->y0)) ped_roads_.push_back(road);
    }
  }
  // The critical event ends once the pedestrian is off every road.
  if (event_broadcast_ && ped_roads_.empty()) event_active_ = false;
}

bool World::on_pedestrian_road(const Vehicle& veh) const {
  const int road = cfg_.path(veh.path_id).road;
  return std::find(ped_roads_.begin(), ped_roads_.end(), road) != ped_roads_.end();
}

std::vector<int> World::detect_pedestrian() const {
  std::vector<int> out;
  if (!ped_) return out;
  for (const auto& [id, veh] : vehicles_) {
    if (!veh.spawned || veh.done) continue;
    if (!on_pedestrian_road(veh)) continue;
    const double d = std::hypot(ped_->x0 - veh.state.x, ped_->y0 - veh.state.y);
    if (d <= cfg_.params.sensing_range) out.push_back(id);
  }
  return out;
}

void World::sync_world_from_lon(Vehicle& veh) {
  const PathGeometry& path = cfg_.path(veh.path_id);
  veh.state.x = path.point_x(veh.lon.p);
  veh.state.y = path.point_y(veh.lon.p);
  veh.state.theta = normalize_angle(path.heading);
  veh.state.v = veh.lon.v;
}

void World::sync_lon_from_world(Vehicle& veh) {
  const PathGeometry& path = cfg_.path(veh.path_id);
  veh.lon.p = path.arclength_of(veh.state.x, veh.state.y);
  veh.lon.v = veh.state.v;
}

void World::enter_emergency(Vehicle& veh) {
  veh.mode = VehicleMode::Emergency;
  veh.mode_entry_time = t_;
  veh.plan.reset();
  veh.warm_active.clear();
  db_.update_live_record(veh.id, constant_speed_record(veh.path_id, t_, veh.lon.p, veh.lon.v));
}

bool World::try_replan(Vehicle& veh, double t0) {
  const PathGeometry& path = cfg_.path(veh.path_id);
  if (veh.lon.p >= path.length - 1e-6) return false;
  if (veh.lon.v <= 0.0) return false;  // cannot plan an exit from standstill/reverse
  PlanRequest req;
  req.vehicle_id = veh.id;
  req.path_id = veh.path_id;
  req.t0 = t0;
  req.p0 = veh.lon.p;
  req.v0 = veh.lon.v;
  req.exit_position = path.length;
  const auto result = plan_min_time(req, db_, cfg_.params);
  if (std::holds_alternative<NeedsSafetyFilter>(result)) return false;
  const auto& traj = std::get<CubicTrajectory>(result);
  db_.commit_trajectory(veh.id, traj, db_.version());
  veh.plan = traj;
  veh.mode = VehicleMode::Normal;
  veh.mode_entry_time = t0;
  veh.warm_active.clear();
  return true;
}

void World::spawn_pending() {
  // Gather due spawns in (arrival, id) order, then shuffle exact-tie groups:
  // simultaneous entries are processed in coin-flip order.
  std::vector<const VehicleSpec*> due;
  for (const auto& spec : cfg_.vehicles) {
    if (!vehicles_.at(spec.id).spawned && spec.arrival <= t_ + kEps) due.push_back(&spec);
  }
  std::sort(due.begin(), due.end(), [](const VehicleSpec* a, const VehicleSpec* b) {
    if (a->arrival != b->arrival) return a->arrival < b->arrival;
    return a->id < b->id;
  });
  for (std::size_t lo = 0; lo < due.size();) {
    std::size_t hi = lo + 1;
    while (hi < due.size() && std::fabs(due[hi]->arrival - due[lo]->arrival) < 1e-12) ++hi;
    for (std::size_t i = hi - lo - 1; i > 0; --i) {  // Fisher-Yates within the tie group
      const std::size_t j = rng_() % (i + 1);
      std::swap(due[lo + i], due[lo + j]);
    }
    lo = hi;
  }

  for (const VehicleSpec* spec : due) {
    Vehicle& veh = vehicles_.at(spec->id);
    veh.spawned = true;
    veh.mode_entry_time = t_;
    veh.lon = {0.0, spec->entry_speed};
    sync_world_from_lon(veh);
    if (event_active_ && on_pedestrian_road(veh)) {
      enter_emergency(veh);
      continue;
    }
    if (try_replan(veh, t_)) continue;
    veh.mode = VehicleMode::Filtered;
    db_.update_live_record(veh.id, constant_speed_record(veh.path_id, t_, 0.0, spec->entry_speed));
    replan_queue_.push_back(veh.id);
  }
}

void World::rebuild_replan_queue() {
  std::vector<ChainEntry> entries;
  ControllerParams capped = cfg_.params;
  capped.v_max = std::min(cfg_.params.v_max, db_.speed_limit());
  // Within a chain the vehicle closest to the exit replans first; zone entry
  // order equals on-path order, so sort by (path, zone entry time).
  std::vector<const Vehicle*> pool;
  for (const auto& [id, veh] : vehicles_) {
    if (veh.spawned && !veh.done && veh.mode == VehicleMode::Filtered) pool.push_back(&veh);
  }
  std::sort(pool.begin(), pool.end(), [&](const Vehicle* a, const Vehicle* b) {
    if (a->path_id != b->path_id) return a->path_id < b->path_id;
    return a->lon.p > b->lon.p;
  });
  for (const Vehicle* veh : pool) {
    const double L_rem = cfg_.path(veh->path_id).length - veh->lon.p;
    if (L_rem <= 0.0) continue;
    FeasibleRange range;
    try {
      range = feasible_exit_range(std::clamp(veh->lon.v, capped.v_min, capped.v_max), L_rem, capped);
    } catch (const InfeasibleEntry&) {
      continue;
    }
    ChainEntry e;
    e.vehicle_id = veh->id;
    e.weight = 1.0 / std::max(range.t_upper - range.t_lower, 1e-9);
    e.processing_time = range.t_lower;
    e.path_id = veh->path_id;
    entries.push_back(e);
  }
  for (int id : resequence(entries)) replan_queue_.push_back(id);
}

void World::broadcast_if_detected() {
  if (event_broadcast_ || detect_pedestrian().empty()) return;
  event_broadcast_ = true;
  event_active_ = true;
  for (auto& [id, veh] : vehicles_) {
    if (!veh.spawned || veh.done) continue;
    if (on_pedestrian_road(veh)) {
      if (veh.mode != VehicleMode::Emergency) enter_emergency(veh);
    } else if (veh.mode == VehicleMode::Normal) {
      veh.mode = VehicleMode::Filtered;
      veh.mode_entry_time = t_;
      db_.update_live_record(id, constant_speed_record(veh.path_id, t_, veh.lon.p, veh.lon.v));
    }
  }
  replan_queue_.clear();
  rebuild_replan_queue();
}

bool World::aligned(const Vehicle& veh) const {
  const PathGeometry& path = cfg_.path(veh.path_id);
  const double lat = path.lateral_offset(veh.state.x, veh.state.y);
  const double dth = normalize_angle(veh.state.theta - path.heading);
  return std::fabs(lat) <= cfg_.params.align_lateral_tol &&
         std::fabs(dth) <= cfg_.params.align_heading_tol;
}

bool World::passed_pedestrian(const Vehicle& veh) const {
  if (!ped_) return true;
  const PathGeometry& path = cfg_.path(veh.path_id);
  const double s_ped = path.arclength_of(ped_->x0, ped_->y0);
  return veh.lon.p > s_ped + cfg_.params.pass_clearance;
}

void World::transition_modes() {
  for (auto& [id, veh] : vehicles_) {
    if (!veh.spawned || veh.done) continue;
    if (veh.mode == VehicleMode::Emergency) {
      const bool own_clear = !event_active_ || passed_pedestrian(veh);
      if (!own_clear) continue;
      if (aligned(veh)) {
        sync_lon_from_world(veh);
        sync_world_from_lon(veh);  // snap onto the centerline (within tolerance)
        veh.state.theta = normalize_angle(cfg_.path(veh.path_id).heading);
        if (!try_replan(veh, t_)) {
          veh.mode = VehicleMode::Filtered;
          veh.mode_entry_time = t_;
        }
      } else {
        veh.mode = VehicleMode::Recovery;
        veh.mode_entry_time = t_;
        const RoadCorridor corridor = cfg_.road_corridor(cfg_.path(veh.path_id).road);
        const double coord = corridor.x_bounded ? veh.state.x : veh.state.y;
        const double center = corridor.x_bounded ? cfg_.path(veh.path_id).entry_x
                                                 : cfg_.path(veh.path_id).entry_y;
        veh.deviation_side = coord >= center ? 1 : -1;
        veh.warm_active.clear();
      }
    } else if (veh.mode == VehicleMode::Recovery) {
      if (!aligned(veh)) continue;
      sync_lon_from_world(veh);
      sync_world_from_lon(veh);
      veh.state.theta = normalize_angle(cfg_.path(veh.path_id).heading);
      if (!try_replan(veh, t_)) {
        veh.mode = VehicleMode::Filtered;
        veh.mode_entry_time = t_;
      }
    }
  }
}

std::vector<LinearConstraint> World::longitudinal_certificates(const Vehicle& veh) const {
  const ControllerParams& P = cfg_.params;
  std::vector<LinearConstraint> rows;
  const double v_cap = std::min(P.v_max, db_.speed_limit());
  auto [hi, lo] = speed_conditions(veh.lon.v, P.v_min, v_cap);
  rows.push_back(hi);
  rows.push_back(lo);

  const auto own = db_.record_of(veh.id);
  const double entry_time = own ? own->zone_entry_time : t_;
  if (const auto pred = db_.predecessor_of(veh.path_id, entry_time, veh.id)) {
    const double p_k = extended_position(pred->traj, t_);
    const double v_k = extended_speed(pred->traj, t_);
    rows.push_back(rear_end_condition(veh.lon.p, veh.lon.v, p_k, v_k, P.phi, P.gamma));
  }

  for (const auto& ref : cfg_.path(veh.path_id).conflicts) {
    if (veh.lon.p > ref.arclength) continue;  // conflict already behind us
    const double t_own_est = t_ + (ref.arclength - veh.lon.p) / std::max(veh.lon.v, P.v_min);
    for (const auto& [other_id, rec] : db_.records()) {
      if (other_id == veh.id || rec.path_id == veh.path_id) continue;
      const auto it = rec.crossing_times.find(ref.conflict_id);
      if (it == rec.crossing_times.end()) continue;
      if (it->second > t_own_est) continue;  // we cross first; the other holds the certificate
      PhiParams pp;
      pp.phi = P.phi;
      pp.gamma_tilde = P.gamma + cfg_.zeta(veh.path_id, rec.path_id);
      pp.v0 = cfg_.vehicle(veh.id).entry_speed;
      pp.L = ref.arclength;
      double p_k = extended_position(rec.traj, t_);
      double v_k = extended_speed(rec.traj, t_);
      if (p_k < veh.lon.p) {
        // The margin uses |p_k - p_i|; on the branch where the earlier
        // crosser sits numerically behind, mirror its state about ours so
        // the signed row matches the mirrored absolute value.
        p_k = 2.0 * veh.lon.p - p_k;
        v_k = 2.0 * veh.lon.v - v_k;
      }
      rows.push_back(lateral_condition(veh.lon.p, veh.lon.v, p_k, v_k, pp));
    }
  }
  return rows;
}

std::string World::tags_of(const std::vector<LinearConstraint>& rows, const std::vector<double>& x,
                           bool infeasible) const {
  if (infeasible) return "Infeasible";
  std::string out;
  for (const auto& row : rows) {
    if (std::fabs(row.slack(x)) > 1e-6) continue;
    if (!out.empty()) out += "|";
    out += to_string(row.tag);
  }
  return out.empty() ? "-" : out;
}

ControlInput World::filtered_control(Vehicle& veh) {
  const ControllerParams& P = cfg_.params;
  const double u_ref = veh.plan ? reference_control(*veh.plan, t_) : 0.0;

  QuadraticProgram qp;
  qp.n = 1;
  qp.weights = {1.0};
  qp.linear = {-2.0 * u_ref};
  qp.constraints = longitudinal_certificates(veh);
  qp.box_lo = {P.u_min};
  qp.box_hi = {P.u_max};
  const QPSolution sol = cav::solve(qp);

  ControlInput u;
  if (sol.status == QPStatus::Optimal) {
    u.u2 = sol.x[0];
    veh.last_qp_infeasible = false;
  } else {
    u.u2 = std::max(P.u_min, veh.u2_prev + P.j_min * P.dt);
    u.u2 = std::clamp(u.u2, (P.v_min - veh.lon.v) / P.dt, (P.v_max - veh.lon.v) / P.dt);
    veh.last_qp_infeasible = true;
  }
  veh.delta = 0.0;
  trace_.back().active_tags = tags_of(qp.constraints, {u.u2}, veh.last_qp_infeasible);
  return u;
}

ControlInput World::emergency_control(Vehicle& veh) {
  const ControllerParams& P = cfg_.params;
  const bool recovery = veh.mode == VehicleMode::Recovery;
  const ModeWeights& w = recovery ? P.w_recovery : P.w_emergency;
  const PathGeometry& path = cfg_.path(veh.path_id);
  const RoadCorridor corridor = cfg_.road_corridor(path.road);

  QuadraticProgram qp;
  qp.n = 4;  // [u1, u2, e, s]
  qp.weights = {w.w2, w.w1, w.w3, w.w4};
  qp.linear = {0.0, 0.0, 0.0, 0.0};
  if (recovery) {
    // Reference accel pulls the vehicle back toward the event desired speed;
    // without it the recentering row can brake the vehicle onto the speed
    // floor where steering loses authority and realignment stalls.
    const double u_ref =
        std::clamp((P.emergency_speed - veh.state.v) / 1.0, P.u_min, P.u_max);
    qp.linear[1] = -2.0 * w.w1 * u_ref;
  }

  for (const auto& row : longitudinal_certificates(veh)) {
    qp.constraints.push_back(embed(row, 1, 4));
  }
  if (ped_) {
    const double bx = veh.state.x + (P.sigma / 2.0) * std::cos(veh.state.theta);
    const double by = veh.state.y + (P.sigma / 2.0) * std::sin(veh.state.theta);
    const double d_i = std::hypot(ped_->x0 - bx, ped_->y0 - by);
    const EllipseUnsafeSet ell = unsafe_ellipse(*ped_, d_i, veh.state.v, cfg_.ellipse_for(veh.id));
    qp.constraints.push_back(pedestrian_hocbf(veh.state, ell, P.sigma, P.r_b));
  }
  {
    auto [lo_row, hi_row] =
        road_boundary_conditions(veh.state, corridor.x_bounded, corridor.lo, corridor.hi, P.sigma);
    qp.constraints.push_back(lo_row);
    qp.constraints.push_back(hi_row);
  }
  {
    auto [hi_row, lo_row] = steering_limit(veh.state.v, P.delta_max0, P.v_max);
    qp.constraints.push_back(hi_row);
    qp.constraints.push_back(lo_row);
  }
  {
    auto [hi_row, lo_row] = jerk_bounds(veh.u2_prev, P.dt, P.j_min, P.j_max);
    hi_row.rhs = std::min(hi_row.rhs, P.u_max);  // jerk window clipped to input bounds
    lo_row.rhs = std::max(lo_row.rhs, P.u_min);
    qp.constraints.push_back(hi_row);
    qp.constraints.push_back(lo_row);
  }
  if (recovery) {
    qp.constraints.push_back(
        lane_recenter_soft(veh.state, path.point_x(veh.lon.p), path.point_y(veh.lon.p), P.sigma));
    if (opts_.anti_overshoot) {
      const double center = corridor.x_bounded ? path.entry_x : path.entry_y;
      qp.constraints.push_back(anti_overshoot(veh.state, corridor.x_bounded, center,
                                              veh.deviation_side, P.sigma, P.overshoot_margin));
    }
  } else {
    qp.constraints.push_back(speed_soft(veh.state.v, P.emergency_speed));
  }

  const QPSolution sol = cav::solve(qp, veh.warm_active);
  ControlInput u;
  if (sol.status == QPStatus::Optimal) {
    u.u1 = sol.x[0];
    u.u2 = sol.x[1];
    veh.warm_active = sol.active;
    veh.last_qp_infeasible = false;
    trace_.back().active_tags = tags_of(qp.constraints, sol.x, false);
  } else {
    u.u1 = 0.0;
    u.u2 = std::max(P.u_min, veh.u2_prev + P.j_min * P.dt);
    u.u2 = std::clamp(u.u2, (P.v_min - veh.state.v) / P.dt, (P.v_max - veh.state.v) / P.dt);
    veh.warm_active.clear();
    veh.last_qp_infeasible = true;
    trace_.back().active_tags = "Infeasible";
  }
  veh.delta = steering_inverse(u.u1);
  return u;
}

void World::apply_controls_and_trace() {
  const ControllerParams& P = cfg_.params;
  for (auto& [id, veh] : vehicles_) {
    if (!veh.spawned || veh.done) continue;

    TraceRecord rec;
    rec.t = t_;
    rec.vehicle_id = id;
    rec.mode = veh.mode;
    rec.p = veh.lon.p;
    rec.v = veh.lon.v;
    rec.x = veh.state.x;
    rec.y = veh.state.y;
    rec.theta = veh.state.theta;
    if (ped_) {
      const double bx = veh.state.x + (P.sigma / 2.0) * std::cos(veh.state.theta);
      const double by = veh.state.y + (P.sigma / 2.0) * std::sin(veh.state.theta);
      const double d_i = std::hypot(ped_->x0 - bx, ped_->y0 - by);
      const EllipseUnsafeSet ell = unsafe_ellipse(*ped_, d_i, veh.state.v, cfg_.ellipse_for(id));
      rec.b5 = b5_value(veh.state, ell, P.sigma, P.r_b);
    }
    trace_.push_back(rec);

    ControlInput u;
    switch (veh.mode) {
      case VehicleMode::Normal: {
        u.u2 = reference_control(*veh.plan, t_);
        veh.delta = 0.0;
        trace_.back().active_tags = "-";
        break;
      }
      case VehicleMode::Filtered:
        u = filtered_control(veh);
        break;
      case VehicleMode::Emergency:
      case VehicleMode::Recovery:
        u = emergency_control(veh);
        break;
    }
    trace_.back().u2 = u.u2;
    trace_.back().delta = veh.delta;

    // Integrate. Normal mode follows its plan exactly; Filtered stays on the
    // centerline; Emergency/Recovery run the full bicycle model.
    const double t_next = t_ + P.dt;
    switch (veh.mode) {
      case VehicleMode::Normal:
        veh.lon.p = veh.plan->position(std::min(t_next, veh.plan->tf));
        veh.lon.v = veh.plan->speed(std::min(t_next, veh.plan->tf));
        sync_world_from_lon(veh);
        break;
      case VehicleMode::Filtered:
        veh.lon = step_double_integrator(veh.lon, u.u2, P.dt);
        sync_world_from_lon(veh);
        break;
      case VehicleMode::Emergency:
      case VehicleMode::Recovery:
        veh.state = step_bicycle(veh.state, u, P.sigma, P.dt);
        veh.state.theta = normalize_angle(veh.state.theta);
        sync_lon_from_world(veh);
        break;
    }
    veh.u2_prev = u.u2;

    if (veh.lon.p >= cfg_.path(veh.path_id).length - kEps) {
      veh.done = true;
      db_.erase(id);
      const auto q = std::find(replan_queue_.begin(), replan_queue_.end(), id);
      if (q != replan_queue_.end()) replan_queue_.erase(q);
    }
  }
}

void World::refresh_live_records() {
  const double t_next = t_ + cfg_.params.dt;
  for (auto& [id, veh] : vehicles_) {
    if (!veh.spawned || veh.done || veh.mode == VehicleMode::Normal) continue;
    db_.update_live_record(id, constant_speed_record(veh.path_id, t_next, veh.lon.p, veh.lon.v));
  }
}

void World::process_replan_queue() {
  const bool any_filtered =
      std::any_of(vehicles_.begin(), vehicles_.end(), [](const auto& kv) {
        return kv.second.spawned && !kv.second.done && kv.second.mode == VehicleMode::Filtered;
      });
  if (replan_queue_.empty() && any_filtered) rebuild_replan_queue();

  while (!replan_queue_.empty()) {
    const int id = replan_queue_.front();
    replan_queue_.pop_front();
    Vehicle& veh = vehicles_.at(id);
    if (!veh.spawned || veh.done || veh.mode != VehicleMode::Filtered) continue;
    try_replan(veh, t_ + cfg_.params.dt);  // one attempt per step, success or not
    break;
  }
}

SafetyMetrics compute_metrics(const std::vector<TraceRecord>& trace, const ScenarioConfig& cfg) {
  SafetyMetrics m;
  const ControllerParams& P = cfg.params;

  // Group records by step (records of one step share the exact same t).
  std::map<double, std::map<int, const TraceRecord*>> by_step;
  for (const auto& rec : trace) {
    by_step[rec.t][rec.vehicle_id] = &rec;
    m.speed_series[rec.vehicle_id].push_back({rec.t, rec.v});
    if (rec.b5 && (!m.min_pedestrian || *rec.b5 < *m.min_pedestrian)) m.min_pedestrian = *rec.b5;
  }

  // Rear-end slack between same-path pairs present in the same step.
  for (const auto& [t, recs] : by_step) {
    for (auto i = recs.begin(); i != recs.end(); ++i) {
      for (auto j = std::next(i); j != recs.end(); ++j) {
        if (cfg.vehicle(i->first).path != cfg.vehicle(j->first).path) continue;
        const TraceRecord* lead = i->second->p >= j->second->p ? i->second : j->second;
        const TraceRecord* tail = lead == i->second ? j->second : i->second;
        const double b1 = lead->p - tail->p - P.phi * tail->v - P.gamma;
        if (!m.min_rear_end || b1 < *m.min_rear_end) m.min_rear_end = b1;
      }
    }
  }

  // Conflict-point slack per cross-path pair: the position-ramped barrier of
  // the not-yet-crossed vehicle, evaluated at the step where the first of the
  // two reaches its conflict arclength (the anchor the controllers enforce).
  for (std::size_t a = 0; a < cfg.vehicles.size(); ++a) {
    for (std::size_t b = a + 1; b < cfg.vehicles.size(); ++b) {
      const VehicleSpec& va = cfg.vehicles[a];
      const VehicleSpec& vb = cfg.vehicles[b];
      if (va.path == vb.path) continue;
      const auto shared = cfg.shared_conflict(va.path, vb.path);
      if (!shared) continue;
      const double La = cfg.conflict_distance(va.path, *shared);
      const double Lb = cfg.conflict_distance(vb.path, *shared);
      const double gamma_tilde = P.gamma + cfg.zeta(va.path, vb.path);

      const auto ramped_slack = [&](const TraceRecord& later, const TraceRecord& first,
                                    double L_later, double v0_later) {
        PhiParams pp;
        pp.phi = P.phi;
        pp.gamma_tilde = gamma_tilde;
        pp.v0 = v0_later;
        pp.L = L_later;
        const double phi_p = phi_lemma1(pp, std::clamp(later.p, 0.0, L_later));
        return std::fabs(first.p - later.p) - phi_p * later.v - gamma_tilde;
      };

      for (const auto& [t, recs] : by_step) {
        const auto ia = recs.find(va.id);
        const auto ib = recs.find(vb.id);
        if (ia == recs.end() || ib == recs.end()) continue;
        const bool a_crossed = ia->second->p >= La;
        const bool b_crossed = ib->second->p >= Lb;
        if (!a_crossed && !b_crossed) continue;
        if (a_crossed) {
          const double s = ramped_slack(*ib->second, *ia->second, Lb, vb.entry_speed);
          if (!m.min_lateral || s < *m.min_lateral) m.min_lateral = s;
        }
        if (b_crossed) {
          const double s = ramped_slack(*ia->second, *ib->second, La, va.entry_speed);
          if (!m.min_lateral || s < *m.min_lateral) m.min_lateral = s;
        }
        break;  // evaluated at the first crossing only
      }
    }
  }
  return m;
}

std::optional<std::string> validate_mode_transitions(const std::vector<TraceRecord>& trace) {
  const auto legal = [](VehicleMode from, VehicleMode to) {
    if (from == to) return true;
    switch (from) {
      case VehicleMode::Normal:
        return to == VehicleMode::Filtered || to == VehicleMode::Emergency;
      case VehicleMode::Filtered:
        return to == VehicleMode::Normal || to == VehicleMode::Emergency;
      case VehicleMode::Emergency:
        return to == VehicleMode::Recovery || to == VehicleMode::Normal ||
               to == VehicleMode::Filtered;
      case VehicleMode::Recovery:
        return to == VehicleMode::Normal || to == VehicleMode::Filtered;
    }
    return false;
  };
  std::map<int, VehicleMode> last;
  for (const auto& rec : trace) {
    const auto it = last.find(rec.vehicle_id);
    if (it != last.end() && !legal(it->second, rec.mode)) {
      return "vehicle " + std::to_string(rec.vehicle_id) + " at t=" + std::to_string(rec.t) + ": " +
             to_string(it->second) + " -> " + to_string(rec.mode);
    }
    last[rec.vehicle_id] = rec.mode;
  }
  return std::nullopt;
}

}  // namespace cav
