#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cav/coordinator.hpp"
#include "cav/dynamics.hpp"
#include "cav/pedestrian.hpp"
#include "cav/scenario.hpp"
#include "cav/trajectory.hpp"

namespace cav {

enum class VehicleMode { Normal, Filtered, Emergency, Recovery };

std::string to_string(VehicleMode mode);

struct TraceRecord {
  double t = 0.0;
  int vehicle_id = 0;
  VehicleMode mode = VehicleMode::Normal;
  double p = 0.0;   // arclength on own path
  double v = 0.0;   // speed
  double u2 = 0.0;  // acceleration applied this step
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double delta = 0.0;            // steering angle applied this step
  std::optional<double> b5;      // pedestrian barrier while the script is active
  std::string active_tags = "-";  // "|"-joined binding constraint tags, or "-"
};

struct SafetyMetrics {
  std::optional<double> min_rear_end;    // min over steps of same-path gap slack
  std::optional<double> min_lateral;     // min over conflict crossings of the
                                         // crossing-time distance slack
  std::optional<double> min_pedestrian;  // min recorded b5
  std::map<int, std::vector<std::pair<double, double>>> speed_series;  // id -> (t, v)
};

struct WorldOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  bool anti_overshoot = true;         // recovery centerline-crossing guard
};

// Per-vehicle runtime state. World pose and longitudinal view are kept in
// sync; which one integration writes depends on the mode.
struct Vehicle {
  int id = 0;
  int path_id = 0;
  VehicleMode mode = VehicleMode::Normal;
  double mode_entry_time = 0.0;
  bool spawned = false;
  bool done = false;

  BicycleState state;       // world frame
  LongitudinalState lon;    // path frame
  double u2_prev = 0.0;     // last applied acceleration (jerk continuity)
  double delta = 0.0;       // last applied steering angle
  std::optional<CubicTrajectory> plan;  // committed cubic when Normal
  int deviation_side = 0;   // transverse sign recorded at recovery entry
  std::vector<int> warm_active;  // last QP active set (emergency/recovery)
  bool last_qp_infeasible = false;
};

// Deterministic world loop: pedestrian script, spawning, detection and
// broadcast, per-mode control, integration, trace logging, and the
// resequenced replanning queue (one replan per step).
class World {
 public:
  World(const ScenarioConfig& cfg, const WorldOptions& opts);

  void step();
  void run(double until);          // advances until `until` or completion
  bool complete() const;           // every scripted vehicle spawned and exited
  double time() const { return t_; }

  const std::vector<TraceRecord>& trace() const { return trace_; }
  const CoordinatorDb& db() const { return db_; }
  const Vehicle& vehicle(int id) const;
  const ScenarioConfig& scenario() const { return cfg_; }

  std::optional<PedestrianState> pedestrian() const { return ped_; }
  bool event_active() const { return event_active_; }

  // Vehicles that currently sense the pedestrian inside their road corridor.
  std::vector<int> detect_pedestrian() const;

 private:
  const ScenarioConfig& cfg_;
  WorldOptions opts_;
  CoordinatorDb db_;
  double t_ = 0.0;
  std::map<int, Vehicle> vehicles_;
  std::vector<TraceRecord> trace_;
  std::optional<PedestrianState> ped_;
  std::vector<int> ped_roads_;  // roads whose corridor contains the pedestrian
  bool event_broadcast_ = false;
  bool event_active_ = false;
  std::deque<int> replan_queue_;
  std::mt19937_64 rng_;

  void eval_pedestrian();
  void spawn_pending();
  void broadcast_if_detected();
  void transition_modes();
  void apply_controls_and_trace();
  void refresh_live_records();
  void process_replan_queue();

  bool on_pedestrian_road(const Vehicle& veh) const;
  bool passed_pedestrian(const Vehicle& veh) const;
  bool aligned(const Vehicle& veh) const;
  void sync_world_from_lon(Vehicle& veh);
  void sync_lon_from_world(Vehicle& veh);
  bool try_replan(Vehicle& veh, double t0);
  void enter_emergency(Vehicle& veh);
  void rebuild_replan_queue();

  ControlInput filtered_control(Vehicle& veh);
  ControlInput emergency_control(Vehicle& veh);
  std::vector<LinearConstraint> longitudinal_certificates(const Vehicle& veh) const;
  std::string tags_of(const std::vector<LinearConstraint>& rows, const std::vector<double>& x,
                      bool infeasible) const;
};

// Post-hoc safety minima and speed series, recomputed purely from the trace.
SafetyMetrics compute_metrics(const std::vector<TraceRecord>& trace, const ScenarioConfig& cfg);

// Returns a description of the first illegal mode transition, or nullopt if
// the trace respects the mode machine.
std::optional<std::string> validate_mode_transitions(const std::vector<TraceRecord>& trace);

}  // namespace cav
