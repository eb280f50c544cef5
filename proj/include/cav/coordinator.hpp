#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "cav/constraint.hpp"
#include "cav/scenario.hpp"
#include "cav/trajectory.hpp"

namespace cav {

// One committed (or provisionally extrapolated) trajectory in the database.
struct CommittedRecord {
  int vehicle_id = 0;
  int path_id = 0;
  double zone_entry_time = 0.0;  // first entry into the control zone; survives replans
  double entry_speed = 0.0;
  CubicTrajectory traj;
  bool provisional = false;      // live extrapolation while the vehicle is off-plan
  std::map<int, double> crossing_times;  // conflict id -> planned crossing time
};

struct OccupancyInterval {
  double t_begin = 0.0;
  double t_end = 0.0;
  ConstraintTag tag = ConstraintTag::RearEnd;
  int vehicle_id = 0;
  int conflict_id = -1;  // -1 for rear-end intervals
};

struct QueryResult {
  std::vector<OccupancyInterval> intervals;
  double speed_limit = 0.0;
  std::uint64_t version = 0;  // snapshot id to pass back to commit_trajectory
};

// Passive trajectory database: stores what vehicles share, answers entry
// queries, and never makes control decisions itself.
class CoordinatorDb {
 public:
  explicit CoordinatorDb(const ScenarioConfig& cfg);

  // Intervals during which committed trajectories activate path_id's
  // rear-end or lateral constraints, plus the current speed limit. Intervals
  // are advisory (sampled at dt and merged); planners re-verify exactly.
  QueryResult register_and_query(int vehicle_id, int path_id) const;

  // Store a verified trajectory. snapshot_version must equal the version the
  // feasibility check ran against, otherwise StaleSnapshot (caller replans).
  void commit_trajectory(int vehicle_id, const CubicTrajectory& traj,
                         std::uint64_t snapshot_version);

  // Replace a record with a live extrapolation while the vehicle deviates
  // from its plan (emergency/recovery). Bumps the version; no staleness
  // check, since the source is measurement, not planning.
  void update_live_record(int vehicle_id, const CubicTrajectory& traj);

  void erase(int vehicle_id);

  // Predecessor on the same path: committed vehicle with the latest zone
  // entry strictly before entry_time (ties broken toward lower id).
  std::optional<CommittedRecord> predecessor_of(int path_id, double entry_time,
                                                int vehicle_id) const;

  std::optional<CommittedRecord> record_of(int vehicle_id) const;
  const std::map<int, CommittedRecord>& records() const { return records_; }

  double speed_limit() const { return speed_limit_; }
  void set_speed_limit(double s);
  std::uint64_t version() const { return version_; }
  const ScenarioConfig& scenario() const { return *cfg_; }

 private:
  const ScenarioConfig* cfg_;
  std::map<int, CommittedRecord> records_;
  double speed_limit_;
  std::uint64_t version_ = 0;

  void store(int vehicle_id, const CubicTrajectory& traj, bool provisional);
};

// Time at which a trajectory (constant-speed extended) reaches arclength L.
double crossing_time(const CubicTrajectory& traj, double L);

// One vehicle in the resequencing pool. weight = 1 / feasible-range length,
// processing_time = earliest feasible exit time.
struct ChainEntry {
  int vehicle_id = 0;
  double weight = 0.0;
  double processing_time = 0.0;
  int path_id = 0;
};

// Greedy rho-factor schedule: repeatedly pick the chain whose best prefix
// maximizes (sum of weights)/(sum of processing times) and emit that prefix.
// Within-chain input order is preserved; ties go to the lower path id.
std::vector<int> resequence(const std::vector<ChainEntry>& entries);

}  // namespace cav
