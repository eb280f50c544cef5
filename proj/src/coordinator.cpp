#include "cav/coordinator.hpp"

#include <algorithm>
#include <cmath>

#include "cav/errors.hpp"

namespace cav {

double crossing_time(const CubicTrajectory& traj, double L) {
  double lo = traj.t0;
  if (extended_position(traj, lo) >= L) {
    // Already at or past L when the plan starts: extend backward at entry speed.
    const double v0 = std::max(traj.speed(traj.t0), 1e-3);
    lo = traj.t0 - (traj.position(traj.t0) - L) / v0 - 1.0;
  }
  double hi = std::max(traj.tf, lo + 1.0);
  const double v_exit = std::max(extended_speed(traj, hi), 1e-3);
  while (extended_position(traj, hi) < L) hi += std::max(1.0, (L - extended_position(traj, hi)) / v_exit);
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (extended_position(traj, mid) < L) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

CoordinatorDb::CoordinatorDb(const ScenarioConfig& cfg)
    : cfg_(&cfg), speed_limit_(cfg.params.speed_limit) {}

void CoordinatorDb::store(int vehicle_id, const CubicTrajectory& traj, bool provisional) {
  CommittedRecord rec;
  const auto it = records_.find(vehicle_id);
  if (it != records_.end()) {
    rec.zone_entry_time = it->second.zone_entry_time;
    rec.entry_speed = it->second.entry_speed;
  } else {
    rec.zone_entry_time = traj.t0;
    rec.entry_speed = traj.speed(traj.t0);
  }
  rec.vehicle_id = vehicle_id;
  rec.path_id = traj.path_id;
  rec.traj = traj;
  rec.provisional = provisional;
  for (const auto& ref : cfg_->path(traj.path_id).conflicts) {
    rec.crossing_times[ref.conflict_id] = crossing_time(traj, ref.arclength);
  }
  records_[vehicle_id] = std::move(rec);
  ++version_;
}

void CoordinatorDb::commit_trajectory(int vehicle_id, const CubicTrajectory& traj,
                                      std::uint64_t snapshot_version) {
  if (snapshot_version != version_) {
    throw StaleSnapshot("database advanced past snapshot " + std::to_string(snapshot_version));
  }
  store(vehicle_id, traj, false);
}

void CoordinatorDb::update_live_record(int vehicle_id, const CubicTrajectory& traj) {
  store(vehicle_id, traj, true);
}

void CoordinatorDb::erase(int vehicle_id) {
  if (records_.erase(vehicle_id) > 0) ++version_;
}

std::optional<CommittedRecord> CoordinatorDb::predecessor_of(int path_id, double entry_time,
                                                             int vehicle_id) const {
  std::optional<CommittedRecord> best;
  for (const auto& [id, rec] : records_) {
    if (id == vehicle_id || rec.path_id != path_id) continue;
    const bool earlier = rec.zone_entry_time < entry_time ||
                         (rec.zone_entry_time == entry_time && id < vehicle_id);
    if (!earlier) continue;
    if (!best || rec.zone_entry_time > best->zone_entry_time ||
        (rec.zone_entry_time == best->zone_entry_time && id > best->vehicle_id)) {
      best = rec;
    }
  }
  return best;
}

std::optional<CommittedRecord> CoordinatorDb::record_of(int vehicle_id) const {
  const auto it = records_.find(vehicle_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void CoordinatorDb::set_speed_limit(double s) {
  if (s <= 0.0) throw DomainError("speed limit must be > 0");
  speed_limit_ = s;
  ++version_;
}

QueryResult CoordinatorDb::register_and_query(int vehicle_id, int path_id) const {
  const PathGeometry& path = cfg_->path(path_id);  // throws UnknownPath
  QueryResult out;
  out.speed_limit = speed_limit_;
  out.version = version_;

  const double dt = cfg_->params.dt;
  for (const auto& [id, rec] : records_) {
    if (id == vehicle_id) continue;
    const double zone_exit = crossing_time(rec.traj, cfg_->path(rec.path_id).length);
    if (rec.path_id == path_id) {
      // Predecessor occupies the zone for this whole window.
      OccupancyInterval iv;
      iv.t_begin = rec.zone_entry_time;
      iv.t_end = zone_exit;
      iv.tag = ConstraintTag::RearEnd;
      iv.vehicle_id = id;
      out.intervals.push_back(iv);
      continue;
    }
    const auto shared = cfg_->shared_conflict(path_id, rec.path_id);
    if (!shared) continue;
    const double Ln = cfg_->conflict_distance(rec.path_id, *shared);
    const double gamma_tilde = cfg_->params.gamma + cfg_->zeta(path_id, rec.path_id);

    // Sample the committed motion and merge steps where the conflict-point
    // constraint is active: |p_k - Ln| <= phi*v_k + gamma_tilde.
    bool open = false;
    OccupancyInterval iv;
    for (double t = rec.zone_entry_time; t <= zone_exit + dt / 2.0; t += dt) {
      const double p = extended_position(rec.traj, t);
      const double v = extended_speed(rec.traj, t);
      const bool active = std::fabs(p - Ln) <= cfg_->params.phi * v + gamma_tilde;
      if (active && !open) {
        iv = OccupancyInterval{t, t, ConstraintTag::Lateral, id, *shared};
        open = true;
      } else if (active && open) {
        iv.t_end = t;
      } else if (!active && open) {
        out.intervals.push_back(iv);
        open = false;
      }
    }
    if (open) out.intervals.push_back(iv);
  }

  std::sort(out.intervals.begin(), out.intervals.end(), [](const auto& a, const auto& b) {
    if (a.t_begin != b.t_begin) return a.t_begin < b.t_begin;
    return a.vehicle_id < b.vehicle_id;
  });
  return out;
}

std::vector<int> resequence(const std::vector<ChainEntry>& entries) {
  std::map<int, std::vector<ChainEntry>> chains;
  for (const auto& e : entries) {
    if (e.weight <= 0.0) throw DomainError("chain weight must be > 0");
    if (e.processing_time <= 0.0) throw DomainError("processing time must be > 0");
    chains[e.path_id].push_back(e);
  }

  std::vector<int> order;
  order.reserve(entries.size());
  while (!chains.empty()) {
    int best_path = -1;
    double best_rho = 0.0;
    std::size_t best_prefix = 0;
    for (const auto& [pid, chain] : chains) {
      double sum_w = 0.0, sum_p = 0.0, rho = -1.0;
      std::size_t prefix = 0;
      for (std::size_t a = 0; a < chain.size(); ++a) {
        sum_w += chain[a].weight;
        sum_p += chain[a].processing_time;
        const double r = sum_w / sum_p;
        if (r > rho) {  // strictly greater: keeps the smallest maximizing prefix
          rho = r;
          prefix = a + 1;
        }
      }
      if (best_path < 0 || rho > best_rho) {  // map order makes ties pick the lower path id
        best_path = pid;
        best_rho = rho;
        best_prefix = prefix;
      }
    }
    auto& chain = chains[best_path];
    for (std::size_t i = 0; i < best_prefix; ++i) order.push_back(chain[i].vehicle_id);
    chain.erase(chain.begin(), chain.begin() + static_cast<long>(best_prefix));
    if (chain.empty()) chains.erase(best_path);
  }
  return order;
}

}  // namespace cav
