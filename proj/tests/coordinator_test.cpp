#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "cav/coordinator.hpp"
#include "cav/errors.hpp"
#include "cav/planner.hpp"
#include "cav/scenario.hpp"

using namespace cav;

namespace {

ScenarioConfig minimal_cfg() {
  return load_scenario_file(std::string(CAV_SCENARIO_DIR) + "/minimal.json");
}

CubicTrajectory cruise(double t0, double v, double p0, double pf, int path_id) {
  auto c = solve_cubic(t0, t0 + (pf - p0) / v, p0, v, pf);  // zero-curvature cubic
  c.path_id = path_id;
  return c;
}

double order_objective(const std::vector<int>& order, const std::vector<ChainEntry>& entries) {
  std::map<int, ChainEntry> by_id;
  for (const auto& e : entries) by_id[e.vehicle_id] = e;
  double t = 0.0, obj = 0.0;
  for (int id : order) {
    t += by_id.at(id).processing_time;
    obj += by_id.at(id).weight * t;
  }
  return obj;
}

// Exact minimizer of the total weighted completion time over all interleavings
// that preserve each chain's internal order.
double oracle_objective(std::vector<std::vector<ChainEntry>> chains) {
  std::vector<std::size_t> idx(chains.size(), 0);
  double best = 1e300;
  const auto total = [&] {
    std::size_t n = 0;
    for (const auto& c : chains) n += c.size();
    return n;
  }();
  std::vector<const ChainEntry*> seq;
  const auto dfs = [&](auto&& self) -> void {
    if (seq.size() == total) {
      double t = 0.0, obj = 0.0;
      for (const auto* e : seq) {
        t += e->processing_time;
        obj += e->weight * t;
      }
      best = std::min(best, obj);
      return;
    }
    for (std::size_t c = 0; c < chains.size(); ++c) {
      if (idx[c] == chains[c].size()) continue;
      seq.push_back(&chains[c][idx[c]]);
      ++idx[c];
      self(self);
      --idx[c];
      seq.pop_back();
    }
  };
  dfs(dfs);
  return best;
}

}  // namespace

TEST_CASE("crossing times on exact and extended motion") {
  const auto c = cruise(0.0, 8.0, 0.0, 40.0, 1);
  CHECK(crossing_time(c, 20.0) == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(crossing_time(c, 40.0) == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(crossing_time(c, 48.0) == doctest::Approx(6.0).epsilon(1e-9));   // forward extension
  CHECK(crossing_time(c, -8.0) == doctest::Approx(-1.0).epsilon(1e-9));  // backward extension

  const auto a = solve_cubic(0.0, 4.29, 0.0, 8.0, 40.0);
  CHECK(crossing_time(a, 40.0) == doctest::Approx(4.29).epsilon(1e-9));
  CHECK(crossing_time(a, 50.0) ==
        doctest::Approx(4.29 + 10.0 / a.speed(4.29)).epsilon(1e-9));
  double prev = crossing_time(a, 0.0);
  for (double L = 4.0; L <= 60.0; L += 4.0) {
    const double t = crossing_time(a, L);
    CHECK(t > prev);
    prev = t;
  }
}

TEST_CASE("database lifecycle: query, commit, staleness, live updates") {
  const auto cfg = minimal_cfg();
  CoordinatorDb db(cfg);

  const auto empty = db.register_and_query(1, 1);
  CHECK(empty.intervals.empty());
  CHECK(empty.speed_limit == 10.0);
  CHECK(empty.version == 0);
  CHECK_THROWS_AS(db.register_and_query(1, 99), UnknownPath);

  // commit against the snapshot we actually validated
  db.commit_trajectory(1, cruise(0.0, 8.0, 0.0, 40.0, 1), empty.version);
  CHECK(db.version() == 1);
  const auto rec = db.record_of(1);
  REQUIRE(rec.has_value());
  CHECK(rec->zone_entry_time == 0.0);
  CHECK(rec->entry_speed == doctest::Approx(8.0));
  CHECK_FALSE(rec->provisional);
  REQUIRE(rec->crossing_times.count(1));
  CHECK(rec->crossing_times.at(1) == doctest::Approx(2.5).epsilon(1e-9));

  // a snapshot taken before that commit is now stale
  CHECK_THROWS_AS(db.commit_trajectory(2, cruise(0.5, 8.0, 0.0, 40.0, 2), empty.version),
                  StaleSnapshot);

  // live extrapolation: no staleness check, provisional flag, entry data kept
  db.update_live_record(1, cruise(3.0, 2.0, 10.0, 40.0, 1));
  const auto live = db.record_of(1);
  REQUIRE(live.has_value());
  CHECK(live->provisional);
  CHECK(live->zone_entry_time == 0.0);             // survives the replacement
  CHECK(live->entry_speed == doctest::Approx(8.0));
  CHECK(live->traj.t0 == 3.0);
  CHECK(db.version() == 2);

  // recommitting a real plan clears the provisional flag, entry time persists
  db.commit_trajectory(1, cruise(6.0, 4.0, 20.0, 40.0, 1), db.version());
  const auto back = db.record_of(1);
  REQUIRE(back.has_value());
  CHECK_FALSE(back->provisional);
  CHECK(back->zone_entry_time == 0.0);

  db.erase(1);
  CHECK_FALSE(db.record_of(1).has_value());
  const std::uint64_t v_before = db.version();
  CHECK_THROWS_AS(db.commit_trajectory(3, cruise(0.0, 8.0, 0.0, 40.0, 1), v_before - 1),
                  StaleSnapshot);

  CHECK_THROWS_AS(db.set_speed_limit(0.0), DomainError);
  db.set_speed_limit(7.0);
  CHECK(db.register_and_query(5, 1).speed_limit == 7.0);
}

TEST_CASE("entry queries advertise predecessor and crossing occupancy") {
  const auto cfg = minimal_cfg();
  CoordinatorDb db(cfg);
  db.commit_trajectory(3, cruise(0.0, 8.0, 0.0, 40.0, 2), db.version());

  // same path: one rear-end interval spanning the whole zone window
  const auto same = db.register_and_query(9, 2);
  REQUIRE(same.intervals.size() == 1);
  CHECK(same.intervals[0].tag == ConstraintTag::RearEnd);
  CHECK(same.intervals[0].vehicle_id == 3);
  CHECK(same.intervals[0].conflict_id == -1);
  CHECK(same.intervals[0].t_begin == doctest::Approx(0.0));
  CHECK(same.intervals[0].t_end == doctest::Approx(5.0).epsilon(1e-9));

  // crossing path: a merged window bracketing the conflict crossing at 2.5 s
  const auto cross = db.register_and_query(9, 1);
  REQUIRE(cross.intervals.size() == 1);
  const auto& iv = cross.intervals[0];
  CHECK(iv.tag == ConstraintTag::Lateral);
  CHECK(iv.vehicle_id == 3);
  CHECK(iv.conflict_id == 1);
  CHECK(iv.t_begin < 2.5);
  CHECK(iv.t_end > 2.5);
  // activation requires |p - 20| <= phi v + gamma = 15.9, i.e. t in [0.51, 4.49]
  CHECK(iv.t_begin == doctest::Approx(0.525).epsilon(0.1));
  CHECK(iv.t_end == doctest::Approx(4.475).epsilon(0.1));

  // the requesting vehicle's own record is excluded
  const auto self_view = db.register_and_query(3, 2);
  CHECK(self_view.intervals.empty());
}

TEST_CASE("predecessor lookup follows the implied queue order") {
  const auto cfg = minimal_cfg();
  CoordinatorDb db(cfg);
  db.commit_trajectory(3, cruise(0.0, 8.0, 0.0, 40.0, 1), db.version());
  db.commit_trajectory(7, cruise(0.0, 8.0, 0.0, 40.0, 1), db.version());
  db.commit_trajectory(5, cruise(2.0, 8.0, 0.0, 40.0, 1), db.version());

  // the newest entrant queues behind the latest earlier entry
  const auto p9 = db.predecessor_of(1, 5.0, 9);
  REQUIRE(p9.has_value());
  CHECK(p9->vehicle_id == 5);

  // vehicle 5 queues behind the tied pair; the higher id is last in line
  const auto p5 = db.predecessor_of(1, 2.0, 5);
  REQUIRE(p5.has_value());
  CHECK(p5->vehicle_id == 7);

  // within a tie the lower id goes first, so 7 follows 3 and 3 leads all
  const auto p7 = db.predecessor_of(1, 0.0, 7);
  REQUIRE(p7.has_value());
  CHECK(p7->vehicle_id == 3);
  CHECK_FALSE(db.predecessor_of(1, 0.0, 3).has_value());

  CHECK_FALSE(db.predecessor_of(2, 5.0, 9).has_value());  // other path is empty
}

TEST_CASE("resequencing emits the highest-density prefix first") {
  // chain A on path 1: weights 2 then 1, both 4 s; chain B on path 2: weight 3, 4 s.
  // densities: B = 0.75 beats A's best prefix 0.5, so B jumps the queue.
  std::vector<ChainEntry> entries{
      {11, 2.0, 4.0, 1},
      {12, 1.0, 4.0, 1},
      {21, 3.0, 4.0, 2},
  };
  CHECK(resequence(entries) == std::vector<int>{21, 11, 12});

  // the winning prefix is the smallest maximizer: A's second entry is dead
  // weight, so B slots between the two A entries
  std::vector<ChainEntry> split{
      {11, 2.0, 4.0, 1},
      {12, 0.1, 4.0, 1},
      {21, 0.4, 1.0, 2},
  };
  CHECK(resequence(split) == std::vector<int>{11, 21, 12});

  // exact density ties resolve toward the lower path id
  std::vector<ChainEntry> tie{
      {2, 1.0, 2.0, 4},
      {1, 1.0, 2.0, 3},
  };
  CHECK(resequence(tie) == std::vector<int>{1, 2});

  CHECK_THROWS_AS(resequence({{1, 0.0, 1.0, 1}}), DomainError);
  CHECK_THROWS_AS(resequence({{1, 1.0, -1.0, 1}}), DomainError);
  CHECK(resequence({}).empty());
}

TEST_CASE("resequencing matches the exhaustive interleaving oracle") {
  std::mt19937 rng(307);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  for (int inst = 0; inst < 100; ++inst) {
    const int n_chains = 1 + static_cast<int>(3.0 * d01(rng));
    std::vector<ChainEntry> entries;
    std::vector<std::vector<ChainEntry>> chains;
    int id = 1;
    for (int c = 0; c < n_chains && entries.size() < 6; ++c) {
      const int len = 1 + static_cast<int>(3.0 * d01(rng));
      std::vector<ChainEntry> chain;
      for (int k = 0; k < len && entries.size() < 6; ++k) {
        ChainEntry e{id++, 0.2 + 2.8 * d01(rng), 0.5 + 7.5 * d01(rng), c + 1};
        entries.push_back(e);
        chain.push_back(e);
      }
      chains.push_back(chain);
    }
    const auto order = resequence(entries);
    REQUIRE(order.size() == entries.size());
    CHECK(order_objective(order, entries) ==
          doctest::Approx(oracle_objective(chains)).epsilon(1e-9));
  }
}

TEST_CASE("resequencing preserves every chain's internal order") {
  std::mt19937 rng(311);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<ChainEntry> entries;
    int id = 1;
    const int n_chains = 1 + static_cast<int>(4.0 * d01(rng));
    for (int c = 0; c < n_chains; ++c) {
      const int len = 1 + static_cast<int>(4.0 * d01(rng));
      for (int k = 0; k < len; ++k)
        entries.push_back({id++, 0.2 + 2.8 * d01(rng), 0.5 + 7.5 * d01(rng), c + 1});
    }
    const auto order = resequence(entries);
    REQUIRE(order.size() == entries.size());

    // permutation of the input ids
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      CHECK(sorted[i] == static_cast<int>(i) + 1);

    // within each chain, emitted positions are increasing in input order
    std::map<int, int> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = static_cast<int>(i);
    std::map<int, int> last_pos;
    for (const auto& e : entries) {
      const auto it = last_pos.find(e.path_id);
      if (it != last_pos.end()) CHECK(pos[e.vehicle_id] > it->second);
      last_pos[e.path_id] = pos[e.vehicle_id];
    }
  }
}
