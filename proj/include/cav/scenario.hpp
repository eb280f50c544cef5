#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cav {

// Per-mode objective weights: w1 (u2 reference deviation), w2 (steering u1^2),
// w3 (lane slack e^2), w4 (speed slack s^2).
struct ModeWeights {
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
  double w4 = 0.0;
};

// Tunables of the elliptical pedestrian keep-out set.
struct EllipseParams {
  double epsilon = 2.0;  // baseline semi-major axis, m
  double k1 = 1.5;       // pedestrian speed normalizer, m/s
  double k2 = 18.0;      // distance normalizer, m
  double k3 = 10.0;      // vehicle speed normalizer, m/s
  double lambda = 2.0;   // major/minor axis ratio
};

struct ControllerParams {
  double phi = 1.8;     // reaction time, s
  double gamma = 1.5;   // standstill gap, m
  double dt = 0.025;    // control/integration period, s
  double v_min = 0.1;   // m/s
  double v_max = 25.0;  // m/s
  double u_min = -5.0;  // m/s^2
  double u_max = 5.0;   // m/s^2
  double j_min = -7.0;  // m/s^3
  double j_max = 5.0;   // m/s^3
  double sigma = 2.0;   // vehicle length, m
  double r_b = 1.35;    // barycenter-to-corner radius, m
  EllipseParams ellipse;
  double speed_limit = 25.0;      // intersection speed limit S, m/s
  double emergency_speed = 6.0;   // desired speed while a pedestrian is on the road
  double sensing_range = 18.5;    // pedestrian sensing radius, m
  double delta_max0 = 0.6;        // max steering angle at standstill, rad
  ModeWeights w_emergency{0.0, 0.0, 0.0, 1.0};
  ModeWeights w_recovery{1.5, 1.0, 2.0, 0.0};
  double overshoot_margin = 0.05;    // anti-overshoot margin mu, m
  double align_lateral_tol = 0.05;   // recovery exit: lane-center tolerance, m
  double align_heading_tol = 0.01;   // recovery exit: heading tolerance, rad
  double pass_clearance = 4.0;       // along-path margin past the pedestrian that ends a
                                     // vehicle's own emergency, m
  std::uint64_t seed = 1;
};

// Where a conflict point sits along one of its incident paths.
struct PathConflictRef {
  int conflict_id = 0;
  double arclength = 0.0;  // distance from the path entry, m
};

// A straight, axis-aligned lane through the control zone.
struct PathGeometry {
  int id = 0;
  int road = 0;               // lanes of the same road share this id
  double entry_x = 0.0;       // control-zone entry point
  double entry_y = 0.0;
  double heading = 0.0;       // rad; one of 0, +-pi/2, pi
  double length = 100.0;      // control-zone traversal length, m
  double lane_width = 3.5;    // m
  std::vector<PathConflictRef> conflicts;

  double dir_x() const;
  double dir_y() const;
  // Lane-center point at a given arclength.
  double point_x(double p) const { return entry_x + dir_x() * p; }
  double point_y(double p) const { return entry_y + dir_y() * p; }
  // Signed lateral offset of a world point (positive to the left of travel).
  double lateral_offset(double x, double y) const;
  double arclength_of(double x, double y) const;
};

struct ConflictPoint {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  std::vector<int> paths;  // incident path ids, sorted
};

struct VehicleSpec {
  int id = 0;
  int path = 0;
  double arrival = 0.0;      // control-zone entry time, s
  double entry_speed = 0.0;  // m/s
  std::optional<EllipseParams> ellipse;  // per-vehicle keep-out override
};

struct PedWaypoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;    // m/s, used by the keep-out ellipse
  double heading = 0.0;  // xi, rad, walking direction
};

// Paved extent of one road: the coordinate transverse to travel is bounded by
// [lo, hi] and the coordinate along travel by [along_lo, along_hi].
struct RoadCorridor {
  int road = 0;
  bool x_bounded = false;  // true if travel is along y so the corridor bounds x
  double lo = 0.0;
  double hi = 0.0;
  double along_lo = 0.0;
  double along_hi = 0.0;

  bool contains(double x, double y) const;
};

struct ScenarioConfig {
  std::string name;
  std::vector<PathGeometry> paths;
  std::vector<ConflictPoint> conflicts;
  std::vector<VehicleSpec> vehicles;
  std::vector<PedWaypoint> ped_script;
  ControllerParams params;

  const PathGeometry& path(int id) const;          // throws UnknownPath
  const ConflictPoint& conflict_point(int id) const;
  const VehicleSpec& vehicle(int id) const;
  RoadCorridor road_corridor(int road) const;
  std::vector<int> road_ids() const;

  // Arclength of a conflict along a path; throws NotOnPath.
  double conflict_distance(int path_id, int conflict_id) const;
  // |L_a - L_b| for the unique conflict both paths share; throws NoSharedConflict.
  double zeta(int path_a, int path_b) const;
  std::optional<int> shared_conflict(int path_a, int path_b) const;

  EllipseParams ellipse_for(int vehicle_id) const;
};

// Parse and validate a scenario document (JSON text with sections geometry,
// vehicles, pedestrian, params). Throws ParseError / ValidationError.
ScenarioConfig load_scenario(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);

// Inverse of load_scenario: serializing and reloading yields an identical config.
std::string save_scenario(const ScenarioConfig& cfg);

}  // namespace cav
