#include "cav/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cav/errors.hpp"

namespace cav {
namespace {

using nlohmann::json;

// Axis-aligned headings are snapped so projections stay exact.
double snap(double c) {
  if (std::fabs(c) < 1e-9) return 0.0;
  if (std::fabs(c - 1.0) < 1e-9) return 1.0;
  if (std::fabs(c + 1.0) < 1e-9) return -1.0;
  return c;
}

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ValidationError(field, msg);
}

double need_num(const json& j, const std::string& section, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) fail(section + "." + key, "missing or non-numeric");
  return j[key].get<double>();
}

int need_int(const json& j, const std::string& section, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) fail(section + "." + key, "missing or non-integer");
  return j[key].get<int>();
}

EllipseParams parse_ellipse(const json& j, const std::string& where, const EllipseParams& base) {
  EllipseParams e = base;
  e.epsilon = j.value("epsilon", e.epsilon);
  e.k1 = j.value("k1", e.k1);
  e.k2 = j.value("k2", e.k2);
  e.k3 = j.value("k3", e.k3);
  e.lambda = j.value("lambda", e.lambda);
  if (e.epsilon <= 0.0) fail(where + ".epsilon", "must be > 0");
  if (e.k1 <= 0.0 || e.k2 <= 0.0 || e.k3 <= 0.0) fail(where + ".k1/k2/k3", "must be > 0");
  if (e.lambda < 1.0) fail(where + ".lambda", "must be >= 1");
  return e;
}

ModeWeights parse_weights(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 4) fail(field, "must be an array of 4 weights");
  ModeWeights w;
  w.w1 = j[0].get<double>();
  w.w2 = j[1].get<double>();
  w.w3 = j[2].get<double>();
  w.w4 = j[3].get<double>();
  if (w.w1 < 0 || w.w2 < 0 || w.w3 < 0 || w.w4 < 0) fail(field, "weights must be >= 0");
  return w;
}

}  // namespace

double PathGeometry::dir_x() const { return snap(std::cos(heading)); }
double PathGeometry::dir_y() const { return snap(std::sin(heading)); }

double PathGeometry::lateral_offset(double x, double y) const {
  const double rx = x - entry_x, ry = y - entry_y;
  return dir_x() * ry - dir_y() * rx;  // positive to the left of travel
}

double PathGeometry::arclength_of(double x, double y) const {
  return (x - entry_x) * dir_x() + (y - entry_y) * dir_y();
}

bool RoadCorridor::contains(double x, double y) const {
  const double transverse = x_bounded ? x : y;
  const double along = x_bounded ? y : x;
  return transverse >= lo && transverse <= hi && along >= along_lo && along <= along_hi;
}

const PathGeometry& ScenarioConfig::path(int id) const {
  for (const auto& p : paths)
    if (p.id == id) return p;
  throw UnknownPath("no path with id " + std::to_string(id));
}

const ConflictPoint& ScenarioConfig::conflict_point(int id) const {
  for (const auto& c : conflicts)
    if (c.id == id) return c;
  throw NotOnPath("no conflict with id " + std::to_string(id));
}

const VehicleSpec& ScenarioConfig::vehicle(int id) const {
  for (const auto& v : vehicles)
    if (v.id == id) return v;
  throw ValidationError("vehicles", "no vehicle with id " + std::to_string(id));
}

std::vector<int> ScenarioConfig::road_ids() const {
  std::set<int> roads;
  for (const auto& p : paths) roads.insert(p.road);
  return {roads.begin(), roads.end()};
}

RoadCorridor ScenarioConfig::road_corridor(int road) const {
  RoadCorridor c;
  c.road = road;
  bool first = true;
  for (const auto& p : paths) {
    if (p.road != road) continue;
    const bool xb = std::fabs(p.dir_y()) > 0.5;  // travel along y bounds x
    const double transverse = xb ? p.entry_x : p.entry_y;
    const double a0 = xb ? p.entry_y : p.entry_x;
    const double a1 = a0 + (xb ? p.dir_y() : p.dir_x()) * p.length;
    const double alo = std::min(a0, a1), ahi = std::max(a0, a1);
    if (first) {
      c.x_bounded = xb;
      c.lo = transverse - p.lane_width / 2.0;
      c.hi = transverse + p.lane_width / 2.0;
      c.along_lo = alo;
      c.along_hi = ahi;
      first = false;
    } else {
      c.lo = std::min(c.lo, transverse - p.lane_width / 2.0);
      c.hi = std::max(c.hi, transverse + p.lane_width / 2.0);
      c.along_lo = std::min(c.along_lo, alo);
      c.along_hi = std::max(c.along_hi, ahi);
    }
  }
  if (first) throw UnknownPath("no road with id " + std::to_string(road));
  return c;
}

double ScenarioConfig::conflict_distance(int path_id, int conflict_id) const {
  const PathGeometry& p = path(path_id);
  for (const auto& ref : p.conflicts)
    if (ref.conflict_id == conflict_id) return ref.arclength;
  throw NotOnPath("conflict " + std::to_string(conflict_id) + " is not on path " +
                  std::to_string(path_id));
}

std::optional<int> ScenarioConfig::shared_conflict(int path_a, int path_b) const {
  for (const auto& c : conflicts) {
    const bool has_a = std::find(c.paths.begin(), c.paths.end(), path_a) != c.paths.end();
    const bool has_b = std::find(c.paths.begin(), c.paths.end(), path_b) != c.paths.end();
    if (has_a && has_b) return c.id;
  }
  return std::nullopt;
}

double ScenarioConfig::zeta(int path_a, int path_b) const {
  const auto shared = shared_conflict(path_a, path_b);
  if (!shared) {
    throw NoSharedConflict("paths " + std::to_string(path_a) + " and " + std::to_string(path_b) +
                           " share no conflict point");
  }
  return std::fabs(conflict_distance(path_a, *shared) - conflict_distance(path_b, *shared));
}

EllipseParams ScenarioConfig::ellipse_for(int vehicle_id) const {
  const VehicleSpec& v = vehicle(vehicle_id);
  return v.ellipse ? *v.ellipse : params.ellipse;
}

ScenarioConfig load_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario document is not valid JSON: ") + e.what());
  }
  for (const char* section : {"geometry", "vehicles", "pedestrian", "params"}) {
    if (!j.contains(section)) throw ParseError(std::string("missing required section '") + section + "'");
  }

  ScenarioConfig cfg;
  cfg.name = j.value("name", std::string{});

  // ---- params ----
  const json& jp = j["params"];
  ControllerParams& P = cfg.params;
  P.phi = jp.value("phi", P.phi);
  P.gamma = jp.value("gamma", P.gamma);
  P.dt = jp.value("dt", P.dt);
  P.v_min = jp.value("v_min", P.v_min);
  P.v_max = jp.value("v_max", P.v_max);
  P.u_min = jp.value("u_min", P.u_min);
  P.u_max = jp.value("u_max", P.u_max);
  P.j_min = jp.value("j_min", P.j_min);
  P.j_max = jp.value("j_max", P.j_max);
  P.sigma = jp.value("sigma", P.sigma);
  P.r_b = jp.value("r_b", P.r_b);
  if (jp.contains("ellipse")) P.ellipse = parse_ellipse(jp["ellipse"], "params.ellipse", P.ellipse);
  P.speed_limit = jp.value("speed_limit", P.speed_limit);
  P.emergency_speed = jp.value("emergency_speed", P.emergency_speed);
  P.sensing_range = jp.value("sensing_range", P.sensing_range);
  P.delta_max0 = jp.value("delta_max0", P.delta_max0);
  if (jp.contains("weights_emergency")) P.w_emergency = parse_weights(jp["weights_emergency"], "params.weights_emergency");
  if (jp.contains("weights_recovery")) P.w_recovery = parse_weights(jp["weights_recovery"], "params.weights_recovery");
  P.overshoot_margin = jp.value("overshoot_margin", P.overshoot_margin);
  P.align_lateral_tol = jp.value("align_lateral_tol", P.align_lateral_tol);
  P.align_heading_tol = jp.value("align_heading_tol", P.align_heading_tol);
  P.pass_clearance = jp.value("pass_clearance", P.pass_clearance);
  P.seed = jp.value("seed", P.seed);

  if (P.dt <= 0.0) fail("params.dt", "must be > 0");
  if (P.phi <= 0.0) fail("params.phi", "must be > 0");
  if (P.gamma <= 0.0) fail("params.gamma", "must be > 0");
  if (P.v_min <= 0.0) fail("params.v_min", "must be > 0");
  if (P.v_min >= P.v_max) fail("params.v_min", "must be < v_max");
  if (!(P.u_min < 0.0 && 0.0 < P.u_max)) fail("params.u_min", "need u_min < 0 < u_max");
  if (!(P.j_min < 0.0 && 0.0 < P.j_max)) fail("params.j_min", "need j_min < 0 < j_max");
  if (P.sigma <= 0.0) fail("params.sigma", "must be > 0");
  if (P.r_b < 0.0) fail("params.r_b", "must be >= 0");
  if (P.speed_limit <= 0.0) fail("params.speed_limit", "must be > 0");
  if (P.emergency_speed <= 0.0) fail("params.emergency_speed", "must be > 0");
  if (P.sensing_range <= 0.0) fail("params.sensing_range", "must be > 0");
  if (!(P.delta_max0 > 0.0 && P.delta_max0 < 1.5707963267948966)) fail("params.delta_max0", "must be in (0, pi/2)");
  if (P.overshoot_margin <= 0.0) fail("params.overshoot_margin", "must be > 0");
  if (P.align_lateral_tol <= 0.0) fail("params.align_lateral_tol", "must be > 0");
  if (P.align_heading_tol <= 0.0) fail("params.align_heading_tol", "must be > 0");
  if (P.pass_clearance <= 0.0) fail("params.pass_clearance", "must be > 0");

  // ---- geometry ----
  const json& jg = j["geometry"];
  if (!jg.contains("paths") || !jg["paths"].is_array() || jg["paths"].empty()) {
    fail("geometry.paths", "must be a non-empty array");
  }
  std::set<int> path_ids;
  for (std::size_t i = 0; i < jg["paths"].size(); ++i) {
    const json& pj = jg["paths"][i];
    const std::string where = "geometry.paths[" + std::to_string(i) + "]";
    PathGeometry p;
    p.id = need_int(pj, where, "id");
    p.road = need_int(pj, where, "road");
    if (!pj.contains("entry") || !pj["entry"].is_array() || pj["entry"].size() != 2) {
      fail(where + ".entry", "must be [x, y]");
    }
    p.entry_x = pj["entry"][0].get<double>();
    p.entry_y = pj["entry"][1].get<double>();
    p.heading = need_num(pj, where, "heading");
    p.length = need_num(pj, where, "length");
    p.lane_width = pj.value("lane_width", 3.5);
    if (!path_ids.insert(p.id).second) fail(where + ".id", "duplicate path id");
    if (p.length <= 0.0) fail(where + ".length", "must be > 0");
    if (p.lane_width <= 0.0) fail(where + ".lane_width", "must be > 0");
    const double c = std::cos(p.heading), s = std::sin(p.heading);
    if (std::fabs(c) > 1e-9 && std::fabs(s) > 1e-9) fail(where + ".heading", "paths must be axis-aligned");
    cfg.paths.push_back(p);
  }

  if (jg.contains("conflicts")) {
    if (!jg["conflicts"].is_array()) fail("geometry.conflicts", "must be an array");
    std::set<int> conflict_ids;
    for (std::size_t i = 0; i < jg["conflicts"].size(); ++i) {
      const json& cj = jg["conflicts"][i];
      const std::string where = "geometry.conflicts[" + std::to_string(i) + "]";
      ConflictPoint c;
      c.id = need_int(cj, where, "id");
      if (!conflict_ids.insert(c.id).second) fail(where + ".id", "duplicate conflict id");
      if (!cj.contains("position") || !cj["position"].is_array() || cj["position"].size() != 2) {
        fail(where + ".position", "must be [x, y]");
      }
      c.x = cj["position"][0].get<double>();
      c.y = cj["position"][1].get<double>();
      if (!cj.contains("paths") || !cj["paths"].is_array() || cj["paths"].size() < 2) {
        fail(where + ".paths", "must list at least two incident paths");
      }
      for (const auto& pid : cj["paths"]) c.paths.push_back(pid.get<int>());
      std::sort(c.paths.begin(), c.paths.end());
      for (int pid : c.paths) {
        if (!path_ids.count(pid)) fail(where + ".paths", "unknown path id " + std::to_string(pid));
      }
      cfg.conflicts.push_back(c);
    }
  }

  // Derive per-path conflict arclengths by projection and verify the conflict
  // actually lies on each incident path.
  for (const auto& c : cfg.conflicts) {
    for (int pid : c.paths) {
      for (auto& p : cfg.paths) {
        if (p.id != pid) continue;
        const double L = p.arclength_of(c.x, c.y);
        const double rx = p.point_x(L) - c.x, ry = p.point_y(L) - c.y;
        if (std::hypot(rx, ry) > 1e-9) {
          fail("geometry.conflicts", "conflict " + std::to_string(c.id) + " does not lie on path " +
                                         std::to_string(pid));
        }
        if (!(L > 0.0 && L < p.length)) {
          fail("geometry.conflicts", "conflict " + std::to_string(c.id) + " outside control zone of path " +
                                         std::to_string(pid));
        }
        p.conflicts.push_back({c.id, L});
      }
    }
  }

  // A pair of paths may share at most one conflict point.
  for (std::size_t a = 0; a < cfg.conflicts.size(); ++a) {
    for (std::size_t b = a + 1; b < cfg.conflicts.size(); ++b) {
      int common = 0;
      for (int pa : cfg.conflicts[a].paths) {
        for (int pb : cfg.conflicts[b].paths) {
          if (pa == pb) ++common;
        }
      }
      if (common >= 2) fail("geometry.conflicts", "two conflicts share the same pair of paths");
    }
  }

  // Lanes of one road must be parallel.
  for (int road : cfg.road_ids()) {
    std::optional<bool> xb;
    for (const auto& p : cfg.paths) {
      if (p.road != road) continue;
      const bool this_xb = std::fabs(p.dir_y()) > 0.5;
      if (xb && *xb != this_xb) fail("geometry.paths", "lanes of road " + std::to_string(road) + " are not parallel");
      xb = this_xb;
    }
  }

  // ---- vehicles ----
  const json& jv = j["vehicles"];
  if (!jv.is_array()) fail("vehicles", "must be an array");
  std::set<int> vehicle_ids;
  std::map<int, std::vector<double>> arrivals_per_path;
  for (std::size_t i = 0; i < jv.size(); ++i) {
    const json& vj = jv[i];
    const std::string where = "vehicles[" + std::to_string(i) + "]";
    VehicleSpec v;
    v.id = need_int(vj, where, "id");
    v.path = need_int(vj, where, "path");
    v.arrival = need_num(vj, where, "arrival");
    v.entry_speed = need_num(vj, where, "entry_speed");
    if (vj.contains("ellipse")) v.ellipse = parse_ellipse(vj["ellipse"], where + ".ellipse", P.ellipse);
    if (!vehicle_ids.insert(v.id).second) fail(where + ".id", "duplicate vehicle id");
    if (!path_ids.count(v.path)) fail(where + ".path", "unknown path id " + std::to_string(v.path));
    if (v.arrival < 0.0) fail(where + ".arrival", "must be >= 0");
    if (v.entry_speed <= 0.0) fail(where + ".entry_speed", "must be > 0");
    for (double other : arrivals_per_path[v.path]) {
      if (std::fabs(other - v.arrival) < 1e-12) fail(where + ".arrival", "two vehicles on one path cannot arrive simultaneously");
    }
    arrivals_per_path[v.path].push_back(v.arrival);
    cfg.vehicles.push_back(v);
  }

  // ---- pedestrian ----
  const json& jped = j["pedestrian"];
  if (jped.contains("waypoints")) {
    if (!jped["waypoints"].is_array()) fail("pedestrian.waypoints", "must be an array");
    double prev_t = -1e300;
    for (std::size_t i = 0; i < jped["waypoints"].size(); ++i) {
      const json& wj = jped["waypoints"][i];
      const std::string where = "pedestrian.waypoints[" + std::to_string(i) + "]";
      PedWaypoint w;
      w.t = need_num(wj, where, "t");
      w.x = need_num(wj, where, "x");
      w.y = need_num(wj, where, "y");
      w.speed = wj.value("speed", 1.4);
      w.heading = wj.value("heading", 0.0);
      if (w.t <= prev_t) fail(where + ".t", "waypoint times must be strictly increasing");
      if (w.speed < 0.0) fail(where + ".speed", "must be >= 0");
      prev_t = w.t;
      cfg.ped_script.push_back(w);
    }
  }

  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

std::string save_scenario(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;

  json paths = json::array();
  for (const auto& p : cfg.paths) {
    json pj;
    pj["id"] = p.id;
    pj["road"] = p.road;
    pj["entry"] = {p.entry_x, p.entry_y};
    pj["heading"] = p.heading;
    pj["length"] = p.length;
    pj["lane_width"] = p.lane_width;
    paths.push_back(pj);
  }
  json conflicts = json::array();
  for (const auto& c : cfg.conflicts) {
    json cj;
    cj["id"] = c.id;
    cj["position"] = {c.x, c.y};
    cj["paths"] = c.paths;
    conflicts.push_back(cj);
  }
  j["geometry"] = {{"paths", paths}, {"conflicts", conflicts}};

  json vehicles = json::array();
  for (const auto& v : cfg.vehicles) {
    json vj;
    vj["id"] = v.id;
    vj["path"] = v.path;
    vj["arrival"] = v.arrival;
    vj["entry_speed"] = v.entry_speed;
    if (v.ellipse) {
      vj["ellipse"] = {{"epsilon", v.ellipse->epsilon}, {"k1", v.ellipse->k1},    {"k2", v.ellipse->k2},
                       {"k3", v.ellipse->k3},           {"lambda", v.ellipse->lambda}};
    }
    vehicles.push_back(vj);
  }
  j["vehicles"] = vehicles;

  json waypoints = json::array();
  for (const auto& w : cfg.ped_script) {
    waypoints.push_back({{"t", w.t}, {"x", w.x}, {"y", w.y}, {"speed", w.speed}, {"heading", w.heading}});
  }
  j["pedestrian"] = {{"waypoints", waypoints}};

  const ControllerParams& P = cfg.params;
  j["params"] = {
      {"phi", P.phi},
      {"gamma", P.gamma},
      {"dt", P.dt},
      {"v_min", P.v_min},
      {"v_max", P.v_max},
      {"u_min", P.u_min},
      {"u_max", P.u_max},
      {"j_min", P.j_min},
      {"j_max", P.j_max},
      {"sigma", P.sigma},
      {"r_b", P.r_b},
      {"ellipse",
       {{"epsilon", P.ellipse.epsilon}, {"k1", P.ellipse.k1}, {"k2", P.ellipse.k2}, {"k3", P.ellipse.k3}, {"lambda", P.ellipse.lambda}}},
      {"speed_limit", P.speed_limit},
      {"emergency_speed", P.emergency_speed},
      {"sensing_range", P.sensing_range},
      {"delta_max0", P.delta_max0},
      {"weights_emergency", {P.w_emergency.w1, P.w_emergency.w2, P.w_emergency.w3, P.w_emergency.w4}},
      {"weights_recovery", {P.w_recovery.w1, P.w_recovery.w2, P.w_recovery.w3, P.w_recovery.w4}},
      {"overshoot_margin", P.overshoot_margin},
      {"align_lateral_tol", P.align_lateral_tol},
      {"align_heading_tol", P.align_heading_tol},
      {"pass_clearance", P.pass_clearance},
      {"seed", P.seed},
  };
  return j.dump(2) + "\n";
}

}  // namespace cav
