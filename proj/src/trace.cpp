#include "cav/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cav/barriers.hpp"
#include "cav/errors.hpp"
#include "cav/pedestrian.hpp"

namespace cav {
namespace {

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("bad number '" + s + "' in " + where);
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("bad integer '" + s + "' in " + where);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

constexpr const char* kHeader = "t,vehicle_id,mode,p,v,u2,x,y,theta,delta,b5,active_tags";

std::vector<int> trace_vehicle_ids(const std::vector<TraceRecord>& records) {
  std::set<int> ids;
  for (const auto& rec : records) ids.insert(rec.vehicle_id);
  return {ids.begin(), ids.end()};
}

// Rows keyed by step time; vehicles absent from a step produce empty cells.
std::map<double, std::map<int, const TraceRecord*>> by_step(
    const std::vector<TraceRecord>& records) {
  std::map<double, std::map<int, const TraceRecord*>> out;
  for (const auto& rec : records) out[rec.t][rec.vehicle_id] = &rec;
  return out;
}

void write_columns(std::ofstream& out, const std::vector<TraceRecord>& records,
                   const std::vector<std::string>& suffixes,
                   const std::vector<double (*)(const TraceRecord&)>& getters) {
  const std::vector<int> ids = trace_vehicle_ids(records);
  out << "t";
  for (int id : ids)
    for (const auto& sfx : suffixes) out << "," << sfx << id;
  out << "\n";
  for (const auto& [t, recs] : by_step(records)) {
    out << format_double(t);
    for (int id : ids) {
      const auto it = recs.find(id);
      for (const auto& getter : getters) {
        out << ",";
        if (it != recs.end()) out << format_double(getter(*it->second));
      }
    }
    out << "\n";
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  if (ec != std::errc{}) throw NumericalBreakdown("format_double");
  return {buf, ptr};
}

VehicleMode mode_from_string(const std::string& s) {
  if (s == "Normal") return VehicleMode::Normal;
  if (s == "Filtered") return VehicleMode::Filtered;
  if (s == "Emergency") return VehicleMode::Emergency;
  if (s == "Recovery") return VehicleMode::Recovery;
  throw ParseError("unknown mode '" + s + "'");
}

void write_trace(const std::string& path, const std::vector<TraceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << kHeader << "\n";
  for (const auto& rec : records) {
    out << format_double(rec.t) << "," << rec.vehicle_id << "," << to_string(rec.mode) << ","
        << format_double(rec.p) << "," << format_double(rec.v) << "," << format_double(rec.u2)
        << "," << format_double(rec.x) << "," << format_double(rec.y) << ","
        << format_double(rec.theta) << "," << format_double(rec.delta) << ",";
    if (rec.b5) out << format_double(*rec.b5);
    out << "," << rec.active_tags << "\n";
  }
}

std::vector<TraceRecord> read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (line == std::string(kHeader) + "\r") line.pop_back();
  if (line != kHeader) throw ParseError(path + ": unexpected header '" + line + "'");

  std::vector<TraceRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != 12) throw ParseError(where + ": expected 12 fields");
    TraceRecord rec;
    rec.t = parse_double(cells[0], where);
    rec.vehicle_id = parse_int(cells[1], where);
    rec.mode = mode_from_string(cells[2]);
    rec.p = parse_double(cells[3], where);
    rec.v = parse_double(cells[4], where);
    rec.u2 = parse_double(cells[5], where);
    rec.x = parse_double(cells[6], where);
    rec.y = parse_double(cells[7], where);
    rec.theta = parse_double(cells[8], where);
    rec.delta = parse_double(cells[9], where);
    if (!cells[10].empty()) rec.b5 = parse_double(cells[10], where);
    rec.active_tags = cells[11];
    records.push_back(rec);
  }
  return records;
}

std::string format_metrics(const SafetyMetrics& metrics) {
  std::ostringstream out;
  const auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("n/a");
  };
  out << "min_rear_end = " << opt(metrics.min_rear_end) << "\n";
  out << "min_lateral = " << opt(metrics.min_lateral) << "\n";
  out << "min_pedestrian = " << opt(metrics.min_pedestrian) << "\n";
  for (const auto& [id, series] : metrics.speed_series) {
    double lo = series.front().second, hi = series.front().second;
    for (const auto& [t, v] : series) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out << "vehicle_" << id << "_speed_min = " << format_double(lo) << "\n";
    out << "vehicle_" << id << "_speed_max = " << format_double(hi) << "\n";
  }
  return out.str();
}

void export_series(const std::string& path, const std::vector<TraceRecord>& records,
                   const std::string& kind, const ScenarioConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path + " for writing");

  if (kind == "speeds") {
    write_columns(out, records, {"v"}, {+[](const TraceRecord& r) { return r.v; }});
    return;
  }
  if (kind == "steering") {
    write_columns(out, records, {"delta"}, {+[](const TraceRecord& r) { return r.delta; }});
    return;
  }
  if (kind == "trajectory_xy") {
    write_columns(out, records, {"x", "y"},
                  {+[](const TraceRecord& r) { return r.x; },
                   +[](const TraceRecord& r) { return r.y; }});
    return;
  }
  if (kind == "ped_distances") {
    const std::vector<int> ids = trace_vehicle_ids(records);
    out << "t";
    for (int id : ids) out << ",d" << id;
    out << "\n";
    for (const auto& [t, recs] : by_step(records)) {
      out << format_double(t);
      const auto ped = pedestrian_at(cfg.ped_script, t);
      for (int id : ids) {
        out << ",";
        const auto it = recs.find(id);
        if (it == recs.end() || !ped) continue;
        out << format_double(
            std::hypot(ped->x0 - it->second->x, ped->y0 - it->second->y));
      }
      out << "\n";
    }
    return;
  }
  if (kind == "min_safety") {
    const ControllerParams& P = cfg.params;
    out << "t,min_b1,min_lateral_slack\n";
    for (const auto& [t, recs] : by_step(records)) {
      std::optional<double> min_b1, min_lat;
      for (auto i = recs.begin(); i != recs.end(); ++i) {
        for (auto j = std::next(i); j != recs.end(); ++j) {
          const int path_i = cfg.vehicle(i->first).path;
          const int path_j = cfg.vehicle(j->first).path;
          if (path_i == path_j) {
            const TraceRecord* lead = i->second->p >= j->second->p ? i->second : j->second;
            const TraceRecord* tail = lead == i->second ? j->second : i->second;
            const double b1 = lead->p - tail->p - P.phi * tail->v - P.gamma;
            if (!min_b1 || b1 < *min_b1) min_b1 = b1;
          } else if (const auto shared = cfg.shared_conflict(path_i, path_j)) {
            const double Li = cfg.conflict_distance(path_i, *shared);
            const double Lj = cfg.conflict_distance(path_j, *shared);
            const double gt = P.gamma + cfg.zeta(path_i, path_j);
            // Position-ramped barrier of each not-yet-crossed vehicle.
            const auto slack_of = [&](const TraceRecord& later, const TraceRecord& other,
                                      double L_later, double v0_later) {
              PhiParams pp{P.phi, gt, v0_later, L_later};
              const double phi_p = phi_lemma1(pp, std::clamp(later.p, 0.0, L_later));
              return std::fabs(other.p - later.p) - phi_p * later.v - gt;
            };
            if (i->second->p < Li) {
              const double s =
                  slack_of(*i->second, *j->second, Li, cfg.vehicle(i->first).entry_speed);
              if (!min_lat || s < *min_lat) min_lat = s;
            }
            if (j->second->p < Lj) {
              const double s =
                  slack_of(*j->second, *i->second, Lj, cfg.vehicle(j->first).entry_speed);
              if (!min_lat || s < *min_lat) min_lat = s;
            }
          }
        }
      }
      out << format_double(t) << ",";
      if (min_b1) out << format_double(*min_b1);
      out << ",";
      if (min_lat) out << format_double(*min_lat);
      out << "\n";
    }
    return;
  }
  throw UnknownKind(kind);
}

}  // namespace cav
