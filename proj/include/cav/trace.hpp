#pragma once

#include <string>
#include <vector>

#include "cav/scenario.hpp"
#include "cav/sim.hpp"

namespace cav {

// Locale-independent formatting with 9 significant digits (shortest form).
// Every numeric field in traces, summaries, and exports goes through this.
std::string format_double(double v);

// Comma-separated trace with the fixed header
//   t,vehicle_id,mode,p,v,u2,x,y,theta,delta,b5,active_tags
// b5 is the empty field while no pedestrian script is active.
void write_trace(const std::string& path, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> read_trace(const std::string& path);  // throws ParseError

VehicleMode mode_from_string(const std::string& s);  // throws ParseError

// Structured-text metrics block: one `key = value` line per minimum plus the
// per-vehicle speed extrema. Writing a summary and recomputing it from the
// re-read trace must produce identical text.
std::string format_metrics(const SafetyMetrics& metrics);

// Plot-ready columnar series derived from a trace. Kinds:
//   speeds        -> t, v<id>...
//   ped_distances -> t, d<id>...       (vehicle rear axle to pedestrian)
//   min_safety    -> t, min_b1, min_lateral_slack
//   trajectory_xy -> t, x<id>, y<id>...
//   steering      -> t, delta<id>...
// Unknown kinds throw UnknownKind. Absent values are empty fields.
void export_series(const std::string& path, const std::vector<TraceRecord>& records,
                   const std::string& kind, const ScenarioConfig& cfg);

}  // namespace cav
