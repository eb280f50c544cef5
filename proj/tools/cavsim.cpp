#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cav/errors.hpp"
#include "cav/scenario.hpp"
#include "cav/sim.hpp"
#include "cav/trace.hpp"

namespace {

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  long long wall_ms = 0;
  cav::SafetyMetrics metrics;
  std::vector<std::string> files;
};

std::vector<std::string> split_kinds(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal-free intersection simulator"};
  std::string scenario_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> until;
  bool no_anti_overshoot = false;
  std::string export_csv;

  app.add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "RNG seed override");
  app.add_option("--until", until, "Simulation horizon, s");
  app.add_flag("--no-anti-overshoot", no_anti_overshoot,
               "Disable the recovery centerline-crossing guard");
  app.add_option("--export", export_csv,
                 "Comma-separated series kinds: speeds,ped_distances,min_safety,"
                 "trajectory_xy,steering");
  CLI11_PARSE(app, argc, argv);

  cav::ScenarioConfig cfg;
  try {
    cfg = cav::load_scenario_file(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  RunReport report;
  report.scenario = std::filesystem::path(scenario_path).stem().string();
  report.seed = seed ? *seed : cfg.params.seed;

  try {
    cav::WorldOptions opts;
    opts.seed = seed;
    opts.anti_overshoot = !no_anti_overshoot;
    cav::World world(cfg, opts);

    const auto start = std::chrono::steady_clock::now();
    constexpr double kMaxSimTime = 1000.0;  // hard stop against non-terminating scenarios
    world.run(until ? *until : kMaxSimTime);
    const auto stop = std::chrono::steady_clock::now();
    report.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
    if (!until && !world.complete()) {
      std::cerr << "error: scenario did not complete within " << kMaxSimTime
                << " s simulated (t=" << world.time() << ")\n";
      return 2;
    }

    std::filesystem::create_directories(out_dir);
    const std::string trace_path = out_dir + "/trace.csv";
    cav::write_trace(trace_path, world.trace());
    report.files.push_back(trace_path);
    report.metrics = cav::compute_metrics(world.trace(), cfg);

    const std::string summary_path = out_dir + "/summary.txt";
    {
      std::ofstream sum(summary_path, std::ios::binary);
      if (!sum) throw cav::ParseError("cannot open " + summary_path + " for writing");
      sum << "scenario = " << report.scenario << "\n";
      sum << "seed = " << report.seed << "\n";
      sum << "t_end = " << cav::format_double(world.time()) << "\n";
      sum << "trace = trace.csv\n";
      sum << cav::format_metrics(report.metrics);
    }
    report.files.push_back(summary_path);

    for (const auto& kind : split_kinds(export_csv)) {
      const std::string path = out_dir + "/series_" + kind + ".csv";
      cav::export_series(path, world.trace(), kind, cfg);
      report.files.push_back(path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::ostringstream line;
  line << report.scenario << ": seed=" << report.seed << " wall_ms=" << report.wall_ms;
  const auto opt = [](const std::optional<double>& v) {
    return v ? cav::format_double(*v) : std::string("n/a");
  };
  line << " min_rear_end=" << opt(report.metrics.min_rear_end)
       << " min_lateral=" << opt(report.metrics.min_lateral)
       << " min_pedestrian=" << opt(report.metrics.min_pedestrian);
  for (const auto& f : report.files) line << " " << f;
  std::cout << line.str() << "\n";
  return 0;
}
