#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "millibot/coilfield.hpp"
#include "millibot/errors.hpp"
#include "millibot/fixtures.hpp"
#include "millibot/harness.hpp"
#include "millibot/svg.hpp"
#include "millibot/text.hpp"

namespace {

using namespace millibot;

planner::PixelCoord parse_xy(const std::string& s) {
  auto parts = split(s, ',');
  if (parts.size() != 2) throw ConfigError("expected 'x,y', got '" + s + "'");
  return {static_cast<int>(parse_int(parts[0])),
          static_cast<int>(parse_int(parts[1]))};
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

void write_plan_overlay(const std::string& path, const planner::CanalMask& mask,
                        const planner::CostMap& cost,
                        const std::vector<planner::PixelCoord>& raw,
                        const planner::PlannedPath& planned) {
  svg::Document doc(0, 0, mask.nx, mask.ny);
  doc.rect(0, 0, mask.nx, mask.ny, "#101418");

  const int stride = std::max(1, mask.nx / 256);
  for (int row = 0; row < mask.ny; row += stride) {
    int nav_start = -1, feas_start = -1;
    for (int col = 0; col <= mask.nx; col += stride) {
      bool nav = col < mask.nx && mask.at(col, row);
      bool feas = col < mask.nx && cost.feasible[cost.idx(col, row)];
      if (nav && nav_start < 0) nav_start = col;
      if ((!nav || col + stride > mask.nx - 1) && nav_start >= 0) {
        doc.rect(nav_start, row, col - nav_start + (nav ? stride : 0), stride,
                 "#26323c");
        nav_start = -1;
      }
      if (feas && feas_start < 0) feas_start = col;
      if ((!feas || col + stride > mask.nx - 1) && feas_start >= 0) {
        doc.rect(feas_start, row, col - feas_start + (feas ? stride : 0), stride,
                 "#3b5166");
        feas_start = -1;
      }
    }
  }

  std::vector<Vec2> raw_pts;
  raw_pts.reserve(raw.size());
  for (const auto& p : raw) raw_pts.emplace_back(p.col, p.row);
  doc.polyline(raw_pts, "#7a8aff", std::max(1.0, mask.nx / 512.0));

  std::vector<Vec2> wp_px;
  for (const auto& wp : planned.waypoints_mm) {
    double col = wp.x() / mask.pixel_mm + (mask.nx - 1) / 2.0;
    double row = (mask.ny - 1) / 2.0 - wp.y() / mask.pixel_mm;
    wp_px.emplace_back(col, row);
  }
  doc.polyline(wp_px, "#ffb454", std::max(1.5, mask.nx / 400.0));
  for (const auto& p : wp_px)
    doc.circle(p.x(), p.y(), std::max(2.0, mask.nx / 256.0), "#ffb454");
  if (!wp_px.empty()) {
    doc.circle(wp_px.front().x(), wp_px.front().y(),
               std::max(3.0, mask.nx / 200.0), "#7dff8a");
    doc.circle(wp_px.back().x(), wp_px.back().y(),
               std::max(3.0, mask.nx / 200.0), "#ff6b6b");
  }
  doc.write(path);
}

int cmd_plan(const std::string& mask_path, const std::string& start_s,
             const std::string& goal_s, const std::string& out_dir,
             double clearance_mm, int window, int n_waypoints) {
  planner::CanalMask loaded;
  const planner::CanalMask* mask;
  if (mask_path == "@default") {
    mask = &fixtures::phantom_mask();
  } else {
    loaded = planner::load_pgm(mask_path);
    mask = &loaded;
  }

  auto clearance = planner::distance_transform(*mask);
  auto cost = planner::build_cost_map(*mask, clearance, clearance_mm);
  if (cost.max_feasible_clearance_mm <= 0.0)
    throw EmptyFeasibleError("mask has no feasible pixels at the clearance floor");

  planner::PixelCoord start = parse_xy(start_s);
  planner::PixelCoord goal = parse_xy(goal_s);
  planner::PixelCoord ps = planner::project_to_feasible(cost, start);
  planner::PixelCoord pg = planner::project_to_feasible(cost, goal);
  auto raw = planner::astar(cost, ps, pg);
  auto planned = planner::smooth_resample(raw, *mask, window, n_waypoints);

  make_dir(out_dir);
  planner::save_waypoints_csv(out_dir + "/waypoints.csv", planned);
  write_plan_overlay(out_dir + "/overlay.svg", *mask, cost, raw, planned);

  std::printf("planned %zu raw pixels -> %zu waypoints, %s mm\n", raw.size(),
              planned.waypoints_mm.size(),
              format_double(planned.length_mm).c_str());
  if (!(ps == start) || !(pg == goal))
    std::printf("endpoints projected to feasible pixels: start (%d,%d) goal (%d,%d)\n",
                ps.col, ps.row, pg.col, pg.row);
  std::printf("wrote %s/waypoints.csv and %s/overlay.svg\n", out_dir.c_str(),
              out_dir.c_str());
  return 0;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(scenario_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(scenario_path + ": " + e.what());
  }
  std::string base = std::filesystem::path(scenario_path).parent_path().string();
  harness::Scenario sc = harness::scenario_from_json(j, base);
  harness::TrialResult r = harness::run_trial(sc);

  make_dir(out_dir);
  harness::emit_trial(out_dir, sc, r);

  std::printf("%s: %s  rmse %.3f mm  p95 %.3f mm  max %.3f mm  (%zu steps)\n",
              sc.name.c_str(), r.completed ? "completed" : "FAILED", r.err.rmse,
              r.err.p95, r.err.max, r.steps.size());
  if (!r.completed) {
    std::printf("failure: %s\n",
                r.failure_reason ? r.failure_reason->c_str() : "unknown");
    return 3;
  }
  return 0;
}

int cmd_suite(const std::string& config_path, const std::string& out_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(config_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(config_path + ": " + e.what());
  }
  std::string base = std::filesystem::path(config_path).parent_path().string();
  harness::SuiteConfig cfg = harness::suite_from_json(j, base);
  harness::SuiteResult res = harness::run_suite(cfg);

  make_dir(out_dir);
  harness::write_suite_summary(out_dir + "/suite_summary.json", res);
  std::string table = harness::suite_table(res);
  write_file(out_dir + "/table.txt", table);
  std::fputs(table.c_str(), stdout);

  if (cfg.emit_trials) {
    for (std::size_t i = 0; i < res.scenarios.size(); ++i) {
      const auto& st = res.scenarios[i];
      for (std::size_t t = 0; t < st.trials.size(); ++t) {
        harness::Scenario sc = cfg.scenarios[i];
        sc.sim.seed += static_cast<std::uint64_t>(t);
        harness::emit_trial(
            out_dir + "/" + st.name + "/trial_" + std::to_string(t), sc,
            st.trials[t]);
      }
    }
  }
  return 0;
}

int cmd_calibrate(const std::string& coils_path, const std::string& out_path) {
  auto [coils, omega_o] = coilfield::load_coils_json(coils_path);
  coilfield::ReferenceActivation act;
  act.driven = {{0, 1.0}, {1, 1.0}};
  auto rep = coilfield::calibrate(coils, act);

  std::printf("gain scale      %s\n", format_double(rep.gain_scale).c_str());
  std::printf("peak |B|        %s mT at (%s, %s) mm\n",
              format_double(rep.peak_b * 1e3).c_str(),
              format_double(rep.peak_b_at.x() * 1e3).c_str(),
              format_double(rep.peak_b_at.y() * 1e3).c_str());
  std::printf("peak |grad B|   %s mT/cm at (%s, %s) mm\n",
              format_double(rep.peak_gradient * 10.0).c_str(),
              format_double(rep.peak_gradient_at.x() * 1e3).c_str(),
              format_double(rep.peak_gradient_at.y() * 1e3).c_str());
  if (!out_path.empty()) {
    coilfield::save_coils_json(out_path, coils, omega_o);
    std::printf("wrote calibrated coils to %s\n", out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magnetic millirobot navigation testbed"};
  app.require_subcommand(1);

  auto* plan = app.add_subcommand("plan", "plan a channel path on a mask");
  std::string mask = "@default", start_s, goal_s, out_dir = "out";
  double clearance_mm = 5.0;
  int window = 7, n_waypoints = 10;
  plan->add_option("--mask", mask, "PGM mask path or @default");
  plan->add_option("--start", start_s, "start pixel col,row")->required();
  plan->add_option("--goal", goal_s, "goal pixel col,row")->required();
  plan->add_option("--out", out_dir, "output directory")->required();
  plan->add_option("--clearance", clearance_mm, "clearance floor in mm");
  plan->add_option("--window", window, "smoothing window (odd)");
  plan->add_option("--waypoints", n_waypoints, "number of waypoints");

  auto* run = app.add_subcommand("run", "run a single closed-loop trial");
  std::string scenario_path, run_out = "out";
  run->add_option("--scenario", scenario_path, "scenario json")->required();
  run->add_option("--out", run_out, "output directory")->required();

  auto* suite = app.add_subcommand("suite", "run a multi-scenario suite");
  std::string suite_path, suite_out = "out";
  suite->add_option("--config", suite_path, "suite json")->required();
  suite->add_option("--out", suite_out, "output directory")->required();

  auto* cal = app.add_subcommand("calibrate", "fit the shared coil gain");
  std::string coils_path, cal_out;
  cal->add_option("--coils", coils_path, "coil json")->required();
  cal->add_option("--out", cal_out, "write calibrated coils here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (plan->parsed())
      return cmd_plan(mask, start_s, goal_s, out_dir, clearance_mm, window,
                      n_waypoints);
    if (run->parsed()) return cmd_run(scenario_path, run_out);
    if (suite->parsed()) return cmd_suite(suite_path, suite_out);
    if (cal->parsed()) return cmd_calibrate(coils_path, cal_out);
  } catch (const millibot::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const millibot::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
