#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "millibot/control.hpp"
#include "millibot/dynamics.hpp"
#include "millibot/flow.hpp"
#include "millibot/planner.hpp"
#include "millibot/sensing.hpp"
#include "millibot/types.hpp"

namespace millibot::harness {

enum class ControllerType { kPid, kMpc, kSmcDob, kSmcNoDob };

std::string to_string(ControllerType t);
ControllerType controller_from_string(const std::string& s);

struct MissionConfig {
  std::string mask = "@default";            // PGM path or the built-in phantom
  std::optional<planner::PixelCoord> start_px;  // defaults to the phantom mission
  std::optional<planner::PixelCoord> goal_px;
  std::optional<std::string> waypoints_csv;  // skip planning when given
  double speed_mmps = 0.5;
  double min_clearance_mm = 5.0;
};

struct FlowConfig {
  double peak_speed_mps = 0.0;
  flow::PulsatileProfile profile;  // applies when peak_speed > 0 or csv given
  std::optional<std::string> csv;  // measured grid instead of the synthetic one
};

struct ControlConfig {
  double i_max_a = 1.5;
  double b_scale_t = 2e-3;
  double omega_o = 1.0;
  double flow_sign = 1.0;
  double ct_model_scale = 1.0;  // drag mismatch seen by the controllers
  control::SmcGains smc;
  control::PidGains pid;
  control::MpcConfig mpc;
  bool retune_enabled = false;
  std::vector<Vec2> retune_region_mm;  // empty selects the default band
};

struct SimConfig {
  std::uint64_t seed = 1;
  double duration_margin_s = 60.0;
  std::optional<double> duration_limit_s;  // absolute cap; overrides the margin
  Vec2 inject_force_n{0.0, 0.0};
  double err_fail_mm = 15.0;
  double fail_hold_s = 2.0;
  double workspace_limit_mm = 46.0;
  double complete_radius_mm = 2.0;
};

struct Scenario {
  std::string name = "scenario";
  ControllerType controller = ControllerType::kSmcDob;
  double viscosity_cp = 20.0;
  dynamics::RobotParams robot;
  sensing::SensorConfig sensor;
  MissionConfig mission;
  FlowConfig flow;
  ControlConfig control;
  SimConfig sim;
  std::optional<std::string> coils_json;  // default layout when absent
};

// Parses a scenario object. Relative file paths are resolved against
// base_dir. Unknown keys raise ConfigError to catch typos early. The SMC
// force gains K1..K4 are scaled by viscosity_cp/20 unless given explicitly.
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir);

// Canonical JSON image of a scenario (all fields populated); feeding it back
// through scenario_from_json reproduces the same scenario.
nlohmann::ordered_json scenario_to_json(const Scenario& s);

std::uint64_t scenario_hash(const Scenario& s);

struct SuiteConfig {
  std::string name = "suite";
  int n_trials = 3;
  bool emit_trials = true;
  std::vector<Scenario> scenarios;
};

SuiteConfig suite_from_json(const nlohmann::json& j, const std::string& base_dir);

}  // namespace millibot::harness
