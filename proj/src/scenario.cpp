#include "millibot/scenario.hpp"

#include <filesystem>
#include <set>

#include "millibot/errors.hpp"
#include "millibot/fixtures.hpp"

namespace millibot::harness {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

double num(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError("'" + key + "' must be a number");
  return j.at(key).get<double>();
}

Vec2 vec2(const json& j, const std::string& key, const Vec2& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2)
    throw ConfigError("'" + key + "' must be a 2-element array");
  return Vec2(a[0].get<double>(), a[1].get<double>());
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || path.front() == '@') return path;
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

std::string to_string(ControllerType t) {
  switch (t) {
    case ControllerType::kPid: return "pid";
    case ControllerType::kMpc: return "mpc";
    case ControllerType::kSmcDob: return "smc_dob";
    case ControllerType::kSmcNoDob: return "smc_no_dob";
  }
  return "smc_dob";
}

ControllerType controller_from_string(const std::string& s) {
  if (s == "pid") return ControllerType::kPid;
  if (s == "mpc") return ControllerType::kMpc;
  if (s == "smc_dob" || s == "smc") return ControllerType::kSmcDob;
  if (s == "smc_no_dob") return ControllerType::kSmcNoDob;
  throw ConfigError("unknown controller '" + s + "'");
}

Scenario scenario_from_json(const json& j, const std::string& base_dir) {
  check_keys(j, "scenario",
             {"name", "controller", "viscosity_cp", "robot", "sensor", "mission",
              "flow", "control", "sim", "coils"});

  Scenario s;
  if (j.contains("name")) s.name = j.at("name").get<std::string>();
  if (j.contains("controller"))
    s.controller = controller_from_string(j.at("controller").get<std::string>());
  s.viscosity_cp = num(j, "viscosity_cp", 20.0);
  if (s.viscosity_cp <= 0.0) throw ConfigError("viscosity_cp must be positive");

  if (j.contains("robot")) {
    const auto& r = j.at("robot");
    check_keys(r, "robot",
               {"mass_kg", "length_m", "radius_m", "dipole_am2", "c_t_override"});
    s.robot.mass = num(r, "mass_kg", s.robot.mass);
    s.robot.length = num(r, "length_m", s.robot.length);
    s.robot.radius = num(r, "radius_m", s.robot.radius);
    s.robot.dipole_moment = num(r, "dipole_am2", s.robot.dipole_moment);
    if (r.contains("c_t_override")) s.robot.c_t_override = num(r, "c_t_override", 0.0);
    if (s.robot.mass <= 0.0) throw ConfigError("mass_kg must be positive");
  }

  if (j.contains("sensor")) {
    const auto& c = j.at("sensor");
    check_keys(c, "sensor",
               {"rate_hz", "sigma_pos_mm", "sigma_heading_rad", "dropout_prob",
                "latency_samples"});
    s.sensor.rate_hz = num(c, "rate_hz", s.sensor.rate_hz);
    s.sensor.sigma_pos_mm = num(c, "sigma_pos_mm", s.sensor.sigma_pos_mm);
    s.sensor.sigma_heading = num(c, "sigma_heading_rad", s.sensor.sigma_heading);
    s.sensor.dropout_prob = num(c, "dropout_prob", s.sensor.dropout_prob);
    s.sensor.latency_samples =
        static_cast<int>(num(c, "latency_samples", s.sensor.latency_samples));
    if (s.sensor.rate_hz <= 0.0) throw ConfigError("sensor rate must be positive");
    if (s.sensor.dropout_prob < 0.0 || s.sensor.dropout_prob >= 1.0)
      throw ConfigError("dropout_prob must be in [0, 1)");
    if (s.sensor.latency_samples < 0)
      throw ConfigError("latency_samples must be non-negative");
  }

  if (j.contains("mission")) {
    const auto& m = j.at("mission");
    check_keys(m, "mission",
               {"mask", "start_px", "goal_px", "waypoints_csv", "speed_mmps",
                "min_clearance_mm"});
    if (m.contains("mask"))
      s.mission.mask = resolve(m.at("mask").get<std::string>(), base_dir);
    if (m.contains("start_px")) {
      const auto& a = m.at("start_px");
      s.mission.start_px = planner::PixelCoord{a.at(0).get<int>(), a.at(1).get<int>()};
    }
    if (m.contains("goal_px")) {
      const auto& a = m.at("goal_px");
      s.mission.goal_px = planner::PixelCoord{a.at(0).get<int>(), a.at(1).get<int>()};
    }
    if (m.contains("waypoints_csv"))
      s.mission.waypoints_csv = resolve(m.at("waypoints_csv").get<std::string>(), base_dir);
    s.mission.speed_mmps = num(m, "speed_mmps", s.mission.speed_mmps);
    s.mission.min_clearance_mm = num(m, "min_clearance_mm", s.mission.min_clearance_mm);
    if (s.mission.speed_mmps <= 0.0) throw ConfigError("speed_mmps must be positive");
  }

  if (j.contains("flow")) {
    const auto& f = j.at("flow");
    check_keys(f, "flow", {"peak_speed_mps", "waveform", "frequency_hz", "phase", "csv"});
    s.flow.peak_speed_mps = num(f, "peak_speed_mps", 0.0);
    if (s.flow.peak_speed_mps < 0.0)
      throw ConfigError("peak_speed_mps must be non-negative");
    if (f.contains("waveform")) {
      std::string w = f.at("waveform").get<std::string>();
      if (w == "constant") {
        s.flow.profile.waveform = flow::Waveform::kConstant;
      } else if (w == "rectified_sine") {
        s.flow.profile.waveform = flow::Waveform::kRectifiedSine;
      } else {
        throw ConfigError("unknown waveform '" + w + "'");
      }
    }
    s.flow.profile.frequency_hz = num(f, "frequency_hz", s.flow.profile.frequency_hz);
    s.flow.profile.phase = num(f, "phase", s.flow.profile.phase);
    if (f.contains("csv"))
      s.flow.csv = resolve(f.at("csv").get<std::string>(), base_dir);
  }

  // Force gains track fluid resistance: thinner fluid means a livelier plant,
  // so the whole force scale comes down with it (explicit overrides win).
  const double visc_scale = s.viscosity_cp / 20.0;
  control::SmcGains ref_gains;
  s.control.smc.K1 = visc_scale * ref_gains.K1;
  s.control.smc.K2 = visc_scale * ref_gains.K2;
  s.control.smc.K3 = visc_scale * ref_gains.K3;
  s.control.smc.K4 = visc_scale * ref_gains.K4;

  if (j.contains("control")) {
    const auto& c = j.at("control");
    check_keys(c, "control",
               {"i_max_a", "b_scale_t", "omega_o", "flow_sign", "ct_model_scale",
                "smc", "pid", "mpc", "retune"});
    s.control.i_max_a = num(c, "i_max_a", s.control.i_max_a);
    s.control.b_scale_t = num(c, "b_scale_t", s.control.b_scale_t);
    s.control.omega_o = num(c, "omega_o", s.control.omega_o);
    s.control.flow_sign = num(c, "flow_sign", s.control.flow_sign);
    s.control.ct_model_scale = num(c, "ct_model_scale", s.control.ct_model_scale);
    if (s.control.i_max_a <= 0.0) throw ConfigError("i_max_a must be positive");
    if (s.control.flow_sign != 1.0 && s.control.flow_sign != -1.0)
      throw ConfigError("flow_sign must be 1 or -1");

    if (c.contains("smc")) {
      const auto& g = c.at("smc");
      check_keys(g, "control.smc",
                 {"gamma", "lambda", "k1", "k2", "k3", "K4_n", "eta_s", "phi_m",
                  "wp", "wr"});
      auto& smc = s.control.smc;
      smc.gamma = num(g, "gamma", smc.gamma);
      smc.lambda = num(g, "lambda", smc.lambda);
      if (g.contains("k1")) smc.K1 = num(g, "k1", 0.0) * Mat2::Identity();
      if (g.contains("k2")) smc.K2 = num(g, "k2", 0.0) * Mat2::Identity();
      if (g.contains("k3")) smc.K3 = num(g, "k3", 0.0) * Mat2::Identity();
      smc.K4 = num(g, "K4_n", smc.K4);
      smc.eta = num(g, "eta_s", smc.eta);
      smc.phi = num(g, "phi_m", smc.phi);
      if (g.contains("wp")) smc.Wp = num(g, "wp", 1.0) * Mat2::Identity();
      if (g.contains("wr")) smc.Wr = num(g, "wr", 1.0) * Mat2::Identity();
      if (smc.eta <= 0.0 || smc.phi <= 0.0)
        throw ConfigError("smc eta and phi must be positive");
      if (smc.K3.determinant() == 0.0) throw ConfigError("smc k3 must be invertible");
    }
    if (c.contains("pid")) {
      const auto& g = c.at("pid");
      check_keys(g, "control.pid",
                 {"kp", "ki", "kd", "integral_limit", "heading_deg"});
      auto& pid = s.control.pid;
      if (g.contains("kp")) pid.Kp = num(g, "kp", 0.0) * Mat2::Identity();
      if (g.contains("ki")) pid.Ki = num(g, "ki", 0.0) * Mat2::Identity();
      if (g.contains("kd")) pid.Kd = num(g, "kd", 0.0) * Mat2::Identity();
      pid.integral_limit = num(g, "integral_limit", pid.integral_limit);
      pid.heading_deg = num(g, "heading_deg", pid.heading_deg);
      if (pid.integral_limit <= 0.0)
        throw ConfigError("pid integral_limit must be positive");
    }
    if (c.contains("mpc")) {
      const auto& g = c.at("mpc");
      check_keys(g, "control.mpc", {"horizon", "dt_s", "q", "r", "p", "heading_deg"});
      auto& mpc = s.control.mpc;
      mpc.horizon = static_cast<int>(num(g, "horizon", mpc.horizon));
      mpc.dt = num(g, "dt_s", mpc.dt);
      if (g.contains("q")) mpc.Q = num(g, "q", 0.0) * Mat2::Identity();
      if (g.contains("r")) mpc.R = num(g, "r", 0.0) * Mat2::Identity();
      if (g.contains("p")) mpc.P = num(g, "p", 0.0) * Mat2::Identity();
      mpc.heading_deg = num(g, "heading_deg", mpc.heading_deg);
      if (mpc.horizon < 1) throw ConfigError("mpc horizon must be at least 1");
      if (mpc.dt <= 0.0) throw ConfigError("mpc dt must be positive");
      Eigen::LLT<Mat2> llt(mpc.R);
      if (llt.info() != Eigen::Success)
        throw ConfigError("mpc r must be positive definite");
    }
    if (c.contains("retune")) {
      const auto& g = c.at("retune");
      check_keys(g, "control.retune", {"enabled", "region_mm"});
      if (g.contains("enabled")) s.control.retune_enabled = g.at("enabled").get<bool>();
      if (g.contains("region_mm")) {
        for (const auto& pt : g.at("region_mm")) {
          if (!pt.is_array() || pt.size() != 2)
            throw ConfigError("retune region points must be [x, y] pairs");
          s.control.retune_region_mm.emplace_back(pt[0].get<double>(),
                                                  pt[1].get<double>());
        }
        if (s.control.retune_region_mm.size() < 3)
          throw ConfigError("retune region needs at least 3 points");
      }
    }
  }
  if (s.control.retune_region_mm.empty())
    s.control.retune_region_mm = fixtures::default_disturbance_region();

  if (j.contains("sim")) {
    const auto& c = j.at("sim");
    check_keys(c, "sim",
               {"seed", "duration_margin_s", "duration_limit_s", "inject_force_n",
                "err_fail_mm", "fail_hold_s", "workspace_limit_mm",
                "complete_radius_mm"});
    if (c.contains("seed")) s.sim.seed = c.at("seed").get<std::uint64_t>();
    s.sim.duration_margin_s = num(c, "duration_margin_s", s.sim.duration_margin_s);
    if (c.contains("duration_limit_s")) {
      s.sim.duration_limit_s = num(c, "duration_limit_s", 0.0);
      if (*s.sim.duration_limit_s <= 0.0)
        throw ConfigError("duration_limit_s must be positive");
    }
    s.sim.inject_force_n = vec2(c, "inject_force_n", s.sim.inject_force_n);
    s.sim.err_fail_mm = num(c, "err_fail_mm", s.sim.err_fail_mm);
    s.sim.fail_hold_s = num(c, "fail_hold_s", s.sim.fail_hold_s);
    s.sim.workspace_limit_mm = num(c, "workspace_limit_mm", s.sim.workspace_limit_mm);
    s.sim.complete_radius_mm = num(c, "complete_radius_mm", s.sim.complete_radius_mm);
  }

  if (j.contains("coils"))
    s.coils_json = resolve(j.at("coils").get<std::string>(), base_dir);
  return s;
}

nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["name"] = s.name;
  j["controller"] = to_string(s.controller);
  j["viscosity_cp"] = s.viscosity_cp;
  j["robot"] = {{"mass_kg", s.robot.mass},
                {"length_m", s.robot.length},
                {"radius_m", s.robot.radius},
                {"dipole_am2", s.robot.dipole_moment}};
  if (s.robot.c_t_override) j["robot"]["c_t_override"] = *s.robot.c_t_override;
  j["sensor"] = {{"rate_hz", s.sensor.rate_hz},
                 {"sigma_pos_mm", s.sensor.sigma_pos_mm},
                 {"sigma_heading_rad", s.sensor.sigma_heading},
                 {"dropout_prob", s.sensor.dropout_prob},
                 {"latency_samples", s.sensor.latency_samples}};
  ordered_json m;
  m["mask"] = s.mission.mask;
  if (s.mission.start_px)
    m["start_px"] = {s.mission.start_px->col, s.mission.start_px->row};
  if (s.mission.goal_px)
    m["goal_px"] = {s.mission.goal_px->col, s.mission.goal_px->row};
  if (s.mission.waypoints_csv) m["waypoints_csv"] = *s.mission.waypoints_csv;
  m["speed_mmps"] = s.mission.speed_mmps;
  m["min_clearance_mm"] = s.mission.min_clearance_mm;
  j["mission"] = m;

  ordered_json f;
  f["peak_speed_mps"] = s.flow.peak_speed_mps;
  f["waveform"] = s.flow.profile.waveform == flow::Waveform::kConstant
                      ? "constant"
                      : "rectified_sine";
  f["frequency_hz"] = s.flow.profile.frequency_hz;
  f["phase"] = s.flow.profile.phase;
  if (s.flow.csv) f["csv"] = *s.flow.csv;
  j["flow"] = f;

  ordered_json c;
  c["i_max_a"] = s.control.i_max_a;
  c["b_scale_t"] = s.control.b_scale_t;
  c["omega_o"] = s.control.omega_o;
  c["flow_sign"] = s.control.flow_sign;
  c["ct_model_scale"] = s.control.ct_model_scale;
  c["smc"] = {{"gamma", s.control.smc.gamma},   {"lambda", s.control.smc.lambda},
              {"k1", s.control.smc.K1(0, 0)},   {"k2", s.control.smc.K2(0, 0)},
              {"k3", s.control.smc.K3(0, 0)},   {"K4_n", s.control.smc.K4},
              {"eta_s", s.control.smc.eta},     {"phi_m", s.control.smc.phi},
              {"wp", s.control.smc.Wp(0, 0)},   {"wr", s.control.smc.Wr(0, 0)}};
  c["pid"] = {{"kp", s.control.pid.Kp(0, 0)},
              {"ki", s.control.pid.Ki(0, 0)},
              {"kd", s.control.pid.Kd(0, 0)},
              {"integral_limit", s.control.pid.integral_limit},
              {"heading_deg", s.control.pid.heading_deg}};
  c["mpc"] = {{"horizon", s.control.mpc.horizon}, {"dt_s", s.control.mpc.dt},
              {"q", s.control.mpc.Q(0, 0)},       {"r", s.control.mpc.R(0, 0)},
              {"p", s.control.mpc.P(0, 0)},
              {"heading_deg", s.control.mpc.heading_deg}};
  ordered_json region = ordered_json::array();
  for (const auto& pt : s.control.retune_region_mm)
    region.push_back({pt.x(), pt.y()});
  c["retune"] = {{"enabled", s.control.retune_enabled}, {"region_mm", region}};
  j["control"] = c;

  j["sim"] = {{"seed", s.sim.seed},
              {"duration_margin_s", s.sim.duration_margin_s},
              {"inject_force_n", {s.sim.inject_force_n.x(), s.sim.inject_force_n.y()}},
              {"err_fail_mm", s.sim.err_fail_mm},
              {"fail_hold_s", s.sim.fail_hold_s},
              {"workspace_limit_mm", s.sim.workspace_limit_mm},
              {"complete_radius_mm", s.sim.complete_radius_mm}};
  if (s.sim.duration_limit_s) j["sim"]["duration_limit_s"] = *s.sim.duration_limit_s;
  if (s.coils_json) j["coils"] = *s.coils_json;
  return j;
}

std::uint64_t scenario_hash(const Scenario& s) {
  std::string dump = scenario_to_json(s).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

SuiteConfig suite_from_json(const json& j, const std::string& base_dir) {
  check_keys(j, "suite", {"name", "n_trials", "emit_trials", "scenarios"});
  SuiteConfig cfg;
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
  if (j.contains("n_trials")) cfg.n_trials = j.at("n_trials").get<int>();
  if (cfg.n_trials < 1) throw ConfigError("n_trials must be at least 1");
  if (j.contains("emit_trials")) cfg.emit_trials = j.at("emit_trials").get<bool>();
  if (!j.contains("scenarios") || !j.at("scenarios").is_array() ||
      j.at("scenarios").empty())
    throw ConfigError("suite needs a non-empty 'scenarios' array");
  for (const auto& sj : j.at("scenarios"))
    cfg.scenarios.push_back(scenario_from_json(sj, base_dir));
  return cfg;
}

}  // namespace millibot::harness
