#include "millibot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include "millibot/coilfield.hpp"
#include "millibot/errors.hpp"
#include "millibot/fixtures.hpp"
#include "millibot/svg.hpp"
#include "millibot/text.hpp"

namespace millibot::harness {

Metrics metrics(const std::vector<double>& err) {
  if (err.empty()) throw EmptySeriesError("metrics over an empty series");
  Metrics m;
  double sum_sq = 0.0;
  for (double e : err) {
    sum_sq += e * e;
    m.max = std::max(m.max, e);
  }
  m.rmse = std::sqrt(sum_sq / static_cast<double>(err.size()));

  std::vector<double> sorted = err;
  std::sort(sorted.begin(), sorted.end());
  double h = 0.95 * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  double frac = h - static_cast<double>(lo);
  m.p95 = (lo + 1 < sorted.size())
              ? sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
              : sorted[lo];
  return m;
}

namespace {

planner::PlannedPath resolve_mission(const Scenario& sc,
                                     const planner::CanalMask*& mask_out) {
  mask_out = nullptr;
  if (sc.mission.waypoints_csv)
    return planner::load_waypoints_csv(*sc.mission.waypoints_csv);

  const planner::CanalMask* mask;
  planner::CanalMask loaded;
  if (sc.mission.mask == "@default") {
    mask = &fixtures::phantom_mask();
  } else {
    loaded = planner::load_pgm(sc.mission.mask);
    mask = &loaded;
  }

  auto clearance = planner::distance_transform(*mask);
  auto cost = planner::build_cost_map(*mask, clearance, sc.mission.min_clearance_mm);
  if (cost.max_feasible_clearance_mm <= 0.0)
    throw EmptyFeasibleError("mask has no feasible pixels at the clearance floor");

  planner::PixelCoord start = sc.mission.start_px.value_or(fixtures::phantom_start());
  planner::PixelCoord goal = sc.mission.goal_px.value_or(fixtures::phantom_goal());
  start = planner::project_to_feasible(cost, start);
  goal = planner::project_to_feasible(cost, goal);
  auto raw = planner::astar(cost, start, goal);
  auto planned = planner::smooth_resample(raw, *mask);

  if (sc.mission.mask == "@default") mask_out = &fixtures::phantom_mask();
  return planned;
}

struct FlowSetup {
  std::optional<flow::FlowGrid> grid;
  dynamics::FlowEnv plant;  // pulsatile, signed
};

FlowSetup resolve_flow(const Scenario& sc) {
  FlowSetup fs;
  if (sc.flow.csv) {
    fs.grid = flow::load_flow_csv(*sc.flow.csv);
  } else if (sc.flow.peak_speed_mps > 0.0) {
    if (sc.mission.mask != "@default")
      throw ConfigError(
          "synthetic flow is defined for the built-in phantom; provide "
          "flow.csv for custom masks");
    // Thin fluids run at a higher Reynolds number for the same pump rate, so
    // their field carries the separation cell; thick fluids stay attached.
    bool recirc = sc.viscosity_cp < 10.0;
    fs.grid = fixtures::phantom_flow(sc.flow.peak_speed_mps, recirc);
  }
  if (fs.grid) {
    fs.plant.grid = &*fs.grid;
    fs.plant.profile = sc.flow.profile;
    fs.plant.sign = sc.control.flow_sign;
  }
  return fs;
}

}  // namespace

TrialResult run_trial(const Scenario& sc) {
  TrialResult result;
  result.hash = scenario_hash(sc);

  const planner::CanalMask* mask = nullptr;
  planner::PlannedPath planned = resolve_mission(sc, mask);
  planner::ReferenceTrajectory traj(planned, sc.mission.speed_mmps);
  result.waypoints_mm = planned.waypoints_mm;

  FlowSetup fs = resolve_flow(sc);

  std::vector<coilfield::CoilModel> coils;
  double omega_o = sc.control.omega_o;
  if (sc.coils_json) {
    auto [loaded, w] = coilfield::load_coils_json(*sc.coils_json);
    coils = std::move(loaded);
    omega_o = w;
  } else {
    coils = fixtures::default_coil_layout();
    fixtures::calibrate_default(coils);
  }
  if (coils.size() != 8) throw ConfigError("scenario needs exactly 8 coils");

  const double c_t_true =
      sc.robot.c_t_override
          ? *sc.robot.c_t_override
          : dynamics::drag_coefficient(sc.viscosity_cp * 1e-3, sc.robot.length,
                                       sc.robot.radius);
  const double c_t_model = c_t_true * sc.control.ct_model_scale;
  const double dt = 1.0 / sc.sensor.rate_hz;
  const double mean_g = fs.grid ? flow::mean_modulation(sc.flow.profile) : 0.0;

  // Flow field as the controllers believe it: steady mean, same sign flip.
  auto flow_for_control = [&](const Vec2& pos_m) -> Vec2 {
    if (!fs.grid) return Vec2::Zero();
    flow::PulsatileProfile steady;
    auto s = flow::sample_flow(*fs.grid, steady, pos_m * 1000.0, 0.0);
    return sc.control.flow_sign * mean_g * s.velocity;
  };

  sensing::SensorConfig sensor_cfg = sc.sensor;
  sensor_cfg.seed = sc.sim.seed;
  sensing::Sensor sensor(sensor_cfg);
  sensing::VelocityEstimator estimator;

  control::DobState dob;
  control::PidController pid(sc.control.pid);

  dynamics::RobotState truth;
  {
    auto ref0 = traj.at(0.0);
    truth.position = ref0.position_mm / 1000.0;
    truth.heading = std::atan2(ref0.tangent.y(), ref0.tangent.x());
  }

  control::ControlOutput held;
  held.force_n.setZero();
  held.field_dir = traj.at(0.0).tangent;
  std::array<double, 8> held_currents{};
  bool held_saturated = false;

  const double timeout_s = sc.sim.duration_limit_s
                               ? *sc.sim.duration_limit_s
                               : traj.duration_s() + sc.sim.duration_margin_s;
  const int fail_ticks = std::max(
      1, static_cast<int>(std::ceil(sc.sim.fail_hold_s * sc.sensor.rate_hz)));
  int err_streak = 0;
  const Vec2 final_wp = planned.waypoints_mm.back();

  for (int k = 0;; ++k) {
    const double t = k * dt;
    sensing::PoseMeasurement meas = sensor.sample(truth);
    estimator.update(meas);

    auto ref_mm = traj.at(t);
    control::ReferenceSample ref;
    ref.position = ref_mm.position_mm / 1000.0;
    ref.velocity = ref_mm.velocity_mmps / 1000.0;
    ref.tangent = ref_mm.tangent;

    const Vec2 truth_mm = truth.position * 1000.0;
    const double err_mm = (truth_mm - ref_mm.position_mm).norm();

    StepRecord rec;
    rec.t = t;
    rec.pos_mm = truth_mm;
    rec.des_mm = ref_mm.position_mm;
    rec.err_mm = err_mm;
    rec.meas_valid = meas.valid;

    double i_max = sc.control.i_max_a;
    if (meas.valid && estimator.has_fix()) {
      const Vec2 x_hat = estimator.position_m();
      const Vec2 v_hat = estimator.velocity_mps();
      const Vec2 v_flow = flow_for_control(x_hat);

      control::SmcGains gains = sc.control.smc;
      if (sc.control.retune_enabled) {
        auto rt = control::region_retune(x_hat * 1000.0, sc.control.i_max_a,
                                         gains.eta, gains.phi,
                                         sc.control.retune_region_mm);
        i_max = rt.i_max;
        gains.eta = rt.eta;
        gains.phi = rt.phi;
        rec.retune_active = rt.active;
      }

      control::ControlOutput out;
      switch (sc.controller) {
        case ControllerType::kSmcDob:
        case ControllerType::kSmcNoDob:
          out = control::smc_step(x_hat, v_hat, ref, dob, gains, v_flow,
                                  c_t_model, sc.robot.mass, dt,
                                  sc.controller == ControllerType::kSmcDob);
          break;
        case ControllerType::kPid:
          out = pid.step(x_hat, v_hat, ref, v_flow, c_t_model, dt);
          break;
        case ControllerType::kMpc: {
          std::vector<Vec2> horizon(
              static_cast<std::size_t>(sc.control.mpc.horizon));
          for (int i = 0; i < sc.control.mpc.horizon; ++i)
            horizon[static_cast<std::size_t>(i)] =
                traj.at(t + (i + 1) * sc.control.mpc.dt).position_mm / 1000.0;
          out = control::mpc_step(x_hat, v_hat, horizon, sc.control.mpc, v_flow,
                                  c_t_model, sc.robot.mass);
          break;
        }
      }
      held = out;

      Vec2 dipole = sc.robot.dipole_moment *
                    Vec2(std::cos(estimator.heading()), std::sin(estimator.heading()));
      auto am = coilfield::assemble_actuation(coils, dipole, x_hat, omega_o);
      Vec4 C(out.force_n.x(), out.force_n.y(),
             omega_o * sc.control.b_scale_t * out.field_dir.x(),
             omega_o * sc.control.b_scale_t * out.field_dir.y());
      auto alloc = coilfield::allocate_currents(am, C, i_max);
      held_currents = alloc.currents;
      held_saturated = alloc.saturated;
      // The observer should integrate the force the coils can actually
      // deliver, not the request, or it winds up whenever the allocator
      // derates and then slingshots the robot once headroom returns.
      if (alloc.saturated) dob.f_prev *= alloc.scale;
    }

    rec.f_des_n = held.force_n;
    rec.currents_a = held_currents;
    rec.s = held.s;
    rec.d_hat = held.d_hat;
    rec.saturated = held_saturated;
    result.steps.push_back(rec);

    // Wrench the coils actually exert at the true pose.
    auto fsamp = coilfield::superpose(coils, held_currents, truth.position);
    Vec2 dipole_true = sc.robot.dipole_moment *
                       Vec2(std::cos(truth.heading), std::sin(truth.heading));
    auto [f_applied, torque] = coilfield::force_torque(dipole_true, fsamp);
    (void)torque;
    Vec2 f_total = f_applied + sc.sim.inject_force_n;

    const bool ref_done = sc.mission.speed_mmps * t >= traj.length_mm();
    if (ref_done && (truth_mm - final_wp).norm() <= sc.sim.complete_radius_mm) {
      result.completed = true;
      result.duration_s = t;
      break;
    }
    err_streak = (err_mm > sc.sim.err_fail_mm) ? err_streak + 1 : 0;
    if (err_streak >= fail_ticks) {
      result.failure_reason = "tracking error above " +
                              format_double(sc.sim.err_fail_mm) + " mm for " +
                              format_double(sc.sim.fail_hold_s) + " s";
      result.duration_s = t;
      break;
    }
    if (std::abs(truth_mm.x()) > sc.sim.workspace_limit_mm ||
        std::abs(truth_mm.y()) > sc.sim.workspace_limit_mm) {
      result.failure_reason = "left the workspace";
      result.duration_s = t;
      break;
    }
    if (t >= timeout_s) {
      result.failure_reason = "timed out before reaching the goal";
      result.duration_s = t;
      break;
    }

    truth = dynamics::step(truth, f_total, fsamp.B, fs.plant, sc.robot,
                           c_t_true, dt);
  }

  std::vector<double> err;
  err.reserve(result.steps.size());
  int saturated = 0;
  for (const auto& srec : result.steps) {
    err.push_back(srec.err_mm);
    saturated += srec.saturated ? 1 : 0;
  }
  result.err = metrics(err);
  result.saturated_fraction =
      static_cast<double>(saturated) / static_cast<double>(result.steps.size());
  return result;
}

namespace {

int worker_count(std::size_t n_tasks) {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw ? static_cast<int>(hw) : 1;
  if (const char* env = std::getenv("MILLIBOT_THREADS")) {
    int cap = 0;
    try {
      cap = static_cast<int>(parse_int(env));
    } catch (const ParseError&) {
      throw ConfigError("MILLIBOT_THREADS must be an integer");
    }
    if (cap < 1) throw ConfigError("MILLIBOT_THREADS must be at least 1");
    n = std::min(n, cap);
  }
  return std::min<int>(n, static_cast<int>(n_tasks));
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

SuiteResult run_suite(const SuiteConfig& cfg) {
  struct Task {
    std::size_t scenario_idx;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cfg.scenarios.size(); ++i)
    for (int k = 0; k < cfg.n_trials; ++k) tasks.push_back({i, k});

  std::vector<TrialResult> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      Scenario sc = cfg.scenarios[tasks[i].scenario_idx];
      sc.sim.seed += static_cast<std::uint64_t>(tasks[i].trial);
      try {
        results[i] = run_trial(sc);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  int n_workers = worker_count(tasks.size());
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i].empty())
      throw ConfigError("scenario '" + cfg.scenarios[tasks[i].scenario_idx].name +
                        "' trial " + std::to_string(tasks[i].trial) + ": " +
                        errors[i]);
  }

  SuiteResult out;
  out.name = cfg.name;
  for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
    ScenarioStats st;
    st.name = cfg.scenarios[i].name;
    st.n_trials = cfg.n_trials;
    std::vector<double> rmse, p95, mx;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (tasks[t].scenario_idx != i) continue;
      const TrialResult& r = results[t];
      st.trials.push_back(r);
      if (r.completed) ++st.n_completed;
      rmse.push_back(r.err.rmse);
      p95.push_back(r.err.p95);
      mx.push_back(r.err.max);
    }
    auto mean = [](const std::vector<double>& xs) {
      double acc = 0.0;
      for (double x : xs) acc += x;
      return acc / static_cast<double>(xs.size());
    };
    st.rmse_mean = mean(rmse);
    st.p95_mean = mean(p95);
    st.max_mean = mean(mx);
    st.rmse_std = sample_std(rmse, st.rmse_mean);
    st.p95_std = sample_std(p95, st.p95_mean);
    st.max_std = sample_std(mx, st.max_mean);
    out.scenarios.push_back(std::move(st));
  }
  return out;
}

void write_steps_csv(const std::string& path, const TrialResult& r) {
  std::string body =
      "t_s,x_mm,y_mm,xd_mm,yd_mm,err_mm,fx_n,fy_n,"
      "i1_a,i2_a,i3_a,i4_a,i5_a,i6_a,i7_a,i8_a,sx,sy,dhat_x,dhat_y\n";
  for (const auto& s : r.steps) {
    body += format_double(s.t);
    for (double v : {s.pos_mm.x(), s.pos_mm.y(), s.des_mm.x(), s.des_mm.y(),
                     s.err_mm, s.f_des_n.x(), s.f_des_n.y()}) {
      body += ',';
      body += format_double(v);
    }
    for (double v : s.currents_a) {
      body += ',';
      body += format_double(v);
    }
    for (double v : {s.s.x(), s.s.y(), s.d_hat.x(), s.d_hat.y()}) {
      body += ',';
      body += format_double(v);
    }
    body += '\n';
  }
  write_file(path, body);
}

Metrics metrics_from_steps_csv(const std::string& path) {
  std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  std::vector<double> err;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() < 6) throw ParseError(path + ": short row");
    err.push_back(parse_double(cols[5]));
  }
  return metrics(err);
}

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::ordered_json trial_json(const TrialResult& r) {
  nlohmann::ordered_json j;
  j["completed"] = r.completed;
  j["failure_reason"] =
      r.failure_reason ? nlohmann::ordered_json(*r.failure_reason)
                       : nlohmann::ordered_json(nullptr);
  j["rmse_mm"] = r.err.rmse;
  j["p95_mm"] = r.err.p95;
  j["max_mm"] = r.err.max;
  j["n_steps"] = r.steps.size();
  j["duration_s"] = r.duration_s;
  j["saturated_fraction"] = r.saturated_fraction;
  j["scenario_hash"] = hash_hex(r.hash);
  return j;
}

}  // namespace

void write_trial_summary(const std::string& path, const Scenario& s,
                         const TrialResult& r) {
  nlohmann::ordered_json j = trial_json(r);
  j["name"] = s.name;
  j["controller"] = to_string(s.controller);
  j["seed"] = s.sim.seed;
  write_file(path, j.dump(2) + "\n");
}

void write_trial_overlay(const std::string& path, const Scenario& s,
                         const TrialResult& r) {
  svg::Document doc(-46.0, -46.0, 92.0, 92.0);
  doc.rect(-46.0, -46.0, 92.0, 92.0, "#101418");

  // Channel silhouette at 1 mm resolution (only for the built-in phantom).
  if (s.mission.mask == "@default" && !s.mission.waypoints_csv) {
    const auto& mask = fixtures::phantom_mask();
    for (int y = -45; y <= 45; ++y) {
      int run_start = 99;
      for (int x = -46; x <= 46; ++x) {
        int col, row;
        mask.mm_to_pixel(Vec2(x, y), col, row);
        bool in = col >= 0 && row >= 0 && col < mask.nx && row < mask.ny &&
                  mask.at(col, row);
        if (in && run_start == 99) run_start = x;
        if ((!in || x == 46) && run_start != 99) {
          int run_end = in ? x : x - 1;
          doc.rect(run_start - 0.5, -y - 0.5, run_end - run_start + 1.0, 1.0,
                   "#2e3f4f");
          run_start = 99;
        }
      }
    }
  }

  std::vector<Vec2> ref, act;
  ref.reserve(r.steps.size());
  act.reserve(r.steps.size());
  for (const auto& st : r.steps) {
    ref.emplace_back(st.des_mm.x(), -st.des_mm.y());
    act.emplace_back(st.pos_mm.x(), -st.pos_mm.y());
  }
  doc.polyline(ref, "#8fd3ff", 0.4, "1.5,1");
  doc.polyline(act, "#ffb454", 0.5);
  for (const auto& wp : r.waypoints_mm)
    doc.circle(wp.x(), -wp.y(), 0.8, "#8fd3ff");
  if (!act.empty()) {
    doc.circle(act.front().x(), act.front().y(), 1.2, "#7dff8a");
    doc.circle(act.back().x(), act.back().y(), 1.2,
               r.completed ? "#7dff8a" : "#ff6b6b");
  }
  doc.write(path);
}

void emit_trial(const std::string& dir, const Scenario& s, const TrialResult& r) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  write_steps_csv(dir + "/steps.csv", r);
  write_trial_summary(dir + "/summary.json", s, r);
  write_trial_overlay(dir + "/overlay.svg", s, r);
}

void write_suite_summary(const std::string& path, const SuiteResult& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& st : r.scenarios) {
    nlohmann::ordered_json sj;
    sj["name"] = st.name;
    sj["n_trials"] = st.n_trials;
    sj["n_completed"] = st.n_completed;
    sj["rmse_mean_mm"] = st.rmse_mean;
    sj["rmse_std_mm"] = st.rmse_std;
    sj["p95_mean_mm"] = st.p95_mean;
    sj["p95_std_mm"] = st.p95_std;
    sj["max_mean_mm"] = st.max_mean;
    sj["max_std_mm"] = st.max_std;
    sj["trials"] = nlohmann::ordered_json::array();
    for (const auto& t : st.trials) sj["trials"].push_back(trial_json(t));
    j["scenarios"].push_back(sj);
  }
  write_file(path, j.dump(2) + "\n");
}

std::string suite_table(const SuiteResult& r) {
  std::ostringstream os;
  os << "scenario                          rmse_mm    p95_mm    max_mm  status\n";
  for (const auto& st : r.scenarios) {
    char line[160];
    if (st.n_completed == st.n_trials) {
      std::snprintf(line, sizeof line, "%-32s %8.3f  %8.3f  %8.3f  ok (%d/%d)\n",
                    st.name.c_str(), st.rmse_mean, st.p95_mean, st.max_mean,
                    st.n_completed, st.n_trials);
    } else {
      std::snprintf(line, sizeof line,
                    "%-32s        -         -         -  failed to complete "
                    "trajectory (%d/%d)\n",
                    st.name.c_str(), st.n_completed, st.n_trials);
    }
    os << line;
  }
  return os.str();
}

}  // namespace millibot::harness
