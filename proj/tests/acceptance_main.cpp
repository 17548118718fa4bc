// Acceptance gate: one line per criterion, exit code = number of failures.
// Each criterion is self-contained and uses independent oracles where the
// library value is derived rather than pinned.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "millibot/coilfield.hpp"
#include "millibot/control.hpp"
#include "millibot/dynamics.hpp"
#include "millibot/errors.hpp"
#include "millibot/fixtures.hpp"
#include "millibot/harness.hpp"
#include "millibot/planner.hpp"
#include "millibot/random.hpp"
#include "millibot/text.hpp"

using namespace millibot;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

Outcome unit_numerics() {
  dynamics::RobotParams r;
  double ct20 = dynamics::drag_coefficient(20e-3, r.length, r.radius);
  double ct43 = dynamics::drag_coefficient(4.3e-3, r.length, r.radius);
  bool ok_ct = std::abs(ct20 / 5.585e-4 - 1.0) <= 1e-3 &&
               std::abs(ct43 / 1.201e-4 - 1.0) <= 1e-3;

  coilfield::FieldSample field;
  field.grad << 0.43, 0.0, 0.0, -0.43;  // traceless symmetric, 0.43 T/m
  Vec2 dipole(8.60e-4, 0.0);
  auto [force, torque] = coilfield::force_torque(dipole, field);
  (void)torque;
  bool ok_f = std::abs(force.norm() / 0.37e-3 - 1.0) <= 5e-3;

  return {ok_ct && ok_f,
          fmt("ct20=%.4e N s/m, ct43=%.4e N s/m, pull=%.4e N", ct20, ct43,
              force.norm())};
}

// ---------------------------------------------------------------- criterion 2

Outcome coil_calibration() {
  auto coils = fixtures::default_coil_layout();
  auto rep = fixtures::calibrate_default(coils);
  double grad_mt_cm = rep.peak_gradient * 10.0;
  bool ok = std::abs(rep.peak_b / 24.05e-3 - 1.0) <= 1e-3 &&
            grad_mt_cm >= 10.0 && grad_mt_cm <= 18.0;
  return {ok, fmt("peak |B|=%.4f mT at (%.3f, %.3f) m, peak gradient=%.2f mT/cm",
                  rep.peak_b * 1e3, rep.peak_b_at.x(), rep.peak_b_at.y(),
                  grad_mt_cm)};
}

// ---------------------------------------------------------------- criterion 3

Outcome allocation_oracle() {
  Rng rng(31);
  double worst_rel = 0.0, worst_achieve = 0.0, worst_norm = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    coilfield::ActuationMatrix am;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 8; ++j) am.A(i, j) = rng.normal();
    Vec4 C;
    for (int i = 0; i < 4; ++i) C(i) = rng.normal();

    auto alloc = coilfield::allocate_currents(am, C, 1e9);
    Eigen::Matrix<double, 8, 1> x;
    for (int i = 0; i < 8; ++i) x(i) = alloc.currents[static_cast<std::size_t>(i)];

    Eigen::Matrix<double, 8, 1> oracle =
        am.A.transpose() * (am.A * am.A.transpose()).llt().solve(C);

    worst_rel = std::max(worst_rel, (x - oracle).norm() / oracle.norm());
    worst_achieve = std::max(worst_achieve, (am.A * x - C).norm() / C.norm());
    worst_norm = std::max(worst_norm, x.norm() - oracle.norm());
  }
  bool ok = worst_rel <= 1e-8 && worst_achieve <= 1e-8 && worst_norm <= 1e-10;
  return {ok, fmt("1000 instances, worst oracle gap=%.2e, worst residual=%.2e",
                  worst_rel, worst_achieve)};
}

// ---------------------------------------------------------------- criterion 4

double astar_path_cost(const planner::CostMap& map,
                       const std::vector<planner::PixelCoord>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    bool diag = path[i].col != path[i - 1].col && path[i].row != path[i - 1].row;
    total += (diag ? std::sqrt(2.0) : 1.0) * map.cost[map.idx(path[i].col,
                                                              path[i].row)];
  }
  return total;
}

std::vector<double> dijkstra_all(const planner::CostMap& map,
                                 planner::PixelCoord start) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(map.cost.size(), inf);
  using Node = std::pair<double, std::size_t>;
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  std::size_t s = map.idx(start.col, start.row);
  dist[s] = 0.0;
  open.push({0.0, s});
  while (!open.empty()) {
    auto [d, u] = open.top();
    open.pop();
    if (d > dist[u]) continue;
    int col = static_cast<int>(u) % map.nx;
    int row = static_cast<int>(u) / map.nx;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        int nc = col + dc, nr = row + dr;
        if (nc < 0 || nr < 0 || nc >= map.nx || nr >= map.ny) continue;
        std::size_t v = map.idx(nc, nr);
        if (!map.feasible[v]) continue;
        double w = ((dr != 0 && dc != 0) ? std::sqrt(2.0) : 1.0) * map.cost[v];
        if (dist[u] + w < dist[v]) {
          dist[v] = dist[u] + w;
          open.push({dist[v], v});
        }
      }
    }
  }
  return dist;
}

Outcome planner_oracles() {
  Rng rng(47);

  // A* against Dijkstra on random occupancy with clearance-weighted costs.
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    planner::CanalMask mask;
    mask.nx = 50;
    mask.ny = 50;
    mask.pixel_mm = 1.0;
    mask.navigable.assign(2500, 0);
    for (auto& px : mask.navigable) px = rng.uniform() < 0.75 ? 1 : 0;
    auto clearance = planner::distance_transform(mask);
    auto cost = planner::build_cost_map(mask, clearance, 1.0);

    std::vector<planner::PixelCoord> feasible;
    for (int row = 0; row < 50; ++row)
      for (int col = 0; col < 50; ++col)
        if (cost.feasible[cost.idx(col, row)]) feasible.push_back({col, row});
    if (feasible.size() < 2) continue;
    auto pick = [&] {
      return feasible[static_cast<std::size_t>(rng.uniform() * feasible.size())];
    };
    planner::PixelCoord start = pick(), goal = pick();
    auto dist = dijkstra_all(cost, start);
    double ref = dist[cost.idx(goal.col, goal.row)];
    if (std::isinf(ref)) {
      try {
        planner::astar(cost, start, goal);
        return {false, "A* found a path where Dijkstra saw none"};
      } catch (const NoPathError&) {
        ++compared;
        continue;
      }
    }
    auto path = planner::astar(cost, start, goal);
    double pc = astar_path_cost(cost, path);
    if (std::abs(pc - ref) > 1e-9 * std::max(1.0, ref))
      return {false, fmt("A* cost %.12f vs Dijkstra %.12f", pc, ref)};
    ++compared;
  }
  if (compared < 150) return {false, "too few solvable planner instances"};

  // Exact distance transform against brute force (squared pixel distances).
  for (int trial = 0; trial < 100; ++trial) {
    planner::CanalMask mask;
    mask.nx = 32;
    mask.ny = 32;
    mask.pixel_mm = 1.0;
    mask.navigable.assign(1024, 0);
    for (auto& px : mask.navigable) px = rng.uniform() < 0.8 ? 1 : 0;
    auto edt = planner::distance_transform(mask);
    for (int row = 0; row < 32; ++row) {
      for (int col = 0; col < 32; ++col) {
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        for (int orow = 0; orow < 32; ++orow) {
          for (int ocol = 0; ocol < 32; ++ocol) {
            bool border = orow == 0 || ocol == 0 || orow == 31 || ocol == 31;
            if (!border && mask.at(ocol, orow)) continue;
            std::int64_t dr = orow - row, dc = ocol - col;
            best = std::min(best, dr * dr + dc * dc);
          }
        }
        if (edt.sq_px[mask.idx(col, row)] != best)
          return {false, fmt("EDT mismatch at (%d, %d)", col, row)};
      }
    }
  }

  // Bundled phantom: the planned route keeps its clearance and lands exactly
  // ten equally spaced waypoints.
  const auto& mask = fixtures::phantom_mask();
  auto clearance = planner::distance_transform(mask);
  auto cost = planner::build_cost_map(mask, clearance, 5.0);
  auto start = planner::project_to_feasible(cost, fixtures::phantom_start());
  auto goal = planner::project_to_feasible(cost, fixtures::phantom_goal());
  auto raw = planner::astar(cost, start, goal);
  double min_clear = std::numeric_limits<double>::infinity();
  for (const auto& p : raw)
    min_clear = std::min(min_clear, clearance.mm[mask.idx(p.col, p.row)]);

  auto planned = planner::smooth_resample(raw, mask);
  if (planned.waypoints_mm.size() != 10)
    return {false, fmt("expected 10 waypoints, got %zu",
                       planned.waypoints_mm.size())};
  double wp_clear = std::numeric_limits<double>::infinity();
  for (const auto& wp : planned.waypoints_mm) {
    int col, row;
    mask.mm_to_pixel(wp, col, row);
    wp_clear = std::min(wp_clear, clearance.mm[mask.idx(col, row)]);
  }
  std::vector<double> gaps;
  for (std::size_t i = 1; i < planned.waypoints_mm.size(); ++i)
    gaps.push_back(
        (planned.waypoints_mm[i] - planned.waypoints_mm[i - 1]).norm());
  double gmin = *std::min_element(gaps.begin(), gaps.end());
  double gmax = *std::max_element(gaps.begin(), gaps.end());
  bool even = (gmax - gmin) <= mask.pixel_mm;

  bool ok = min_clear >= 5.0 && wp_clear >= 5.0 && even;
  return {ok, fmt("path clearance >= %.2f mm, waypoint clearance >= %.2f mm, "
                  "gap spread %.4f mm",
                  min_clear, wp_clear, gmax - gmin)};
}

// ---------------------------------------------------------------- criterion 5

Outcome dob_convergence() {
  const double mass = 2e-3;
  dynamics::RobotParams rp;
  const double ct = dynamics::drag_coefficient(20e-3, rp.length, rp.radius);
  const Vec2 d_inj(5e-5, -3e-5);
  const double dt = 1e-3;

  // Fixed gains for this unit check, independent of the shipped defaults.
  control::SmcGains g;
  g.K4 = 2e-4;
  g.eta = 0.06;
  g.phi = 9e-3;
  control::DobState dob;
  control::ReferenceSample ref;  // hold the origin

  Vec2 x = Vec2::Zero(), v = Vec2::Zero();
  double worst_after = 0.0;
  int n = static_cast<int>(std::round(0.4 / dt));
  int settle = static_cast<int>(std::round(5.0 * g.eta / dt));
  for (int k = 0; k < n; ++k) {
    auto out = control::smc_step(x, v, ref, dob, g, Vec2::Zero(), ct, mass, dt,
                                 true);
    if (k >= settle)
      worst_after =
          std::max(worst_after, (out.d_hat - d_inj).norm() / d_inj.norm());
    Vec2 a = (out.force_n + d_inj - ct * v) / mass;
    v += dt * a;
    x += dt * v;
  }
  return {worst_after <= 0.02,
          fmt("max |d_hat - d|/|d| = %.4f after 5*eta = %.2f s", worst_after,
              5.0 * g.eta)};
}

// ---------------------------------------------------------------- criterion 6

Outcome lyapunov_descent() {
  const double mass = 2e-3;
  dynamics::RobotParams rp;
  const double ct = dynamics::drag_coefficient(20e-3, rp.length, rp.radius);
  const Vec2 d(1.2e-4, -0.9e-4);  // per-axis below the switching amplitude
  const double dt = 1e-3;

  // Switching amplitude above the disturbance bound, as the theory asks.
  control::SmcGains g;
  g.K4 = 2e-4;
  g.eta = 0.06;
  g.phi = 9e-3;
  control::DobState dob;
  control::ReferenceSample ref;

  Vec2 x(0.20, -0.15), v = Vec2::Zero();
  double v_prev = std::numeric_limits<double>::infinity();
  double sinf_prev = std::numeric_limits<double>::infinity();
  int settled_at = -1;
  int violations = 0;
  double worst_tail = 0.0;
  const int n = 30000;
  for (int k = 0; k < n; ++k) {
    auto out = control::smc_step(x, v, ref, dob, g, Vec2::Zero(), ct, mass, dt,
                                 false);
    double vv = 0.5 * out.s.squaredNorm();
    double sinf = out.s.cwiseAbs().maxCoeff();
    if (k > 0 && sinf_prev > 3.0 * g.phi && vv > v_prev) ++violations;
    if (settled_at < 0 && sinf <= 3.0 * g.phi) settled_at = k;
    if (settled_at >= 0 && k >= settled_at)
      worst_tail = std::max(worst_tail, out.s.norm());
    v_prev = vv;
    sinf_prev = sinf;
    Vec2 a = (out.force_n + d - ct * v) / mass;
    v += dt * a;
    x += dt * v;
  }
  bool ok = violations == 0 && settled_at >= 0 && worst_tail <= 5.0 * g.phi;
  return {ok, fmt("descent violations=%d, settled at %.2f s, tail |s| <= "
                  "%.4f m (5*phi = %.4f m)",
                  violations, settled_at * dt, worst_tail, 5.0 * g.phi)};
}

// ----------------------------------------------------- criteria 7-11 plumbing

// Mirrors the scenario-file defaults: force gains scaled with viscosity,
// 2% measurement dropout, and a +30% drag model mismatch throughout.
harness::Scenario phantom_scenario(harness::ControllerType ctl, double visc_cp,
                                   double peak_mps) {
  harness::Scenario sc;
  sc.controller = ctl;
  sc.viscosity_cp = visc_cp;
  double vs = visc_cp / 20.0;
  sc.control.smc.K1 *= vs;
  sc.control.smc.K2 *= vs;
  sc.control.smc.K3 *= vs;
  sc.control.smc.K4 *= vs;
  sc.sensor.dropout_prob = 0.02;
  sc.control.ct_model_scale = 1.3;
  if (peak_mps > 0.0) {
    sc.flow.peak_speed_mps = peak_mps;
    sc.flow.profile.waveform = flow::Waveform::kRectifiedSine;
    sc.flow.profile.frequency_hz = 3.0;
  }
  sc.sim.seed = 1;
  return sc;
}

harness::ScenarioStats stats_for(harness::Scenario sc, const std::string& name,
                                 int n_trials = 3) {
  sc.name = name;
  harness::SuiteConfig cfg;
  cfg.name = "acceptance";
  cfg.n_trials = n_trials;
  cfg.scenarios = {sc};
  return harness::run_suite(cfg).scenarios[0];
}

bool all_completed(const harness::ScenarioStats& st) {
  return st.n_completed == st.n_trials;
}

// ---------------------------------------------------------------- criterion 7

Outcome static_ordering() {
  using harness::ControllerType;
  auto smc = stats_for(phantom_scenario(ControllerType::kSmcDob, 20.0, 0.0),
                       "smc20");
  auto pid = stats_for(phantom_scenario(ControllerType::kPid, 20.0, 0.0),
                       "pid20");
  auto mpc = stats_for(phantom_scenario(ControllerType::kMpc, 20.0, 0.0),
                       "mpc20");

  bool order = smc.rmse_mean < pid.rmse_mean && pid.rmse_mean < mpc.rmse_mean;
  bool bound = smc.rmse_mean <= 0.49;
  bool smc_done = all_completed(smc);

  auto smc43 = stats_for(phantom_scenario(ControllerType::kSmcDob, 4.3, 0.0),
                         "smc4p3");
  auto pid43 = stats_for(phantom_scenario(ControllerType::kPid, 4.3, 0.0),
                         "pid4p3");
  auto mpc43 = stats_for(phantom_scenario(ControllerType::kMpc, 4.3, 0.0),
                         "mpc4p3");
  bool smc43_done = all_completed(smc43);

  bool ok = order && bound && smc_done && smc43_done;
  return {ok,
          fmt("20 cP rmse: smc=%.3f pid=%.3f mpc=%.3f mm; 4.3 cP smc %d/%d, "
              "pid %d/%d, mpc %d/%d completed",
              smc.rmse_mean, pid.rmse_mean, mpc.rmse_mean, smc43.n_completed,
              smc43.n_trials, pid43.n_completed, pid43.n_trials,
              mpc43.n_completed, mpc43.n_trials)};
}

// ---------------------------------------------------------------- criterion 8

Outcome moderate_flow() {
  using harness::ControllerType;
  auto smc = stats_for(phantom_scenario(ControllerType::kSmcDob, 20.0, 0.07),
                       "smc_flow7");
  auto pid = stats_for(phantom_scenario(ControllerType::kPid, 20.0, 0.07),
                       "pid_flow7");
  bool ok = smc.rmse_mean < pid.rmse_mean &&
            pid.max_mean >= 2.0 * smc.max_mean && smc.rmse_mean <= 2.0 &&
            all_completed(smc);
  return {ok, fmt("rmse smc=%.3f pid=%.3f mm; peak smc=%.3f pid=%.3f mm "
                  "(ratio %.2f)",
                  smc.rmse_mean, pid.rmse_mean, smc.max_mean, pid.max_mean,
                  pid.max_mean / smc.max_mean)};
}

// ---------------------------------------------------------------- criterion 9

Outcome elevated_flow_retune() {
  using harness::ControllerType;
  harness::Scenario on = phantom_scenario(ControllerType::kSmcDob, 20.0, 0.10);
  on.control.i_max_a = 0.15;  // tight budget the in-region boost relieves
  on.control.retune_enabled = true;
  on.control.retune_region_mm = fixtures::default_disturbance_region();
  harness::Scenario off = on;
  off.control.retune_enabled = false;

  auto st_on = stats_for(on, "retune_on");
  auto st_off = stats_for(off, "retune_off");

  bool ok_on = all_completed(st_on) && st_on.rmse_mean <= 2.0;
  bool off_worse = !all_completed(st_off) ||
                   st_off.rmse_mean >= 1.25 * st_on.rmse_mean;
  return {ok_on && off_worse,
          fmt("retune on: rmse=%.3f mm, %d/%d completed; off: rmse=%.3f mm, "
              "%d/%d completed",
              st_on.rmse_mean, st_on.n_completed, st_on.n_trials,
              st_off.rmse_mean, st_off.n_completed, st_off.n_trials)};
}

// --------------------------------------------------------------- criterion 10

Outcome viscosity_robustness() {
  using harness::ControllerType;
  auto thick = stats_for(phantom_scenario(ControllerType::kSmcDob, 20.0, 0.10),
                         "visc20");
  auto thin = stats_for(phantom_scenario(ControllerType::kSmcDob, 4.3, 0.10),
                        "visc4p3");
  bool ok = all_completed(thick) && all_completed(thin) &&
            thin.rmse_mean > thick.rmse_mean && thin.rmse_mean <= 2.0;
  return {ok, fmt("rmse 4.3 cP=%.3f mm vs 20 cP=%.3f mm, completed %d/%d and "
                  "%d/%d",
                  thin.rmse_mean, thick.rmse_mean, thin.n_completed,
                  thin.n_trials, thick.n_completed, thick.n_trials)};
}

// --------------------------------------------------------------- criterion 11

Outcome dob_ablation() {
  using harness::ControllerType;
  auto with_dob = stats_for(
      phantom_scenario(ControllerType::kSmcDob, 20.0, 0.07), "dob_on");
  auto without = stats_for(
      phantom_scenario(ControllerType::kSmcNoDob, 20.0, 0.07), "dob_off");
  double ratio = without.rmse_mean / with_dob.rmse_mean;
  return {ratio >= 3.0, fmt("rmse without/with observer = %.3f/%.3f mm, "
                            "ratio %.2f (gate 3.0)",
                            without.rmse_mean, with_dob.rmse_mean, ratio)};
}

// --------------------------------------------------------------- criterion 12

Outcome determinism() {
  harness::Scenario sc =
      phantom_scenario(harness::ControllerType::kSmcDob, 20.0, 0.07);
  sc.name = "determinism";
  sc.sensor.dropout_prob = 0.1;
  sc.sim.duration_limit_s = 30.0;

  auto base = std::filesystem::temp_directory_path() / "millibot_acceptance";
  std::filesystem::create_directories(base);
  auto r1 = harness::run_trial(sc);
  auto r2 = harness::run_trial(sc);
  harness::emit_trial((base / "a").string(), sc, r1);
  harness::emit_trial((base / "b").string(), sc, r2);

  for (const char* f : {"steps.csv", "summary.json", "overlay.svg"}) {
    std::string a = read_file((base / "a" / f).string());
    std::string b = read_file((base / "b" / f).string());
    if (a != b || a.empty())
      return {false, fmt("%s differs between identical runs", f)};
  }
  return {true, fmt("two seeded runs, %zu steps, byte-identical artifacts",
                    r1.steps.size())};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* label;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "drag coefficients and dipole pull force", unit_numerics},
      {2, "coil calibration peak field and gradient band", coil_calibration},
      {3, "current allocation against the normal-equations oracle",
       allocation_oracle},
      {4, "planner against Dijkstra/brute-force oracles and fixture clearance",
       planner_oracles},
      {5, "disturbance observer convergence", dob_convergence},
      {6, "sliding surface descent and ultimate bound", lyapunov_descent},
      {7, "static-fluid controller ordering", static_ordering},
      {8, "moderate-flow tracking comparison", moderate_flow},
      {9, "elevated-flow region retune", elevated_flow_retune},
      {10, "viscosity robustness", viscosity_robustness},
      {11, "observer ablation ratio", dob_ablation},
      {12, "byte-identical reruns", determinism},
  };

  int failures = 0;
  for (const auto& e : entries) {
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    std::printf("[%s] criterion %2d: %s: %s\n", o.ok ? "PASS" : "FAIL", e.id,
                e.label, o.detail.c_str());
    std::fflush(stdout);
    if (!o.ok) ++failures;
  }
  if (failures == 0)
    std::printf("all 12 acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria failed\n", failures);
  return failures;
}
