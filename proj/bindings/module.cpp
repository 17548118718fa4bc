#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "millibot/dynamics.hpp"
#include "millibot/fixtures.hpp"
#include "millibot/harness.hpp"
#include "millibot/planner.hpp"
#include "millibot/types.hpp"

namespace py = pybind11;
using namespace millibot;

namespace {

py::dict metrics_dict(const harness::Metrics& m) {
  py::dict d;
  d["rmse_mm"] = m.rmse;
  d["p95_mm"] = m.p95;
  d["max_mm"] = m.max;
  return d;
}

py::dict run_scenario_json(const std::string& scenario_json,
                           const std::string& base_dir) {
  nlohmann::json j = nlohmann::json::parse(scenario_json);
  harness::Scenario sc = harness::scenario_from_json(j, base_dir);
  harness::TrialResult r = harness::run_trial(sc);

  py::dict d = metrics_dict(r.err);
  d["completed"] = r.completed;
  d["failure_reason"] =
      r.failure_reason ? py::object(py::str(*r.failure_reason))
                       : py::object(py::none());
  d["n_steps"] = r.steps.size();
  d["duration_s"] = r.duration_s;
  d["saturated_fraction"] = r.saturated_fraction;
  py::list wps;
  for (const auto& wp : r.waypoints_mm)
    wps.append(py::make_tuple(wp.x(), wp.y()));
  d["waypoints_mm"] = wps;
  return d;
}

std::vector<std::pair<double, double>> plan_default(
    std::pair<int, int> start_px, std::pair<int, int> goal_px) {
  const auto& mask = fixtures::phantom_mask();
  auto clearance = planner::distance_transform(mask);
  auto cost = planner::build_cost_map(mask, clearance);
  planner::PixelCoord s = start_px.first < 0 ? fixtures::phantom_start()
                                             : planner::PixelCoord{start_px.first, start_px.second};
  planner::PixelCoord g = goal_px.first < 0 ? fixtures::phantom_goal()
                                            : planner::PixelCoord{goal_px.first, goal_px.second};
  s = planner::project_to_feasible(cost, s);
  g = planner::project_to_feasible(cost, g);
  auto raw = planner::astar(cost, s, g);
  auto planned = planner::smooth_resample(raw, mask);
  std::vector<std::pair<double, double>> out;
  for (const auto& wp : planned.waypoints_mm)
    out.emplace_back(wp.x(), wp.y());
  return out;
}

py::dict calibrate_default() {
  auto coils = fixtures::default_coil_layout();
  auto rep = fixtures::calibrate_default(coils);
  py::dict d;
  d["gain_scale"] = rep.gain_scale;
  d["peak_b_t"] = rep.peak_b;
  d["peak_gradient_t_per_m"] = rep.peak_gradient;
  d["peak_b_at_m"] = py::make_tuple(rep.peak_b_at.x(), rep.peak_b_at.y());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "magnetic millirobot navigation testbed (native core)";

  m.attr("pixel_pitch_mm") = kPixelMm;

  m.def("drag_coefficient", &dynamics::drag_coefficient,
        py::arg("viscosity_pas"), py::arg("length_m"), py::arg("radius_m"),
        "translational drag coefficient of a slender capsule");

  m.def(
      "metrics",
      [](const std::vector<double>& err) { return metrics_dict(harness::metrics(err)); },
      py::arg("err_mm"), "rmse / interpolated p95 / max of an error series");

  m.def("run_scenario", &run_scenario_json, py::arg("scenario_json"),
        py::arg("base_dir") = std::string(),
        "run one closed-loop trial from a scenario JSON string");

  m.def("plan_default", &plan_default,
        py::arg("start_px") = std::pair<int, int>{-1, -1},
        py::arg("goal_px") = std::pair<int, int>{-1, -1},
        "plan on the bundled phantom; endpoints are projected to feasible "
        "pixels, negative values pick the built-in mission endpoints");

  m.def("calibrate_default", &calibrate_default,
        "calibrate the default coil layout and report the field peaks");
}
