#pragma once

#include <vector>

#include "millibot/coilfield.hpp"
#include "millibot/flow.hpp"
#include "millibot/planner.hpp"
#include "millibot/types.hpp"

namespace millibot::fixtures {

// Ring of eight identical 50 mm loops, 0.11 m from the workspace center at
// 45 degree spacing starting from +y and running clockwise, axes pointing
// inward: [N, NE, E, SE, S, SW, W, NW]. Gains are nominal; run
// calibrate_default() to hit the bench field strength.
std::vector<coilfield::CoilModel> default_coil_layout();

// Drives the north coil at 1 A and scales the shared gain so the in-plane
// peak equals 24.05 mT.
coilfield::CalibrationReport calibrate_default(std::vector<coilfield::CoilModel>& coils);

// 1020 x 1020 binary mask of the test phantom: a curved channel swept from a
// spline, wide at both ends with a narrowed mid-section. Built once per
// process and cached.
const planner::CanalMask& phantom_mask();

// Inlet jets for the phantom lumen; peak speed in m/s. The two jets merge
// near the narrowed section, which is where the disturbance region sits.
// With `recirculation` set, a separation cell forms between the jets, the
// way thin working fluids behave at the same pump rate (higher Reynolds
// number); thick fluids stay attached and the cell is absent.
flow::FlowGrid phantom_flow(double peak_speed_mps, bool recirculation = false);

// Default mission endpoints (pixels) and the disturbance region polygon (mm).
planner::PixelCoord phantom_start();
planner::PixelCoord phantom_goal();
std::vector<Vec2> default_disturbance_region();

}  // namespace millibot::fixtures
