#include "millibot/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace millibot::fixtures {

std::vector<coilfield::CoilModel> default_coil_layout() {
  const double d = 0.11;
  std::vector<coilfield::CoilModel> coils;
  for (int u = 0; u < 8; ++u) {
    double ang = std::numbers::pi / 2.0 - u * std::numbers::pi / 4.0;
    Vec2 dir(std::cos(ang), std::sin(ang));
    coilfield::CoilModel c;
    c.center = d * dir;
    c.axis = -dir;
    c.loop_radius = 0.05;
    c.calibration_gain = 1e-3;
    c.max_current = 8.0;
    coils.push_back(c);
  }
  return coils;
}

coilfield::CalibrationReport calibrate_default(
    std::vector<coilfield::CoilModel>& coils) {
  coilfield::ReferenceActivation act;
  act.driven = {{0, 1.0}};
  return coilfield::calibrate(coils, act);
}

namespace {

struct SplineNode {
  Vec2 p;      // mm, centered frame
  double r;    // tube radius, mm
};

// Channel centerline: down the left side, through a narrowed bend at the
// bottom, back up the right side.
const SplineNode kCenterline[] = {
    {{-26.0, 34.0}, 11.0}, {{-28.0, 14.0}, 11.0}, {{-23.0, -4.0}, 8.0},
    {{-10.0, -15.0}, 7.5}, {{6.0, -18.0}, 10.0},  {{19.0, -10.0}, 10.0},
    {{24.0, 6.0}, 9.0},    {{24.0, 26.0}, 9.0}};

Vec2 catmull_rom(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p3,
                 double t) {
  double t2 = t * t, t3 = t2 * t;
  return 0.5 * (2.0 * p1 + (p2 - p0) * t +
                (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3);
}

planner::CanalMask build_phantom_mask() {
  planner::CanalMask mask;
  mask.nx = 1020;
  mask.ny = 1020;
  mask.navigable.assign(static_cast<std::size_t>(mask.nx) * mask.ny, 0);

  const int n = static_cast<int>(std::size(kCenterline));
  auto node = [&](int i) { return kCenterline[std::clamp(i, 0, n - 1)]; };

  for (int seg = 0; seg + 1 < n; ++seg) {
    const Vec2 p0 = node(seg - 1).p, p1 = node(seg).p, p2 = node(seg + 1).p,
               p3 = node(seg + 2).p;
    double seg_len = (p2 - p1).norm();
    int steps = std::max(8, static_cast<int>(seg_len / 0.5));
    for (int i = 0; i <= steps; ++i) {
      double t = static_cast<double>(i) / steps;
      Vec2 c = catmull_rom(p0, p1, p2, p3, t);
      double r = node(seg).r + t * (node(seg + 1).r - node(seg).r);

      double r_px = r / mask.pixel_mm;
      double cx = c.x() / mask.pixel_mm + (mask.nx - 1) / 2.0;
      double cy = (mask.ny - 1) / 2.0 - c.y() / mask.pixel_mm;
      int col0 = std::max(0, static_cast<int>(std::floor(cx - r_px)));
      int col1 = std::min(mask.nx - 1, static_cast<int>(std::ceil(cx + r_px)));
      int row0 = std::max(0, static_cast<int>(std::floor(cy - r_px)));
      int row1 = std::min(mask.ny - 1, static_cast<int>(std::ceil(cy + r_px)));
      double r2 = r_px * r_px;
      for (int row = row0; row <= row1; ++row) {
        double dy = row - cy;
        for (int col = col0; col <= col1; ++col) {
          double dx = col - cx;
          if (dx * dx + dy * dy <= r2) mask.navigable[mask.idx(col, row)] = 1;
        }
      }
    }
  }
  return mask;
}

}  // namespace

const planner::CanalMask& phantom_mask() {
  static const planner::CanalMask mask = build_phantom_mask();
  return mask;
}

flow::FlowGrid phantom_flow(double peak_speed_mps, bool recirculation) {
  const auto& mask = phantom_mask();

  flow::SynthGeometry geom;
  geom.origin_mm = Vec2(-46.0, -46.0);
  geom.spacing_mm = 1.0;
  geom.nx = 93;
  geom.ny = 93;
  geom.decay_mm = 25.0;

  geom.lumen.assign(static_cast<std::size_t>(geom.nx) * geom.ny, 0);
  for (int iy = 0; iy < geom.ny; ++iy) {
    for (int ix = 0; ix < geom.nx; ++ix) {
      Vec2 p = geom.origin_mm + geom.spacing_mm * Vec2(ix, iy);
      int col, row;
      mask.mm_to_pixel(p, col, row);
      if (col >= 0 && row >= 0 && col < mask.nx && row < mask.ny &&
          mask.at(col, row))
        geom.lumen[static_cast<std::size_t>(iy) * geom.nx + ix] = 1;
    }
  }

  flow::JetInlet side;  // enters high on the left wall, aims at the bend
  side.center_mm = Vec2(-27.0, 6.0);
  side.direction = Vec2(0.63, -0.78);
  side.width_mm = 3.0;
  side.amplitude = 0.8;

  flow::JetInlet main;  // regurgitant jet across the narrowed section
  main.center_mm = Vec2(-18.0, -8.0);
  main.direction = Vec2(0.92, -0.38);
  main.width_mm = 3.5;
  main.amplitude = 1.0;

  geom.inlets = {side, main};

  if (recirculation) {
    // Separation cell between the jets; forms when the working fluid is thin
    // enough for the merged jet to detach at the bend.
    flow::Recirculation cell;
    cell.center_mm = Vec2(-22.0, 0.0);
    cell.radius_mm = 7.0;
    cell.amplitude = 1.6;
    geom.recircs = {cell};
  }

  return flow::synth_jet_flow(peak_speed_mps, geom);
}

planner::PixelCoord phantom_start() {
  const auto& mask = phantom_mask();
  int col, row;
  mask.mm_to_pixel(Vec2(-26.0, 34.0), col, row);
  return {col, row};
}

planner::PixelCoord phantom_goal() {
  const auto& mask = phantom_mask();
  int col, row;
  mask.mm_to_pixel(Vec2(24.0, 26.0), col, row);
  return {col, row};
}

std::vector<Vec2> default_disturbance_region() {
  return {Vec2(-46.0, -10.0), Vec2(46.0, -10.0), Vec2(46.0, 0.0),
          Vec2(-46.0, 0.0)};
}

}  // namespace millibot::fixtures
