#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "millibot/types.hpp"

namespace millibot::flow {

// Regular node grid in the centered image frame (mm, y up). Node (ix, iy)
// sits at origin + spacing * (ix, iy); storage is row-major in iy.
struct FlowGrid {
  Vec2 origin_mm{0.0, 0.0};  // position of node (0, 0)
  double spacing_mm = 1.0;
  int nx = 0, ny = 0;
  std::vector<double> vx, vy;       // m/s, steady-state peak pattern
  std::vector<std::uint8_t> lumen;  // 1 inside the channel, 0 in wall

  std::size_t idx(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(ix);
  }
};

enum class Waveform { kConstant, kRectifiedSine };

struct PulsatileProfile {
  Waveform waveform = Waveform::kConstant;
  double frequency_hz = 3.0;
  double phase = 0.0;  // rad, added inside the sine argument
};

// Scalar modulation g(t) multiplying the steady pattern.
double modulation(const PulsatileProfile& profile, double t);

// Time average of g over one period (1 for constant, 2/pi for the rectified
// sine). Controllers plan against mean flow, the plant sees g(t).
double mean_modulation(const PulsatileProfile& profile);

struct FlowSampleResult {
  Vec2 velocity{0.0, 0.0};  // m/s
  bool inside = false;
};

// Bilinear velocity at a point (mm). Points outside the grid hull or whose
// nearest node is wall report inside=false and zero velocity.
FlowSampleResult sample_flow(const FlowGrid& grid, const PulsatileProfile& profile,
                             const Vec2& point_mm, double t);

struct JetInlet {
  Vec2 center_mm{0.0, 0.0};
  Vec2 direction{1.0, 0.0};  // need not be normalized
  double width_mm = 3.0;     // lateral Gaussian width
  double amplitude = 1.0;    // relative strength before rescaling
};

// Closed recirculation cell. Tangential speed rises linearly through the
// core, peaks at `amplitude` on the r = radius ring and decays outside it
// (Lamb-Oseen style), counterclockwise for positive amplitude.
struct Recirculation {
  Vec2 center_mm{0.0, 0.0};
  double radius_mm = 6.0;
  double amplitude = 1.0;
};

struct SynthGeometry {
  Vec2 origin_mm{-46.0, -46.0};
  double spacing_mm = 1.0;
  int nx = 93, ny = 93;
  double decay_mm = 25.0;  // downstream e-folding length
  std::vector<JetInlet> inlets;
  std::vector<Recirculation> recircs;  // optional separation cells
  // Optional lumen override (row-major, nx*ny). Empty means a rectangular
  // chamber whose outermost node ring is wall.
  std::vector<std::uint8_t> lumen;
};

// Superposed decaying jets, clipped to the lumen, projected tangent to the
// wall at boundary nodes, then rescaled so the largest speed equals
// peak_speed exactly.
FlowGrid synth_jet_flow(double peak_speed_mps, const SynthGeometry& geom);

FlowGrid load_flow_csv(const std::string& path);
void save_flow_csv(const std::string& path, const FlowGrid& grid);

}  // namespace millibot::flow
