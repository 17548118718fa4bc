#pragma once

#include <cstdint>
#include <deque>

#include "millibot/dynamics.hpp"
#include "millibot/random.hpp"
#include "millibot/types.hpp"

namespace millibot::sensing {

struct PoseMeasurement {
  Vec2 position_mm{0.0, 0.0};  // quantized to the pixel lattice
  double heading = 0.0;        // rad, not quantized
  double t = 0.0;
  bool valid = true;
};

struct SensorConfig {
  double rate_hz = 10.0;
  double sigma_pos_mm = 0.09;    // ~1 px
  double sigma_heading = 0.02;   // rad
  double dropout_prob = 0.0;
  int latency_samples = 0;
  std::uint64_t seed = 0;
};

// Noisy, pixel-quantized pose. Always draws the same number of random
// variates (three normals, one uniform) so the stream stays aligned whether
// or not a frame drops.
PoseMeasurement measure(const dynamics::RobotState& truth,
                        const SensorConfig& cfg, Rng& rng);

// Clocked camera front-end: applies measure() each tick and delays delivery
// by latency_samples ticks. Until the pipeline fills, frames are invalid.
class Sensor {
 public:
  explicit Sensor(const SensorConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  PoseMeasurement sample(const dynamics::RobotState& truth);

 private:
  SensorConfig cfg_;
  Rng rng_;
  std::deque<PoseMeasurement> queue_;
};

// Position/velocity estimates from the measurement stream: first differences
// of consecutive valid frames, smoothed with a two-sample moving average.
// Dropped frames hold the previous estimate.
class VelocityEstimator {
 public:
  void update(const PoseMeasurement& m);

  bool has_fix() const { return has_fix_; }
  Vec2 position_mm() const { return position_mm_; }
  Vec2 velocity_mmps() const { return velocity_mmps_; }
  Vec2 position_m() const { return position_mm_ / 1000.0; }
  Vec2 velocity_mps() const { return velocity_mmps_ / 1000.0; }
  double heading() const { return heading_; }

 private:
  bool has_fix_ = false;
  bool has_prev_ = false;
  bool has_prev_diff_ = false;
  Vec2 position_mm_{0.0, 0.0};
  Vec2 velocity_mmps_{0.0, 0.0};
  double heading_ = 0.0;
  Vec2 prev_pos_mm_{0.0, 0.0};
  double prev_t_ = 0.0;
  Vec2 prev_diff_mmps_{0.0, 0.0};
};

}  // namespace millibot::sensing
