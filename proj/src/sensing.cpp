#include "millibot/sensing.hpp"

#include <cmath>

namespace millibot::sensing {

PoseMeasurement measure(const dynamics::RobotState& truth,
                        const SensorConfig& cfg, Rng& rng) {
  double nx = rng.normal();
  double ny = rng.normal();
  double nh = rng.normal();
  double u = rng.uniform();

  PoseMeasurement m;
  m.t = truth.t;
  Vec2 noisy = truth.position * 1000.0 + cfg.sigma_pos_mm * Vec2(nx, ny);
  m.position_mm = Vec2(std::round(noisy.x() / kPixelMm) * kPixelMm,
                       std::round(noisy.y() / kPixelMm) * kPixelMm);
  m.heading = truth.heading + cfg.sigma_heading * nh;
  m.valid = u >= cfg.dropout_prob;
  return m;
}

PoseMeasurement Sensor::sample(const dynamics::RobotState& truth) {
  queue_.push_back(measure(truth, cfg_, rng_));
  if (static_cast<int>(queue_.size()) <= cfg_.latency_samples) {
    PoseMeasurement empty;
    empty.t = truth.t;
    empty.valid = false;
    return empty;
  }
  PoseMeasurement out = queue_.front();
  queue_.pop_front();
  return out;
}

void VelocityEstimator::update(const PoseMeasurement& m) {
  if (!m.valid) return;

  if (has_prev_ && m.t > prev_t_) {
    Vec2 diff = (m.position_mm - prev_pos_mm_) / (m.t - prev_t_);
    velocity_mmps_ = has_prev_diff_ ? Vec2(0.5 * (diff + prev_diff_mmps_)) : diff;
    prev_diff_mmps_ = diff;
    has_prev_diff_ = true;
  }
  prev_pos_mm_ = m.position_mm;
  prev_t_ = m.t;
  has_prev_ = true;

  position_mm_ = m.position_mm;
  heading_ = m.heading;
  has_fix_ = true;
}

}  // namespace millibot::sensing
