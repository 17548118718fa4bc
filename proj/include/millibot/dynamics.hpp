#pragma once

#include <optional>

#include "millibot/flow.hpp"
#include "millibot/types.hpp"

namespace millibot::dynamics {

struct RobotParams {
  double mass = 5e-5;            // kg, effective translational inertia
  double length = 7.40e-3;       // m
  double radius = 1.40e-3;       // m
  double dipole_moment = 8.60e-4;  // A*m^2
  std::optional<double> c_t_override;  // N*s/m, replaces the slender-body value
};

struct RobotState {
  Vec2 position{0.0, 0.0};  // m
  Vec2 velocity{0.0, 0.0};  // m/s
  double heading = 0.0;     // rad, body axis from +x
  double t = 0.0;           // s
};

// Slender-body translational drag: c_t = 2*pi*mu*L / ln(L/r), mu in Pa*s.
double drag_coefficient(double viscosity_pas, double length_m, double radius_m);

inline Vec2 drag_force(double c_t, const Vec2& v_flow, const Vec2& v_robot) {
  return c_t * (v_flow - v_robot);
}

// World-frame view of a flow grid (grid lives in mm, dynamics in m).
struct FlowEnv {
  const flow::FlowGrid* grid = nullptr;
  flow::PulsatileProfile profile;
  double sign = 1.0;  // flips the whole flow field when set to -1

  Vec2 sample(const Vec2& position_m, double t) const {
    if (!grid) return Vec2::Zero();
    auto s = flow::sample_flow(*grid, profile, position_m * 1000.0, t);
    return sign * s.velocity;
  }
};

// Advances one actuation interval dt under constant applied force and field.
// Interval is split into substeps no longer than min(1 ms, m/(10 c_t)) and
// integrated with semi-implicit Euler; the heading snaps to the applied field
// direction (magnetic alignment is much faster than translation).
RobotState step(const RobotState& state, const Vec2& force_n, const Vec2& field_t,
                const FlowEnv& env, const RobotParams& params, double c_t,
                double dt);

}  // namespace millibot::dynamics
