#include "millibot/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "millibot/errors.hpp"

namespace millibot::dynamics {

double drag_coefficient(double viscosity_pas, double length_m, double radius_m) {
  if (viscosity_pas <= 0.0) throw DomainError("viscosity must be positive");
  if (radius_m <= 0.0) throw DomainError("radius must be positive");
  if (length_m <= radius_m)
    throw DomainError("slender-body drag needs length > radius");
  return 2.0 * std::numbers::pi * viscosity_pas * length_m /
         std::log(length_m / radius_m);
}

RobotState step(const RobotState& state, const Vec2& force_n, const Vec2& field_t,
                const FlowEnv& env, const RobotParams& params, double c_t,
                double dt) {
  if (dt <= 0.0) throw DomainError("dt must be positive");
  if (params.mass <= 0.0) throw DomainError("mass must be positive");
  if (c_t < 0.0) throw DomainError("drag coefficient must be non-negative");

  double h_max = 1e-3;
  if (c_t > 0.0) h_max = std::min(h_max, params.mass / (10.0 * c_t));
  int nsub = std::max(1, static_cast<int>(std::ceil(dt / h_max)));
  double h = dt / nsub;

  RobotState s = state;
  for (int i = 0; i < nsub; ++i) {
    Vec2 v_flow = env.sample(s.position, s.t);
    Vec2 accel = (force_n + drag_force(c_t, v_flow, s.velocity)) / params.mass;
    s.velocity += h * accel;
    s.position += h * s.velocity;
    s.t += h;
  }
  if (field_t.norm() > 0.0) s.heading = std::atan2(field_t.y(), field_t.x());
  return s;
}

}  // namespace millibot::dynamics
