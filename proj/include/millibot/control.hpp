#pragma once

#include <vector>

#include "millibot/types.hpp"

namespace millibot::control {

// Reference sample in SI units (m, m/s, m/s^2).
struct ReferenceSample {
  Vec2 position{0.0, 0.0};
  Vec2 velocity{0.0, 0.0};
  Vec2 accel{0.0, 0.0};
  Vec2 tangent{1.0, 0.0};
};

struct ControlOutput {
  Vec2 force_n{0.0, 0.0};    // desired force before allocation
  Vec2 field_dir{1.0, 0.0};  // unit direction for the alignment field
  Vec2 s{0.0, 0.0};          // sliding surface (zero for PID/MPC)
  Vec2 d_hat{0.0, 0.0};      // disturbance estimate (zero when observer off)
};

inline Vec2 sliding_surface(const Vec2& e, const Vec2& e_dot, double gamma,
                            double lambda) {
  return gamma * e_dot + lambda * e;
}

struct SmcGains {
  double gamma = 2.0;
  double lambda = 1.0;
  Mat2 K1 = 2.0 * Mat2::Identity();  // 1/s
  Mat2 K2 = Mat2::Identity();        // 1/s^2
  Mat2 K3 = Mat2::Identity();
  double K4 = 1e-4;   // N, switching amplitude
  double eta = 0.15;  // s, observer time constant
  double phi = 0.27;  // m, boundary layer
  Mat2 Wp = 3.0 * Mat2::Identity();  // diagonal observer weights
  Mat2 Wr = Mat2::Identity();
};

// First-order observer filter states. p tracks the velocity error, r the
// commanded force; both relax with time constant eta over their weights.
struct DobState {
  Vec2 p{0.0, 0.0};
  Vec2 r{0.0, 0.0};
  Vec2 f_prev{0.0, 0.0};
};

// Advances the filters by dt (exact exponential discretization, diagonal
// weights) and returns the disturbance estimate
//   d_hat = m/eta * Wp (p - e_dot) - c_t (v + v_flow) - r.
Vec2 dob_update(DobState& dob, const Vec2& e_dot, const Vec2& v_robot,
                const Vec2& v_flow, double c_t, double mass, const SmcGains& g,
                double dt);

// Boundary-layer sliding-mode step with optional observer compensation:
//   F = -d_hat + m K3^{-1}(K1 e_dot + K2 e) + m a_ref - c_t (v + v_flow)
//       + K4 tanh(s / phi)
// The alignment field points along the reference tangent.
ControlOutput smc_step(const Vec2& x, const Vec2& v, const ReferenceSample& ref,
                       DobState& dob, const SmcGains& g, const Vec2& v_flow,
                       double c_t, double mass, double dt, bool use_observer);

struct PidGains {
  Mat2 Kp = 5e-3 * Mat2::Identity();
  Mat2 Ki = 2e-4 * Mat2::Identity();
  Mat2 Kd = 8e-4 * Mat2::Identity();
  double integral_limit = 5e-2;   // m*s clamp per axis
  double heading_deg = 45.0;      // fixed alignment field direction
};

class PidController {
 public:
  explicit PidController(const PidGains& g) : g_(g) {}

  // Trapezoidal integral with per-axis clamping; feedforward cancels the
  // mean-flow drag. The alignment field is fixed at heading_deg from +y.
  ControlOutput step(const Vec2& x, const Vec2& v, const ReferenceSample& ref,
                     const Vec2& v_flow, double c_t, double dt);

  void reset();
  const Vec2& integral() const { return integral_; }

 private:
  PidGains g_;
  Vec2 integral_{0.0, 0.0};
  Vec2 prev_e_{0.0, 0.0};
  bool has_prev_ = false;
};

struct MpcConfig {
  int horizon = 20;
  double dt = 0.04;  // s, internal prediction step
  Mat2 Q = 5e3 * Mat2::Identity();
  Mat2 R = 1e10 * Mat2::Identity();
  Mat2 P = 1e4 * Mat2::Identity();
  double heading_deg = 45.0;
};

// Condensed finite-horizon tracking regulator over the drag model
//   m dv/dt = F + c_t (V - v),
// discretized exactly under zero-order hold. Returns the first move of
//   min sum_{k=1..N-1} e_k'Q e_k + e_N'P e_N + sum_{k=0..N-1} F_k'R F_k.
// ref_horizon must contain N positions (m) for k = 1..N.
ControlOutput mpc_step(const Vec2& x, const Vec2& v,
                       const std::vector<Vec2>& ref_horizon, const MpcConfig& cfg,
                       const Vec2& v_flow, double c_t, double mass);

// Even-odd ray crossing with points on the boundary counted inside.
bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly);

struct RetuneResult {
  double i_max;
  double eta;
  double phi;
  bool active = false;
};

// Inside the disturbance region the current budget and sliding-mode
// smoothing open up: i_max *1.78, eta *1.75, phi *1.5.
RetuneResult region_retune(const Vec2& position_mm, double i_max, double eta,
                           double phi, const std::vector<Vec2>& region_mm);

}  // namespace millibot::control
