#include "millibot/control.hpp"

#include <cmath>
#include <numbers>

#include "millibot/errors.hpp"

namespace millibot::control {

Vec2 dob_update(DobState& dob, const Vec2& e_dot, const Vec2& v_robot,
                const Vec2& v_flow, double c_t, double mass, const SmcGains& g,
                double dt) {
  if (g.eta <= 0.0) throw ConfigError("observer time constant must be positive");
  for (int i = 0; i < 2; ++i) {
    double ap = std::exp(-g.Wp(i, i) * dt / g.eta);
    double ar = std::exp(-g.Wr(i, i) * dt / g.eta);
    dob.p(i) += (dob.p(i) - e_dot(i)) * (ap - 1.0);
    dob.r(i) += (dob.r(i) - dob.f_prev(i)) * (ar - 1.0);
  }
  return mass / g.eta * (g.Wp * (dob.p - e_dot)) - c_t * (v_robot + v_flow) -
         dob.r;
}

ControlOutput smc_step(const Vec2& x, const Vec2& v, const ReferenceSample& ref,
                       DobState& dob, const SmcGains& g, const Vec2& v_flow,
                       double c_t, double mass, double dt, bool use_observer) {
  if (g.phi <= 0.0) throw ConfigError("boundary layer must be positive");
  Vec2 e = ref.position - x;
  Vec2 e_dot = ref.velocity - v;

  ControlOutput out;
  out.s = sliding_surface(e, e_dot, g.gamma, g.lambda);
  if (use_observer)
    out.d_hat = dob_update(dob, e_dot, v, v_flow, c_t, mass, g, dt);

  Vec2 u_eq = mass * (g.K3.inverse() * (g.K1 * e_dot + g.K2 * e)) +
              mass * ref.accel - c_t * (v + v_flow);
  Vec2 u_sw{g.K4 * std::tanh(out.s.x() / g.phi),
            g.K4 * std::tanh(out.s.y() / g.phi)};

  out.force_n = -out.d_hat + u_eq + u_sw;
  dob.f_prev = out.force_n;

  double tn = ref.tangent.norm();
  out.field_dir = tn > 0.0 ? Vec2(ref.tangent / tn) : Vec2(1.0, 0.0);
  return out;
}

ControlOutput PidController::step(const Vec2& x, const Vec2& v,
                                  const ReferenceSample& ref, const Vec2& v_flow,
                                  double c_t, double dt) {
  Vec2 e = ref.position - x;
  Vec2 e_dot = ref.velocity - v;

  if (has_prev_) {
    integral_ += dt * 0.5 * (e + prev_e_);
    for (int i = 0; i < 2; ++i)
      integral_(i) = std::clamp(integral_(i), -g_.integral_limit, g_.integral_limit);
  }
  prev_e_ = e;
  has_prev_ = true;

  ControlOutput out;
  out.force_n = g_.Kp * e + g_.Ki * integral_ + g_.Kd * e_dot - c_t * v_flow;
  double th = g_.heading_deg * std::numbers::pi / 180.0;
  out.field_dir = Vec2(std::sin(th), std::cos(th));
  return out;
}

void PidController::reset() {
  integral_.setZero();
  prev_e_.setZero();
  has_prev_ = false;
}

ControlOutput mpc_step(const Vec2& x, const Vec2& v,
                       const std::vector<Vec2>& ref_horizon, const MpcConfig& cfg,
                       const Vec2& v_flow, double c_t, double mass) {
  const int N = cfg.horizon;
  if (N < 1) throw ConfigError("horizon must be at least 1");
  if (static_cast<int>(ref_horizon.size()) != N)
    throw ConfigError("reference horizon length mismatch");
  if (cfg.dt <= 0.0 || mass <= 0.0 || c_t <= 0.0)
    throw ConfigError("mpc needs positive dt, mass and drag");

  // Exact ZOH discretization of m v' = F - c_t v + c_t V per axis:
  //   v+ = a v + (1-a)(F/c_t + V),  x+ = x + b v + (dt - b)(F/c_t + V)
  const double a = std::exp(-c_t * cfg.dt / mass);
  const double b = mass * (1.0 - a) / c_t;
  const double dt = cfg.dt;

  // Position response h[j] to a unit force applied j steps earlier.
  std::vector<double> h(static_cast<std::size_t>(N) + 1, 0.0);
  {
    double px = 0.0, pv = 0.0;
    px = (dt - b) / c_t;  // first interval with F = 1
    pv = (1.0 - a) / c_t;
    h[1] = px;
    for (int j = 2; j <= N; ++j) {
      px += b * pv;
      pv *= a;
      h[static_cast<std::size_t>(j)] = px;
    }
  }

  // Force-free trajectory (flow drag still acts).
  std::vector<Vec2> free(static_cast<std::size_t>(N) + 1);
  free[0] = x;
  Vec2 fv = v;
  for (int k = 1; k <= N; ++k) {
    Vec2 fx = free[static_cast<std::size_t>(k - 1)] + b * fv + (dt - b) * v_flow;
    fv = a * fv + (1.0 - a) * v_flow;
    free[static_cast<std::size_t>(k)] = fx;
  }

  // Condensed least squares over stacked error E = H F + bias.
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * N, 2 * N);
  Eigen::VectorXd bias(2 * N);
  for (int k = 1; k <= N; ++k) {
    Vec2 err = free[static_cast<std::size_t>(k)] - ref_horizon[static_cast<std::size_t>(k - 1)];
    bias.segment<2>(2 * (k - 1)) = err;
    for (int j = 0; j < k; ++j)
      H.block<2, 2>(2 * (k - 1), 2 * j) =
          h[static_cast<std::size_t>(k - j)] * Mat2::Identity();
  }

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2 * N, 2 * N);
  Eigen::MatrixXd Rb = Eigen::MatrixXd::Zero(2 * N, 2 * N);
  for (int k = 0; k < N; ++k) {
    W.block<2, 2>(2 * k, 2 * k) = (k == N - 1) ? cfg.P : cfg.Q;
    Rb.block<2, 2>(2 * k, 2 * k) = cfg.R;
  }

  Eigen::MatrixXd M = H.transpose() * W * H + Rb;
  Eigen::VectorXd rhs = -H.transpose() * W * bias;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw SolveError("mpc normal equations are not positive definite");
  Eigen::VectorXd F = llt.solve(rhs);

  ControlOutput out;
  out.force_n = F.segment<2>(0);
  double th = cfg.heading_deg * std::numbers::pi / 180.0;
  out.field_dir = Vec2(std::sin(th), std::cos(th));
  return out;
}

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;

  // Boundary points count as inside.
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n];
    Vec2 ab = b - a, ap = p - a;
    double len2 = ab.squaredNorm();
    double u = len2 > 0.0 ? std::clamp(ap.dot(ab) / len2, 0.0, 1.0) : 0.0;
    if ((a + u * ab - p).norm() <= 1e-9) return true;
  }

  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    bool crosses = (poly[i].y() > p.y()) != (poly[j].y() > p.y());
    if (!crosses) continue;
    double x_int = poly[j].x() + (poly[i].x() - poly[j].x()) *
                                     (p.y() - poly[j].y()) /
                                     (poly[i].y() - poly[j].y());
    if (p.x() < x_int) inside = !inside;
  }
  return inside;
}

RetuneResult region_retune(const Vec2& position_mm, double i_max, double eta,
                           double phi, const std::vector<Vec2>& region_mm) {
  RetuneResult out{i_max, eta, phi, false};
  if (point_in_polygon(position_mm, region_mm)) {
    out.i_max = i_max * 1.78;
    out.eta = eta * 1.75;
    out.phi = phi * 1.5;
    out.active = true;
  }
  return out;
}

}  // namespace millibot::control
