#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "millibot/types.hpp"

namespace millibot::coilfield {

// One circular coil, reduced to a point dipole on its axis. calibration_gain
// carries the wire turns and amplifier constant in one number (T*m per A).
struct CoilModel {
  Vec2 center{0.0, 0.0};        // m, workspace frame
  Vec2 axis{1.0, 0.0};          // unit vector, points into the workspace
  double loop_radius = 0.05;    // m
  double calibration_gain = 1e-3;  // T*m / A
  double max_current = 8.0;     // A, hardware limit of the driver
};

// In-plane field and its spatial gradient. grad(i, j) = dB_i / dx_j and is
// symmetric for any superposition of dipole coils (curl-free field).
struct FieldSample {
  Vec2 B{0.0, 0.0};  // T
  Mat2 grad = Mat2::Zero();  // T/m
};

// Field per unit current at `point`. Throws SingularityError within
// loop_radius/100 of the coil center.
FieldSample unit_field(const CoilModel& coil, const Vec2& point);

FieldSample superpose(const std::vector<CoilModel>& coils,
                      const std::array<double, 8>& currents,
                      const Vec2& point);

// Force on and torque about a dipole `m` (A*m^2) sitting in `field`.
// F = grad^T m, tau = m x B (out-of-plane scalar).
std::pair<Vec2, double> force_torque(const Vec2& dipole, const FieldSample& field);

// Rows: [F_x, F_y, omega_o*B_x, omega_o*B_y] per unit current of each coil.
struct ActuationMatrix {
  Eigen::Matrix<double, 4, 8> A;
  double omega_o = 1.0;
};

ActuationMatrix assemble_actuation(const std::vector<CoilModel>& coils,
                                   const Vec2& dipole, const Vec2& point,
                                   double omega_o = 1.0);

struct AllocationResult {
  std::array<double, 8> currents{};
  bool saturated = false;
  double scale = 1.0;  // uniform factor applied to honor the current limit
};

// Minimum-norm currents reproducing the commanded wrench/field vector
// C = [F_x, F_y, omega_o*B_x, omega_o*B_y], via SVD pseudoinverse with
// singular values below 1e-10 * sigma_max treated as zero. If any |I_i|
// exceeds i_max the whole vector is scaled down uniformly, preserving the
// direction of C.
AllocationResult allocate_currents(const ActuationMatrix& am, const Vec4& C,
                                   double i_max);

struct ReferenceActivation {
  std::vector<std::pair<int, double>> driven;  // (coil index, current A)
  double target_peak_b = 24.05e-3;             // T
  double workspace_half = 0.046;               // m, evaluation square
  int grid_n = 93;                             // samples per side
};

struct CalibrationReport {
  double gain_scale = 1.0;      // factor applied to every coil gain
  double peak_b = 0.0;          // T, after scaling
  double peak_gradient = 0.0;   // T/m, after scaling (largest |grad| entry)
  Vec2 peak_b_at{0.0, 0.0};
  Vec2 peak_gradient_at{0.0, 0.0};
};

// Scales the shared gain so the driven activation's peak in-workspace |B|
// equals target_peak_b. Throws CalibrationError if nothing is driven, the
// peak is zero, or the needed scale leaves [1e-9, 1e9].
CalibrationReport calibrate(std::vector<CoilModel>& coils,
                            const ReferenceActivation& activation);

void save_coils_json(const std::string& path,
                     const std::vector<CoilModel>& coils, double omega_o);
std::pair<std::vector<CoilModel>, double> load_coils_json(const std::string& path);

}  // namespace millibot::coilfield
