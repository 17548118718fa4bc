#include "millibot/coilfield.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "millibot/errors.hpp"
#include "millibot/text.hpp"

namespace millibot::coilfield {

FieldSample unit_field(const CoilModel& coil, const Vec2& point) {
  const Vec2 d = point - coil.center;
  const double r = d.norm();
  if (r < coil.loop_radius / 100.0)
    throw SingularityError("field evaluated inside coil core");

  const Vec2 a = coil.axis.normalized();
  const double k = coil.calibration_gain * coil.loop_radius * coil.loop_radius / 2.0;
  const double r2 = r * r;
  const double r3 = r2 * r;
  const double r5 = r3 * r2;
  const double r7 = r5 * r2;
  const double ad = a.dot(d);

  FieldSample out;
  out.B = k * (3.0 * d * ad / r5 - a / r3);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double dij = (i == j) ? 1.0 : 0.0;
      out.grad(i, j) =
          k * (3.0 * (dij * ad + d(i) * a(j) + a(i) * d(j)) / r5 -
               15.0 * d(i) * ad * d(j) / r7);
    }
  }
  return out;
}

FieldSample superpose(const std::vector<CoilModel>& coils,
                      const std::array<double, 8>& currents,
                      const Vec2& point) {
  FieldSample total;
  for (std::size_t i = 0; i < coils.size() && i < currents.size(); ++i) {
    FieldSample s = unit_field(coils[i], point);
    total.B += currents[i] * s.B;
    total.grad += currents[i] * s.grad;
  }
  return total;
}

std::pair<Vec2, double> force_torque(const Vec2& dipole, const FieldSample& field) {
  Vec2 force = field.grad.transpose() * dipole;
  double torque = dipole.x() * field.B.y() - dipole.y() * field.B.x();
  return {force, torque};
}

ActuationMatrix assemble_actuation(const std::vector<CoilModel>& coils,
                                   const Vec2& dipole, const Vec2& point,
                                   double omega_o) {
  if (coils.size() != 8)
    throw ConfigError("actuation matrix expects 8 coils, got " +
                      std::to_string(coils.size()));
  ActuationMatrix am;
  am.omega_o = omega_o;
  for (int i = 0; i < 8; ++i) {
    FieldSample s = unit_field(coils[static_cast<std::size_t>(i)], point);
    Vec2 f = s.grad.transpose() * dipole;
    am.A(0, i) = f.x();
    am.A(1, i) = f.y();
    am.A(2, i) = omega_o * s.B.x();
    am.A(3, i) = omega_o * s.B.y();
  }
  return am;
}

AllocationResult allocate_currents(const ActuationMatrix& am, const Vec4& C,
                                   double i_max) {
  if (i_max <= 0.0) throw ConfigError("i_max must be positive");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(am.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-10 * sv(0);

  Eigen::Vector4d y = svd.matrixU().transpose() * C;
  for (int i = 0; i < sv.size(); ++i)
    y(i) = (sv(i) > cutoff) ? y(i) / sv(i) : 0.0;
  Eigen::Matrix<double, 8, 1> I = svd.matrixV() * y;

  AllocationResult out;
  double peak = I.cwiseAbs().maxCoeff();
  if (peak > i_max) {
    out.saturated = true;
    out.scale = i_max / peak;
    I *= out.scale;
  }
  for (int i = 0; i < 8; ++i) out.currents[static_cast<std::size_t>(i)] = I(i);
  return out;
}

CalibrationReport calibrate(std::vector<CoilModel>& coils,
                            const ReferenceActivation& activation) {
  if (activation.driven.empty())
    throw CalibrationError("no coils driven in reference activation");
  std::array<double, 8> currents{};
  for (auto [idx, amps] : activation.driven) {
    if (idx < 0 || idx >= static_cast<int>(coils.size()))
      throw CalibrationError("driven coil index out of range");
    currents[static_cast<std::size_t>(idx)] = amps;
  }

  const int n = activation.grid_n;
  const double half = activation.workspace_half;
  const double step = 2.0 * half / (n - 1);

  CalibrationReport rep;
  double peak_b = 0.0, peak_g = 0.0;
  Vec2 at_b{0, 0}, at_g{0, 0};
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      Vec2 p{-half + ix * step, -half + iy * step};
      FieldSample s = superpose(coils, currents, p);
      double b = s.B.norm();
      double g = s.grad.cwiseAbs().maxCoeff();
      if (b > peak_b) { peak_b = b; at_b = p; }
      if (g > peak_g) { peak_g = g; at_g = p; }
    }
  }
  if (peak_b <= 0.0) throw CalibrationError("driven activation produces no field");

  double scale = activation.target_peak_b / peak_b;
  if (scale < 1e-9 || scale > 1e9)
    throw CalibrationError("gain scale " + format_double(scale) + " out of bounds");
  for (auto& c : coils) c.calibration_gain *= scale;

  rep.gain_scale = scale;
  rep.peak_b = peak_b * scale;
  rep.peak_gradient = peak_g * scale;
  rep.peak_b_at = at_b;
  rep.peak_gradient_at = at_g;
  return rep;
}

void save_coils_json(const std::string& path,
                     const std::vector<CoilModel>& coils, double omega_o) {
  nlohmann::ordered_json root;
  root["omega_o"] = omega_o;
  root["coils"] = nlohmann::ordered_json::array();
  for (const auto& c : coils) {
    nlohmann::ordered_json j;
    j["center_m"] = {c.center.x(), c.center.y()};
    j["axis"] = {c.axis.x(), c.axis.y()};
    j["loop_radius_m"] = c.loop_radius;
    j["calibration_gain"] = c.calibration_gain;
    j["max_current_a"] = c.max_current;
    root["coils"].push_back(j);
  }
  write_file(path, root.dump(2) + "\n");
}

std::pair<std::vector<CoilModel>, double> load_coils_json(const std::string& path) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("coil file: ") + e.what());
  }
  try {
    double omega_o = root.at("omega_o").get<double>();
    std::vector<CoilModel> coils;
    for (const auto& j : root.at("coils")) {
      CoilModel c;
      c.center = Vec2(j.at("center_m")[0].get<double>(), j.at("center_m")[1].get<double>());
      c.axis = Vec2(j.at("axis")[0].get<double>(), j.at("axis")[1].get<double>());
      c.loop_radius = j.at("loop_radius_m").get<double>();
      c.calibration_gain = j.at("calibration_gain").get<double>();
      c.max_current = j.at("max_current_a").get<double>();
      coils.push_back(c);
    }
    return {coils, omega_o};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("coil file: ") + e.what());
  }
}

}  // namespace millibot::coilfield
