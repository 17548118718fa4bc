#pragma once

#include <Eigen/Dense>

namespace millibot {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec4 = Eigen::Vector4d;

// Camera frame: 1020 px across a 92 mm field of view.
inline constexpr double kPixelMm = 92.0 / 1020.0;

}  // namespace millibot
