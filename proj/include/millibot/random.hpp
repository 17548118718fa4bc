#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace millibot {

// Deterministic noise source. mt19937_64 output is fully specified by the
// standard, and the uniform/normal mappings below are fixed arithmetic, so a
// given seed produces the same stream on every platform. Each normal() call
// consumes exactly two uniforms (no cached spare), which keeps the draw count
// per call site constant.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace millibot
