#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace enose {

/// Seedable Gaussian source with identical streams on every platform:
/// std::mt19937_64 (bit-exact by the standard) feeding 53-bit uniforms and
/// the Box-Muller transform. Must not use std::normal_distribution, whose
/// output is implementation defined.
class PortableRng {
public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in (0, 1).
  auto uniform() -> double {
    const auto bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  auto normal() -> double {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  auto normal(double mean, double stddev) -> double { return mean + stddev * normal(); }

private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace enose
