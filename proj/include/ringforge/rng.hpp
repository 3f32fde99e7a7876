#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace ringforge {

// Seedable generator used by all synthetic-data producers. std::mt19937_64 is
// fully specified by the standard, so streams are bit-identical across
// platforms; the uniform mapping and the Box-Muller transform below are our
// own to keep the double streams portable as well (std::normal_distribution
// is implementation-defined).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; one spare value is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Circularly symmetric complex normal with E|z|^2 = 1.
  std::complex<double> complex_gaussian() {
    const double inv_sqrt2 = 0.70710678118654752440;
    return {gaussian() * inv_sqrt2, gaussian() * inv_sqrt2};
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ringforge
