#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ttkit/geometry.hpp"

namespace ttkit {

/// Deterministic random source. Distribution shaping is done by hand so that
/// streams depend only on the seed, not on the standard library in use.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double canonical() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * canonical(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  double normal() {
    // Box-Muller; one value per call keeps the stream simple.
    const double u = std::max(canonical(), 1e-300);
    const double v = canonical();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(two_pi * v);
  }

  Vec3 unit_vector() {
    Vec3 v{normal(), normal(), normal()};
    const double n = v.norm();
    return n > 0 ? Vec3(v / n) : Vec3(1, 0, 0);
  }

  Vec3 in_box(const Vec3& lo, const Vec3& hi) {
    return {uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z())};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ttkit
