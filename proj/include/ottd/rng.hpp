#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ottd/errors.hpp"

namespace ottd {

// Deterministic RNG. mt19937_64 is fully specified by the standard and the
// derived draws below avoid std::*_distribution, whose output is
// implementation-defined; identical seeds therefore give bit-identical
// streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  // Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Sample an index from an (unnormalized is fine) nonnegative weight vector.
  std::size_t categorical(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) {
      if (x < 0.0) fail(ErrorKind::invalid_input, "categorical: negative weight");
      total += x;
    }
    if (total <= 0.0) fail(ErrorKind::invalid_input, "categorical: zero weight vector");
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      u -= w[i];
      if (u < 0.0) return i;
    }
    return w.size() - 1;
  }

  // Sample from a contiguous slice [begin, begin+n) of a weight array.
  std::size_t categorical(const double* w, std::size_t n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += w[i];
    if (total <= 0.0) fail(ErrorKind::invalid_input, "categorical: zero weight slice");
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      u -= w[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ottd
