#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

namespace bigue {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Wraps any finite angle into [-pi, pi). Every mutator of angular
// coordinates goes through this helper.
inline double wrap_angle(double a) noexcept {
  double r = std::fmod(a + pi, two_pi);
  if (r < 0.0) r += two_pi;
  r -= pi;
  // fmod rounding can land exactly on +pi
  if (r >= pi) r -= two_pi;
  return r;
}

// Wraps into [0, 2pi).
inline double wrap_positive(double a) noexcept {
  double r = std::fmod(a, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r -= two_pi;
  return r;
}

// Signed deviation a - b folded into (-pi, pi].
inline double signed_deviation(double a, double b) noexcept {
  double d = wrap_angle(a - b);
  return d == -pi ? pi : d;
}

// Shorter-arc angle between two directions, in [0, pi].
inline double angular_separation(double a, double b) noexcept {
  double d = std::fabs(wrap_angle(a) - wrap_angle(b));
  return pi - std::fabs(pi - d);
}

// Arc length on the circle of radius n / 2pi.
inline double arc_distance(double a, double b, std::size_t n_vertices) noexcept {
  return static_cast<double>(n_vertices) / two_pi * angular_separation(a, b);
}

}  // namespace bigue
