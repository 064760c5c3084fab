#pragma once

// Native single-qutrit gates: rotations inside the 01 / 12 (and composite 02)
// two-level subspaces, plus the permutation pulses used by the schedules.

#include "qutrit/core.hpp"

#include <array>
#include <string>
#include <string_view>

namespace qutrit {

enum class Subspace { s01, s12, s02 };
enum class Axis { x, y, z };

inline std::string_view to_string(Subspace s) {
  switch (s) {
    case Subspace::s01: return "01";
    case Subspace::s12: return "12";
    case Subspace::s02: return "02";
  }
  return "?";
}

inline std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

inline Subspace parse_subspace(std::string_view s) {
  if (s == "01") return Subspace::s01;
  if (s == "12") return Subspace::s12;
  if (s == "02") return Subspace::s02;
  throw ValidationError("unknown subspace '" + std::string(s) + "'");
}

inline Axis parse_axis(std::string_view s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  throw ValidationError("unknown axis '" + std::string(s) + "'");
}

/// Levels (low, high) spanned by a subspace.
inline std::array<int, 2> subspace_levels(Subspace s) {
  switch (s) {
    case Subspace::s01: return {0, 1};
    case Subspace::s12: return {1, 2};
    case Subspace::s02: return {0, 2};
  }
  return {0, 1};
}

/// Spin-1/2 generator s_axis embedded in a subspace. The 01 and 12 cases are
/// lambda_{1,2,3} and lambda_{6,7}, diag(0,1,-1); 02 uses lambda_{4,5}, diag(1,0,-1).
inline Matrix subspace_generator(Subspace s, Axis a) {
  const auto [lo, hi] = subspace_levels(s);
  Matrix m = Matrix::Zero(3, 3);
  switch (a) {
    case Axis::x: m(lo, hi) = m(hi, lo) = 1.0; break;
    case Axis::y: m(lo, hi) = -kI; m(hi, lo) = kI; break;
    case Axis::z: m(lo, lo) = 1.0; m(hi, hi) = -1.0; break;
  }
  return m;
}

/// theta^k_j = exp(-i theta/2 s_j^k). For x/y axes `phase` rotates the drive
/// axis in the equatorial plane (x -> cos(phase) s_x + sin(phase) s_y), which
/// is how software (virtual) z-rotations re-phase later pulses.
struct SubspaceRotation {
  Subspace subspace = Subspace::s01;
  Axis axis = Axis::x;
  double angle = 0.0;
  double phase = 0.0;

  bool operator==(const SubspaceRotation&) const = default;
};

/// Effective drive phase of an x/y rotation (x is 0, y is pi/2).
inline double drive_phase(const SubspaceRotation& r) { return r.phase + (r.axis == Axis::y ? kPi / 2.0 : 0.0); }

/// Closed form inside the two-level subspace; identity on the untouched level.
inline Matrix rotation_unitary(const SubspaceRotation& r) {
  const auto [lo, hi] = subspace_levels(r.subspace);
  Matrix u = Matrix::Identity(3, 3);
  const double c = std::cos(r.angle / 2.0);
  const double s = std::sin(r.angle / 2.0);
  if (r.axis == Axis::z) {
    u(lo, lo) = std::polar(1.0, -r.angle / 2.0);
    u(hi, hi) = std::polar(1.0, r.angle / 2.0);
    return u;
  }
  const double phi = drive_phase(r);
  u(lo, lo) = c;
  u(hi, hi) = c;
  u(lo, hi) = -kI * s * std::polar(1.0, -phi);
  u(hi, lo) = -kI * s * std::polar(1.0, phi);
  return u;
}

/// exp(-i theta/2 s^{02}_axis) assembled from native 01 / 12 pulses:
/// e^{-i pi/2 s_y^{12}} . theta^{01}_axis . e^{+i pi/2 s_y^{12}}.
/// The outer pulses must be y-axis: with x-axis outer pulses the construction
/// lands on the 02 subspace but swaps x and y (s_x^{01} -> -s_y^{02}).
inline Matrix compose_s02(double theta, Axis axis) {
  if (axis == Axis::z) throw ValidationError("compose_s02 takes an x or y axis");
  const Matrix outer = rotation_unitary({Subspace::s12, Axis::y, kPi, 0.0});
  return outer * rotation_unitary({Subspace::s01, axis, theta, 0.0}) * outer.adjoint();
}

/// The same three-pulse sandwich with x-axis outer pulses, kept for comparison.
inline Matrix compose_s02_x_outer(double theta, Axis axis) {
  if (axis == Axis::z) throw ValidationError("compose_s02 takes an x or y axis");
  const Matrix outer = rotation_unitary({Subspace::s12, Axis::x, kPi, 0.0});
  return outer * rotation_unitary({Subspace::s01, axis, theta, 0.0}) * outer.adjoint();
}

/// Pure permutation pulses (no phases): pi01 and pi12 swap two levels, shift is X.
enum class Permutation { pi01, pi12, shift, shift_dag };

inline std::string_view to_string(Permutation p) {
  switch (p) {
    case Permutation::pi01: return "pi01";
    case Permutation::pi12: return "pi12";
    case Permutation::shift: return "X";
    case Permutation::shift_dag: return "Xdag";
  }
  return "?";
}

inline Permutation parse_permutation(std::string_view s) {
  if (s == "pi01") return Permutation::pi01;
  if (s == "pi12") return Permutation::pi12;
  if (s == "X") return Permutation::shift;
  if (s == "Xdag") return Permutation::shift_dag;
  throw ValidationError("unknown permutation gate '" + std::string(s) + "'");
}

/// Image of each level under the permutation.
inline std::array<int, 3> permutation_map(Permutation p) {
  switch (p) {
    case Permutation::pi01: return {1, 0, 2};
    case Permutation::pi12: return {0, 2, 1};
    case Permutation::shift: return {1, 2, 0};
    case Permutation::shift_dag: return {2, 0, 1};
  }
  return {0, 1, 2};
}

inline Matrix permutation_unitary(Permutation p) {
  const auto map = permutation_map(p);
  Matrix m = Matrix::Zero(3, 3);
  for (int j = 0; j < 3; ++j) m(map[static_cast<std::size_t>(j)], j) = 1.0;
  return m;
}

/// z-rotation angles realising diag(1, e^{i b1}, e^{i b2}) up to global phase,
/// as a lambda_3 rotation followed by a diag(0,1,-1) rotation.
inline std::array<SubspaceRotation, 2> diagonal_phase_as_z(double b1, double b2) {
  const double theta_a = (2.0 * b1 + 2.0 * b2) / 3.0;
  const double theta_b = (4.0 * b2 - 2.0 * b1) / 3.0;
  return {SubspaceRotation{Subspace::s01, Axis::z, theta_a, 0.0}, SubspaceRotation{Subspace::s12, Axis::z, theta_b, 0.0}};
}

}  // namespace qutrit
