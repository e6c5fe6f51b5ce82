#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace transmon {

/// Native single-qubit pulses. Rotations are exp(-i theta sigma/2) about the
/// named axis.
enum class PhysicalGate { I, X_pi, X_pi2, X_mpi2, Y_pi, Y_pi2, Y_mpi2 };

inline constexpr std::array<PhysicalGate, 7> kAllPhysicalGates = {
    PhysicalGate::I,     PhysicalGate::X_pi,  PhysicalGate::X_pi2, PhysicalGate::X_mpi2,
    PhysicalGate::Y_pi,  PhysicalGate::Y_pi2, PhysicalGate::Y_mpi2};

struct GateRotation {
  double angle;  // rad, signed
  double phase;  // drive phase: 0 for X, pi/2 for Y
};

inline GateRotation rotation_of(PhysicalGate g) {
  constexpr double pi = 3.14159265358979323846;
  switch (g) {
  case PhysicalGate::I: return {0.0, 0.0};
  case PhysicalGate::X_pi: return {pi, 0.0};
  case PhysicalGate::X_pi2: return {pi / 2, 0.0};
  case PhysicalGate::X_mpi2: return {-pi / 2, 0.0};
  case PhysicalGate::Y_pi: return {pi, pi / 2};
  case PhysicalGate::Y_pi2: return {pi / 2, pi / 2};
  case PhysicalGate::Y_mpi2: return {-pi / 2, pi / 2};
  }
  return {0.0, 0.0};
}

inline std::string_view to_string(PhysicalGate g) {
  switch (g) {
  case PhysicalGate::I: return "I";
  case PhysicalGate::X_pi: return "X_pi";
  case PhysicalGate::X_pi2: return "X_pi/2";
  case PhysicalGate::X_mpi2: return "X_-pi/2";
  case PhysicalGate::Y_pi: return "Y_pi";
  case PhysicalGate::Y_pi2: return "Y_pi/2";
  case PhysicalGate::Y_mpi2: return "Y_-pi/2";
  }
  return "?";
}

inline PhysicalGate gate_from_string(std::string_view s) {
  for (auto g : kAllPhysicalGates) {
    if (to_string(g) == s) return g;
  }
  throw std::invalid_argument("unknown physical gate '" + std::string(s) + "'");
}

} // namespace transmon
