#pragma once

#include <numbers>

namespace transmon::constants {

// CODATA 2018 (exact SI values where defined).
inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double boltzmann = 1.380649e-23;         // J / K
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double flux_quantum = 2.067833848e-15;   // Wb

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double ghz = 1e9;
inline constexpr double nano_henry = 1e-9;
inline constexpr double milli_kelvin = 1e-3;

} // namespace transmon::constants
