#pragma once

// Experiment plans and the columnar datasets they produce.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "transmon/device_model.hpp"
#include "transmon/errors.hpp"
#include "transmon/gates.hpp"

namespace transmon::experiments {

enum class Kind { rabi_chevron, t1, ramsey, rb_reference, rb_interleaved, two_tone, vna_sweep };

inline constexpr std::string_view to_string(Kind k) {
  switch (k) {
  case Kind::rabi_chevron: return "rabi_chevron";
  case Kind::t1: return "t1";
  case Kind::ramsey: return "ramsey";
  case Kind::rb_reference: return "rb_reference";
  case Kind::rb_interleaved: return "rb_interleaved";
  case Kind::two_tone: return "two_tone";
  case Kind::vna_sweep: return "vna_sweep";
  }
  return "?";
}

inline Kind kind_from_string(std::string_view s) {
  for (auto k : {Kind::rabi_chevron, Kind::t1, Kind::ramsey, Kind::rb_reference, Kind::rb_interleaved,
                 Kind::two_tone, Kind::vna_sweep}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

inline bool is_rb(Kind k) { return k == Kind::rb_reference || k == Kind::rb_interleaved; }

enum class RbNoiseLevel { clifford, pulse };

struct Axis {
  std::string name;
  std::vector<double> values;
};

inline std::vector<double> linspace(double start, double stop, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    v[static_cast<std::size_t>(k)] = n == 1 ? start : start + (stop - start) * k / (n - 1);
  }
  return v;
}

inline std::vector<double> logspace(double start, double stop, int n) {
  auto v = linspace(std::log(start), std::log(stop), n);
  for (auto& x : v) x = std::exp(x);
  return v;
}

struct ExperimentPlan {
  Kind kind = Kind::t1;
  std::vector<Axis> axes;
  std::size_t shots_per_point = 10000;
  std::uint64_t global_seed = 0;

  // Ramsey: drive detuning, GHz.
  double detuning = 0.0;
  // T1: X_pi duration override in ns (0 keeps the device calibration).
  double pi_duration = 0.0;

  // Randomized benchmarking.
  int n_random_sequences = 0;
  PhysicalGate interleaved_gate = PhysicalGate::X_pi;
  RbNoiseLevel rb_noise = RbNoiseLevel::clifford;
  double clifford_p = 1.0; // depolarizing parameter per random Clifford
  double gate_p = 1.0;     // extra depolarizing parameter per interleaved gate

  // Two-tone: CW drive Rabi rate, rad/ns.
  double drive_amplitude = 0.0;

  // VNA: qubit state conditioning the resonator (-1 for the bare resonator)
  // and additive complex noise per quadrature.
  int qubit_state = -1;
  double noise = 0.0;

  void validate() const {
    if (shots_per_point < 1) throw ConfigError("plan: shots_per_point must be >= 1");
    const std::size_t want_axes = kind == Kind::rabi_chevron ? 2 : 1;
    if (axes.size() != want_axes) {
      throw ConfigError("plan: " + std::string(to_string(kind)) + " needs " + std::to_string(want_axes) +
                        " axis/axes");
    }
    for (const auto& a : axes) {
      if (a.values.empty()) throw ConfigError("plan: axis '" + a.name + "' is empty");
      for (std::size_t k = 1; k < a.values.size(); ++k) {
        if (!(a.values[k] > a.values[k - 1])) {
          throw ConfigError("plan: axis '" + a.name + "' must be strictly increasing");
        }
      }
    }
    if (is_rb(kind)) {
      if (n_random_sequences < 1) throw ConfigError("plan: RB needs n_random_sequences >= 1");
      if (!(clifford_p > 0.0 && clifford_p <= 1.0) || !(gate_p > 0.0 && gate_p <= 1.0)) {
        throw ConfigError("plan: depolarizing parameters must lie in (0, 1]");
      }
      for (double n : axes[0].values) {
        if (n < 0.0 || n != std::floor(n)) throw ConfigError("plan: RB lengths must be non-negative integers");
      }
    }
    if (kind == Kind::t1 || kind == Kind::ramsey || kind == Kind::rabi_chevron) {
      if (axes.back().values.front() < 0.0) throw ConfigError("plan: delays must be non-negative");
    }
    if (kind == Kind::vna_sweep && (qubit_state < -1 || qubit_state > 1)) {
      throw ConfigError("plan: qubit_state must be -1, 0 or 1");
    }
    if (noise < 0.0 || drive_amplitude < 0.0 || pi_duration < 0.0) {
      throw ConfigError("plan: noise, drive_amplitude and pi_duration must be non-negative");
    }
  }
};

// ---------------------------------------------------------------------------
// Default plans
// ---------------------------------------------------------------------------

inline ExperimentPlan default_t1_plan(const device::DeviceSpec& d, std::uint64_t seed) {
  ExperimentPlan p;
  p.kind = Kind::t1;
  p.global_seed = seed;
  p.axes = {{"delay_us", logspace(d.transmon.t1 / 50.0, 5.0 * d.transmon.t1, 21)}};
  return p;
}

inline ExperimentPlan default_ramsey_plan(const device::DeviceSpec& d, std::uint64_t seed) {
  ExperimentPlan p;
  p.kind = Kind::ramsey;
  p.global_seed = seed;
  p.axes = {{"delay_us", linspace(0.0, 3.0 * d.transmon.t2, 61)}};
  // About nine fringes across the window.
  p.detuning = 3.0 / d.transmon.t2 * 1e-3;
  return p;
}

inline ExperimentPlan default_chevron_plan(const device::DeviceSpec&, std::uint64_t seed) {
  ExperimentPlan p;
  p.kind = Kind::rabi_chevron;
  p.global_seed = seed;
  p.shots_per_point = 1000;
  p.axes = {{"detuning_ghz", linspace(-0.04, 0.04, 21)}, {"tau_ns", linspace(0.0, 200.0, 41)}};
  return p;
}

inline std::vector<double> rb_lengths() {
  std::vector<double> n;
  for (int k = 1; k <= 512; k *= 2) n.push_back(k);
  return n;
}

inline ExperimentPlan default_rb_plan(Kind kind, int n_sequences, double clifford_p, double gate_p,
                                      std::uint64_t seed) {
  ExperimentPlan p;
  p.kind = kind;
  p.global_seed = seed;
  p.axes = {{"length", rb_lengths()}};
  p.n_random_sequences = n_sequences;
  p.clifford_p = clifford_p;
  p.gate_p = gate_p;
  p.shots_per_point = 20000;
  return p;
}

inline ExperimentPlan default_two_tone_plan(const device::DeviceSpec& d, std::uint64_t seed) {
  ExperimentPlan p;
  p.kind = Kind::two_tone;
  p.global_seed = seed;
  p.shots_per_point = 1;
  p.drive_amplitude = 2.0 * 3.14159265358979323846 * 0.005;
  p.axes = {{"drive_ghz", linspace(d.transmon.fq + 0.75 * d.transmon.anharmonicity,
                                   d.transmon.fq - 0.25 * d.transmon.anharmonicity, 801)}};
  return p;
}

inline ExperimentPlan default_vna_plan(const device::DeviceSpec& d, std::uint64_t seed) {
  ExperimentPlan p;
  p.kind = Kind::vna_sweep;
  p.global_seed = seed;
  p.shots_per_point = 1;
  const double width = d.resonator.fr / d.resonator.q_total();
  p.axes = {{"f_ghz", linspace(d.resonator.fr - 5.0 * width, d.resonator.fr + 5.0 * width, 2001)}};
  return p;
}

// ---------------------------------------------------------------------------
// DataSet
// ---------------------------------------------------------------------------

struct Column {
  std::string name;
  std::vector<double> values;
};

struct DataSetMetadata {
  std::string device_hash;
  std::string plan_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> extra; // e.g. wall-clock stamps when requested
};

/// One row per sweep point. Shot-based kinds carry p_hat, se and shots
/// columns with se = sqrt(p_hat (1 - p_hat) / shots).
struct DataSet {
  Kind kind = Kind::t1;
  std::vector<Column> columns;
  DataSetMetadata metadata;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().values.size(); }

  bool has(std::string_view name) const {
    return std::any_of(columns.begin(), columns.end(), [&](const Column& c) { return c.name == name; });
  }

  const std::vector<double>& column(std::string_view name) const {
    for (const auto& c : columns) {
      if (c.name == name) return c.values;
    }
    throw UsageError("dataset: no column '" + std::string(name) + "'");
  }

  void add(std::string name, std::vector<double> values) {
    if (!columns.empty() && values.size() != rows()) throw UsageError("dataset: column length mismatch");
    columns.push_back({std::move(name), std::move(values)});
  }

  bool shot_based() const { return has("p_hat") && has("se") && has("shots"); }

  /// Every point has p_hat in [0, 1] and the binomial standard error.
  void validate() const {
    for (const auto& c : columns) {
      if (c.values.size() != rows()) throw UsageError("dataset: ragged columns");
    }
    if (!shot_based()) return;
    const auto& p = column("p_hat");
    const auto& se = column("se");
    const auto& n = column("shots");
    for (std::size_t k = 0; k < rows(); ++k) {
      if (p[k] < 0.0 || p[k] > 1.0) throw UsageError("dataset: p_hat outside [0, 1]");
      const double want = std::sqrt(p[k] * (1.0 - p[k]) / n[k]);
      if (std::abs(se[k] - want) > 1e-12 * std::max(1.0, want)) {
        throw UsageError("dataset: standard error inconsistent with shot count");
      }
    }
  }
};

} // namespace transmon::experiments
