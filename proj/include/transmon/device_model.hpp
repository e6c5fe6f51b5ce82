#pragma once

// Closed-form circuit-QED parameter relations for a flux-tunable transmon
// coupled to a quarter-wave readout resonator.
//
// Units: frequencies and energies are linear (GHz, or energy/h in GHz).
// Angular rates are derived on demand and carry rad/us in their names.

#include <cmath>
#include <complex>
#include <sstream>
#include <string>

#include "transmon/constants.hpp"
#include "transmon/errors.hpp"

namespace transmon::device {

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

/// Charging energy from the anharmonicity in the transmon limit: E_C = -eta.
inline double ec_from_anharmonicity(double anharmonicity_ghz) {
  if (!(anharmonicity_ghz < 0.0)) {
    throw DomainError("ec_from_anharmonicity: anharmonicity must be negative, got " +
                      std::to_string(anharmonicity_ghz));
  }
  return -anharmonicity_ghz;
}

/// Qubit frequency sqrt(8 E_J E_C) - E_C.
inline double transmon_frequency(double ej_ghz, double ec_ghz) {
  if (!(ej_ghz > 0.0) || !(ec_ghz > 0.0)) {
    throw DomainError("transmon_frequency: E_J and E_C must be positive");
  }
  return std::sqrt(8.0 * ej_ghz * ec_ghz) - ec_ghz;
}

/// Inverse of transmon_frequency given the measured spectrum (f_q, eta).
inline double ej_from_spectrum(double fq_ghz, double anharmonicity_ghz) {
  if (!(fq_ghz >= 0.0)) {
    throw DomainError("ej_from_spectrum: qubit frequency must be non-negative");
  }
  const double ec = ec_from_anharmonicity(anharmonicity_ghz);
  return (fq_ghz + ec) * (fq_ghz + ec) / (8.0 * ec);
}

/// Josephson energy E_J/h (GHz) of n identical junctions in parallel,
/// each with zero-bias inductance L (nH).
inline double ej_from_inductance(double inductance_nh, int n_parallel) {
  if (!(inductance_nh > 0.0) || n_parallel < 1) {
    throw DomainError("ej_from_inductance: need L > 0 and n >= 1");
  }
  using namespace constants;
  const double reduced_flux = flux_quantum / two_pi;
  const double l_eff = inductance_nh * nano_henry / n_parallel;
  return reduced_flux * reduced_flux / l_eff / planck / ghz;
}

/// Symmetric SQUID: E_J(flux) = E_J_max |cos(pi flux)|, flux in flux quanta.
inline double squid_ej(double ej_max_ghz, double flux_quanta) {
  if (!(ej_max_ghz > 0.0)) {
    throw DomainError("squid_ej: E_J_max must be positive");
  }
  return ej_max_ghz * std::abs(std::cos(constants::pi * flux_quanta));
}

/// Vacuum coupling g = sqrt(-detuning * chi * (1 + detuning/eta)).
inline double coupling_from_chi(double chi_ghz, double detuning_ghz, double anharmonicity_ghz) {
  if (anharmonicity_ghz == 0.0) {
    throw DomainError("coupling_from_chi: anharmonicity must be nonzero");
  }
  const double radicand = -detuning_ghz * chi_ghz * (1.0 + detuning_ghz / anharmonicity_ghz);
  if (radicand < 0.0) {
    std::ostringstream os;
    os << "coupling_from_chi: inconsistent inputs chi=" << chi_ghz << " detuning=" << detuning_ghz
       << " anharmonicity=" << anharmonicity_ghz << " give negative radicand " << radicand;
    throw DomainError(os.str());
  }
  return std::sqrt(radicand);
}

/// Algebraic inverse of coupling_from_chi: chi = -g^2 / (detuning (1 + detuning/eta)).
inline double chi_from_coupling(double g_ghz, double detuning_ghz, double anharmonicity_ghz) {
  if (detuning_ghz == 0.0 || anharmonicity_ghz == 0.0) {
    throw DomainError("chi_from_coupling: detuning and anharmonicity must be nonzero");
  }
  const double factor = 1.0 + detuning_ghz / anharmonicity_ghz;
  if (factor == 0.0) {
    throw DomainError("chi_from_coupling: detuning equals -anharmonicity (straddling pole)");
  }
  return -g_ghz * g_ghz / (detuning_ghz * factor);
}

/// Loaded quality factor from 1/Q = 1/Q_i + 1/Q_e.
inline double loaded_q(double q_internal, double q_external) {
  if (!(q_internal > 0.0) || !(q_external > 0.0)) {
    throw DomainError("loaded_q: quality factors must be positive");
  }
  return 1.0 / (1.0 / q_internal + 1.0 / q_external);
}

/// Resonator energy decay rate kappa = 2 pi f_r / Q in rad/us.
inline double kappa_rad_per_us(double fr_ghz, double q_total) {
  if (!(q_total > 0.0)) {
    throw DomainError("kappa_rad_per_us: Q must be positive");
  }
  return constants::two_pi * fr_ghz * 1e3 / q_total;
}

/// Single-mode Purcell estimate (detuning/g)^2 / kappa, in us.
inline double purcell_t1(double detuning_ghz, double g_ghz, double kappa_rad_us) {
  if (!(g_ghz > 0.0) || !(kappa_rad_us > 0.0)) {
    throw DomainError("purcell_t1: g and kappa must be positive");
  }
  const double ratio = detuning_ghz / g_ghz;
  return ratio * ratio / kappa_rad_us;
}

/// Boltzmann occupation of the excited level, 1 / (1 + exp(h f / k_B T)).
inline double thermal_population(double fq_ghz, double temperature_mk) {
  if (!(temperature_mk > 0.0)) {
    throw DomainError("thermal_population: temperature must be positive");
  }
  using namespace constants;
  const double x = planck * fq_ghz * ghz / (boltzmann * temperature_mk * milli_kelvin);
  return 1.0 / (1.0 + std::exp(x));
}

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

struct TransmonSpec {
  double fq = 0.0;            // GHz
  double anharmonicity = 0.0; // GHz, negative
  double ej = 0.0;            // GHz
  double ec = 0.0;            // GHz
  double t1 = 0.0;            // us
  double t2 = 0.0;            // us
  double thermal_population = 0.0;

  /// Derives E_C and E_J from the measured spectrum and validates.
  static TransmonSpec from_spectrum(double fq, double anharmonicity, double t1, double t2,
                                    double thermal_population = 0.0) {
    TransmonSpec t;
    t.fq = fq;
    t.anharmonicity = anharmonicity;
    t.ec = ec_from_anharmonicity(anharmonicity);
    t.ej = ej_from_spectrum(fq, anharmonicity);
    t.t1 = t1;
    t.t2 = t2;
    t.thermal_population = thermal_population;
    t.validate();
    return t;
  }

  void validate() const {
    if (!(anharmonicity < 0.0)) throw ConfigError("transmon: anharmonicity must be negative");
    if (!(ec > 0.0) || !(ej > 0.0)) throw ConfigError("transmon: E_J and E_C must be positive");
    if (ej / ec < 10.0) throw ConfigError("transmon: E_J/E_C below 10, outside the transmon limit");
    if (!(t1 > 0.0) || !(t2 > 0.0)) throw ConfigError("transmon: T1 and T2 must be positive");
    if (t2 > 2.0 * t1) throw ConfigError("transmon: T2 exceeds 2 T1");
    if (!(thermal_population >= 0.0 && thermal_population < 0.5)) {
      throw ConfigError("transmon: thermal_population must lie in [0, 0.5)");
    }
    if (std::abs(ec + anharmonicity) > 1e-6 ||
        std::abs(transmon_frequency(ej, ec) - fq) > 1e-6) {
      throw ConfigError("transmon: f_q, E_J, E_C and anharmonicity are inconsistent");
    }
  }
};

struct ResonatorSpec {
  double fr = 0.0; // GHz
  double q_internal = 0.0;
  double q_external = 0.0;

  double q_total() const { return loaded_q(q_internal, q_external); }
  double kappa_rad_per_us() const { return device::kappa_rad_per_us(fr, q_total()); }

  void validate() const {
    if (!(fr > 0.0)) throw ConfigError("resonator: f_r must be positive");
    if (!(q_internal > 0.0) || !(q_external > 0.0)) {
      throw ConfigError("resonator: Q_i and Q_e must be positive");
    }
  }
};

/// Qubit-resonator coupling. chi is the half dispersive shift: 2 chi = f_r|0> - f_r|1>.
struct CouplingSpec {
  double g = 0.0;        // GHz
  double chi = 0.0;      // GHz
  double detuning = 0.0; // f_q - f_r, GHz

  static CouplingSpec from_chi(double chi, const TransmonSpec& q, const ResonatorSpec& r) {
    CouplingSpec c;
    c.chi = chi;
    c.detuning = q.fq - r.fr;
    c.g = coupling_from_chi(chi, c.detuning, q.anharmonicity);
    return c;
  }

  void validate(const TransmonSpec& q, const ResonatorSpec& r) const {
    if (std::abs(detuning - (q.fq - r.fr)) > 1e-12) {
      throw ConfigError("coupling: detuning does not equal f_q - f_r");
    }
    if (std::abs(coupling_from_chi(chi, detuning, q.anharmonicity) - g) > 1e-6) {
      throw ConfigError("coupling: g and chi are inconsistent");
    }
  }
};

struct SquidSpec {
  double ej_max = 0.0;              // GHz
  double inductance_per_junction = 0.0; // nH
  int n_junctions = 2;
  double flux = 0.0;                // flux quanta

  static SquidSpec from_inductance(double inductance_nh, int n, double flux) {
    SquidSpec s;
    s.inductance_per_junction = inductance_nh;
    s.n_junctions = n;
    s.flux = flux;
    s.ej_max = ej_from_inductance(inductance_nh, n);
    return s;
  }

  double ej() const { return squid_ej(ej_max, flux); }

  void validate() const {
    if (n_junctions != 2) throw ConfigError("squid: only the symmetric two-junction SQUID is modeled");
    const double from_l = ej_from_inductance(inductance_per_junction, n_junctions);
    if (std::abs(ej_max - from_l) > 0.02 * from_l) {
      throw ConfigError("squid: E_J_max deviates more than 2% from the junction-inductance value");
    }
  }
};

struct FridgeSpec {
  double temperature_mk = 7.0;

  void validate() const {
    if (!(temperature_mk > 0.0)) throw ConfigError("fridge: temperature must be positive");
  }
};

/// Statistical dispersive readout: two isotropic gaussian clouds in the I-Q
/// plane plus total assignment errors.
struct ReadoutModel {
  std::complex<double> mean_g{-1.0, 0.0};
  std::complex<double> mean_e{1.0, 0.0};
  double sigma = 0.25;
  double eps0 = 0.05; // P(record 1 | true 0)
  double eps1 = 0.05; // P(record 0 | true 1)
  bool leakage_as_excited = true;

  void validate() const {
    if (!(eps0 >= 0.0 && eps0 < 0.5) || !(eps1 >= 0.0 && eps1 < 0.5)) {
      throw ConfigError("readout: assignment errors must lie in [0, 0.5)");
    }
    if (mean_g == mean_e) throw ConfigError("readout: ground and excited means coincide");
    if (!(sigma >= 0.0)) throw ConfigError("readout: sigma must be non-negative");
  }
};

enum class EnvelopeShape { gaussian, rectangle };

/// Gate calibration shared by every experiment on a device.
struct PulseConfig {
  EnvelopeShape xy_shape = EnvelopeShape::gaussian;
  double xy_duration = 30.0;       // ns
  double xy_sigma = 0.0;           // ns; 0 selects duration/4
  double readout_duration = 500.0; // ns

  double sigma() const { return xy_sigma > 0.0 ? xy_sigma : xy_duration / 4.0; }

  void validate() const {
    if (!(xy_duration > 0.0)) throw ConfigError("pulses: xy_duration must be positive");
    if (!(readout_duration > 0.0)) throw ConfigError("pulses: readout_duration must be positive");
    if (xy_sigma < 0.0) throw ConfigError("pulses: xy_sigma must be non-negative");
  }
};

struct SimulationConfig {
  int levels = 2;
  double dt_pulse = 0.05; // ns
  double dt_idle = 1.0;   // ns, used only when recording trajectories

  void validate() const {
    if (levels != 2 && levels != 3) throw ConfigError("simulation: levels must be 2 or 3");
    if (!(dt_pulse > 0.0) || !(dt_idle > 0.0)) throw ConfigError("simulation: time steps must be positive");
  }
};

/// Full parameterization of one simulated chip.
struct DeviceSpec {
  std::string name;
  TransmonSpec transmon;
  ResonatorSpec resonator;
  CouplingSpec coupling;
  SquidSpec squid;
  FridgeSpec fridge;
  ReadoutModel readout;
  PulseConfig pulses;
  SimulationConfig simulation;

  /// Qubit frequency at the current flux bias, from the SQUID-tuned E_J
  /// scaled to the spectroscopic E_J at the sweet spot.
  double tuned_frequency() const {
    const double ej = transmon.ej * squid.ej() / squid.ej_max;
    if (ej <= 0.0) return 0.0;
    return transmon_frequency(ej, transmon.ec);
  }

  double purcell_t1() const {
    return device::purcell_t1(coupling.detuning, coupling.g, resonator.kappa_rad_per_us());
  }

  void validate() const {
    transmon.validate();
    resonator.validate();
    coupling.validate(transmon, resonator);
    squid.validate();
    fridge.validate();
    readout.validate();
    pulses.validate();
    simulation.validate();
    if (std::abs(squid.ej_max - transmon.ej) > 0.02 * transmon.ej) {
      throw ConfigError("device: SQUID E_J_max deviates more than 2% from the spectroscopic E_J");
    }
  }
};

/// Assembles and validates a device from as-measured spectroscopy values.
struct DeviceInputs {
  std::string name;
  double fq, anharmonicity, fr, q_internal, q_external, chi, t1, t2;
  double inductance_per_junction = 22.0;
  int n_junctions = 2;
  double flux = 0.0;
  double temperature_mk = 7.0;
  double thermal_population = 0.0;
};

inline DeviceSpec make_device(const DeviceInputs& in) {
  DeviceSpec d;
  d.name = in.name;
  d.transmon = TransmonSpec::from_spectrum(in.fq, in.anharmonicity, in.t1, in.t2,
                                           in.thermal_population);
  d.resonator = ResonatorSpec{in.fr, in.q_internal, in.q_external};
  d.resonator.validate();
  d.coupling = CouplingSpec::from_chi(in.chi, d.transmon, d.resonator);
  d.squid = SquidSpec::from_inductance(in.inductance_per_junction, in.n_junctions, in.flux);
  d.fridge = FridgeSpec{in.temperature_mk};
  d.validate();
  return d;
}

// As-measured reference devices. T1/T2 are the fitted values reported for
// each chip; readout and pulse settings are illustrative defaults.
// The Si junction inductance is back-computed from its spectroscopic E_J
// (22 nH is the SOI value).
inline DeviceInputs si_inputs() {
  return {"si", 4.962, -0.260, 6.868, 5.8e3, 12.9e3, 0.0012, 27.0, 6.6, 24.93};
}

inline DeviceInputs soi_inputs() {
  return {"soi", 5.652, -0.300, 7.143, 45.8e3, 6.1e3, 0.0035, 3.5, 2.2, 22.0};
}

inline DeviceSpec si_device() { return make_device(si_inputs()); }
inline DeviceSpec soi_device() { return make_device(soi_inputs()); }

} // namespace transmon::device
