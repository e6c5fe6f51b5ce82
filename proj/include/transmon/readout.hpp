#pragma once

// Statistical dispersive readout and the frequency-domain resonator response.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "transmon/device_model.hpp"
#include "transmon/dynamics.hpp"
#include "transmon/errors.hpp"
#include "transmon/rng.hpp"

namespace transmon::readout {

using device::ReadoutModel;

struct ShotRecord {
  std::complex<double> iq;
  int bit = 0;
  std::uint64_t sequence_id = 0;
  std::uint32_t shot_index = 0;
  std::uint64_t rng_stream_id = 0;
};

/// Minimum-distance rule: the perpendicular bisector of mean_g -> mean_e.
/// Points exactly on the bisector are assigned 0.
inline int discriminate(std::complex<double> iq, const ReadoutModel& model) {
  const std::complex<double> axis = model.mean_e - model.mean_g;
  const std::complex<double> mid = 0.5 * (model.mean_e + model.mean_g);
  const double proj = std::real((iq - mid) * std::conj(axis));
  return proj > 0.0 ? 1 : 0;
}

/// Probability the qubit is recorded as excited before assignment errors.
inline double bright_population(const dynamics::DensityState& s, const ReadoutModel& model) {
  const auto pops = dynamics::excited_population(s);
  const double p = pops.excited + (model.leakage_as_excited ? pops.leakage : 0.0);
  return std::clamp(p, 0.0, 1.0);
}

/// One projective measurement.
///
/// The outcome is drawn by the Born rule, then flipped with the assignment
/// error of its class (eps0 for |0>, eps1 for |1>). The I-Q point is drawn
/// from the recorded class's gaussian and folded across the decision
/// boundary if needed, so discriminate(iq) always reproduces the bit and
/// eps0/eps1 are the total assignment errors.
inline ShotRecord sample_shot(const dynamics::DensityState& state, const ReadoutModel& model,
                              rng::Stream& stream) {
  const double p1 = bright_population(state, model);
  const int truth = stream.uniform() < p1 ? 1 : 0;
  const double flip = truth == 1 ? model.eps1 : model.eps0;
  const int bit = stream.uniform() < flip ? 1 - truth : truth;

  const std::complex<double> mean = bit == 1 ? model.mean_e : model.mean_g;
  const double nx = stream.normal();
  const double ny = stream.normal();
  std::complex<double> iq = mean + model.sigma * std::complex<double>(nx, ny);
  if (discriminate(iq, model) != bit) {
    // Reflect across the bisector.
    const std::complex<double> axis = model.mean_e - model.mean_g;
    const std::complex<double> unit = axis / std::abs(axis);
    const std::complex<double> mid = 0.5 * (model.mean_e + model.mean_g);
    const double along = std::real((iq - mid) * std::conj(unit));
    iq -= 2.0 * along * unit;
    if (discriminate(iq, model) != bit) iq = mean;
  }
  return {iq, bit, stream.sequence_id(), stream.shot_index(), stream.stream_id()};
}

/// Equal-prior correct-assignment probability of the gaussian clouds alone.
inline double separation_fidelity(const ReadoutModel& model) {
  if (!(model.sigma > 0.0)) throw DomainError("separation_fidelity: sigma must be positive");
  const double sep = std::abs(model.mean_e - model.mean_g);
  return 1.0 - 0.5 * std::erfc(sep / (2.0 * std::sqrt(2.0) * model.sigma));
}

struct PopulationEstimate {
  double p_hat;
  double standard_error;
  std::size_t shots;
};

inline PopulationEstimate estimate_from_counts(std::size_t ones, std::size_t n) {
  if (n == 0) throw UsageError("estimate_population: no shots");
  const double p = static_cast<double>(ones) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n};
}

inline PopulationEstimate estimate_population(std::span<const ShotRecord> shots) {
  std::size_t ones = 0;
  for (const auto& s : shots) ones += static_cast<std::size_t>(s.bit);
  return estimate_from_counts(ones, shots.size());
}

/// Notch-type transmission of a resonator side-coupled to a feedline.
inline std::complex<double> s21_hanger(double f, double fr, double q_internal, double q_external) {
  if (!(q_internal > 0.0) || !(q_external > 0.0) || !(fr > 0.0)) {
    throw DomainError("s21_hanger: Q_i, Q_e and f_r must be positive");
  }
  const double q = device::loaded_q(q_internal, q_external);
  const std::complex<double> denom(1.0, 2.0 * q * (f - fr) / fr);
  return 1.0 - (q / q_external) / denom;
}

/// Resonator frequency with the qubit in |state>: f_r + chi for |0>,
/// f_r - chi for |1>, so that f_r|0> - f_r|1> = 2 chi.
inline double dressed_resonator_frequency(double fr, double chi, int qubit_state) {
  return qubit_state == 0 ? fr + chi : fr - chi;
}

inline std::complex<double> s21_conditioned(double f, const device::DeviceSpec& d, int qubit_state) {
  return s21_hanger(f, dressed_resonator_frequency(d.resonator.fr, d.coupling.chi, qubit_state),
                    d.resonator.q_internal, d.resonator.q_external);
}

/// Writes "sequence_id,shot_index,I,Q,bit" rows.
inline void write_shots(std::ostream& os, std::span<const ShotRecord> shots) {
  os << "sequence_id,shot_index,I,Q,bit\n";
  os.precision(17);
  for (const auto& s : shots) {
    os << s.sequence_id << ',' << s.shot_index << ',' << s.iq.real() << ',' << s.iq.imag() << ','
       << s.bit << '\n';
  }
}

} // namespace transmon::readout
