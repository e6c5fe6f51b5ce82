#pragma once

// Pulse schedules for the time-domain protocols, and an idealized model of
// the room-temperature signal chain: IF single-sideband modulation, gaussian
// anti-aliasing filter, sampling, and software demodulation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "transmon/constants.hpp"
#include "transmon/device_model.hpp"
#include "transmon/errors.hpp"
#include "transmon/gates.hpp"

namespace transmon::seq {

using device::EnvelopeShape;

/// Pulse amplitude profile on [0, duration]. peak_amplitude is the peak Rabi
/// rate in rad/ns for XY pulses and arbitrary units for readout.
///
/// Gaussian envelopes are truncated to the window and shifted so both
/// endpoints are exactly zero; the peak stays at peak_amplitude.
struct Envelope {
  EnvelopeShape shape = EnvelopeShape::rectangle;
  double duration = 0.0;
  double peak_amplitude = 0.0;
  double sigma = 0.0;

  double edge_value() const {
    const double half = 0.5 * duration;
    return std::exp(-half * half / (2.0 * sigma * sigma));
  }

  /// Envelope normalized to unit peak.
  double unit_value(double t) const {
    if (t < 0.0 || t > duration) return 0.0;
    if (shape == EnvelopeShape::rectangle) return 1.0;
    const double x = t - 0.5 * duration;
    const double edge = edge_value();
    return (std::exp(-x * x / (2.0 * sigma * sigma)) - edge) / (1.0 - edge);
  }

  double value(double t) const { return peak_amplitude * unit_value(t); }

  /// Closed-form integral of the unit-peak envelope over [0, duration].
  double unit_area() const {
    if (shape == EnvelopeShape::rectangle) return duration;
    const double edge = edge_value();
    const double gauss = sigma * std::sqrt(2.0 * constants::pi) *
                         std::erf(duration / (2.0 * std::sqrt(2.0) * sigma));
    return (gauss - duration * edge) / (1.0 - edge);
  }

  /// Rotation angle in rad (for XY pulses).
  double area() const { return peak_amplitude * unit_area(); }

  void validate() const {
    if (!(duration > 0.0)) throw ConfigError("envelope: duration must be positive");
    if (shape == EnvelopeShape::gaussian && !(sigma > 0.0)) {
      throw ConfigError("envelope: gaussian sigma must be positive");
    }
  }
};

/// Peak Rabi rate that makes the envelope's area exactly pi.
inline double calibrate_pi_amplitude(EnvelopeShape shape, double duration, double sigma = 0.0) {
  Envelope e{shape, duration, 1.0, shape == EnvelopeShape::gaussian ? sigma : 0.0};
  if (shape == EnvelopeShape::gaussian && !(sigma > 0.0)) e.sigma = duration / 4.0;
  e.validate();
  return constants::pi / e.unit_area();
}

enum class Channel { XY, RO };

struct Pulse {
  Envelope envelope;
  double start = 0.0;          // ns
  Channel channel = Channel::XY;
  double drive_detuning = 0.0; // GHz, drive minus qubit
  double phase = 0.0;          // rad

  double end() const { return start + envelope.duration; }
};

/// A contiguous piece of the schedule before readout: either one XY pulse or
/// an explicit idle.
struct Segment {
  double start;
  double end;
  std::optional<Pulse> pulse;

  double duration() const { return end - start; }
};

class PulseSequence {
public:
  PulseSequence() = default;

  explicit PulseSequence(std::vector<Pulse> pulses) : pulses_(std::move(pulses)) {
    std::stable_sort(pulses_.begin(), pulses_.end(),
                     [](const Pulse& a, const Pulse& b) { return a.start < b.start; });
    validate();
  }

  const std::vector<Pulse>& pulses() const { return pulses_; }

  const Pulse& readout() const {
    for (const auto& p : pulses_) {
      if (p.channel == Channel::RO) return p;
    }
    throw ConfigError("sequence: no readout pulse");
  }

  double total_duration() const { return readout().end(); }

  std::vector<Pulse> xy_pulses() const {
    std::vector<Pulse> out;
    for (const auto& p : pulses_) {
      if (p.channel == Channel::XY) out.push_back(p);
    }
    return out;
  }

  /// XY pulses and idle gaps covering [0, readout start).
  std::vector<Segment> segments() const {
    std::vector<Segment> out;
    double t = 0.0;
    for (const auto& p : xy_pulses()) {
      if (p.start > t) out.push_back({t, p.start, std::nullopt});
      out.push_back({p.start, p.end(), p});
      t = p.end();
    }
    const double ro = readout().start;
    if (ro > t) out.push_back({t, ro, std::nullopt});
    return out;
  }

  void validate() const {
    int n_readout = 0;
    double last_xy_end = 0.0;
    double prev_end = -1.0;
    for (const auto& p : pulses_) {
      p.envelope.validate();
      if (p.start < 0.0) throw ConfigError("sequence: pulse starts before t=0");
      if (p.channel == Channel::RO) {
        ++n_readout;
        continue;
      }
      if (p.start < prev_end - 1e-9) throw ConfigError("sequence: overlapping XY pulses");
      prev_end = p.end();
      last_xy_end = std::max(last_xy_end, p.end());
    }
    if (n_readout != 1) throw ConfigError("sequence: exactly one readout pulse required");
    const Pulse& ro = readout();
    if (ro.start < last_xy_end - 1e-9) throw ConfigError("sequence: readout precedes an XY pulse");
    for (const auto& p : pulses_) {
      if (p.channel == Channel::XY && p.start > ro.start) {
        throw ConfigError("sequence: readout must be last in time");
      }
    }
  }

private:
  std::vector<Pulse> pulses_;
};

// ---------------------------------------------------------------------------
// Signal chain
// ---------------------------------------------------------------------------

struct IFWaveform {
  std::vector<double> i_samples;
  std::vector<double> q_samples;
  double sample_rate = 1.0;    // GS/s
  double if_frequency = 0.100; // GHz
  double t0 = 0.0;             // ns, time of sample 0

  std::size_t size() const { return i_samples.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) / sample_rate; }

  void validate() const {
    if (i_samples.size() != q_samples.size()) throw ConfigError("waveform: I/Q length mismatch");
    if (!(sample_rate > 0.0) || !(if_frequency > 0.0)) {
      throw ConfigError("waveform: sample rate and IF frequency must be positive");
    }
  }
};

/// Single-sideband modulation: I = A cos(2 pi f t + phase), Q = A sin(...),
/// sampled on [-padding, duration + padding].
inline IFWaveform ssb_modulate(const Envelope& env, double phase, double if_frequency = 0.100,
                               double sample_rate = 1.0, double padding = 0.0) {
  if (!(if_frequency > 0.0) || !(sample_rate >= 4.0 * if_frequency)) {
    throw ConfigError("ssb_modulate: sample rate must be at least 4x the IF frequency");
  }
  IFWaveform w;
  w.sample_rate = sample_rate;
  w.if_frequency = if_frequency;
  w.t0 = -padding;
  const auto n = static_cast<std::size_t>(std::floor((env.duration + 2.0 * padding) * sample_rate)) + 1;
  w.i_samples.resize(n);
  w.q_samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = w.time(k);
    const double a = env.value(t);
    const double arg = constants::two_pi * if_frequency * t + phase;
    w.i_samples[k] = a * std::cos(arg);
    w.q_samples[k] = a * std::sin(arg);
  }
  return w;
}

/// Gaussian low-pass response exp(-(ln 2 / 2) (f / cutoff)^2): unit DC gain,
/// amplitude 1/sqrt(2) at the cutoff.
inline double gaussian_response(double f, double cutoff) {
  const double x = f / cutoff;
  return std::exp(-0.5 * std::log(2.0) * x * x);
}

/// Time-domain standard deviation of the gaussian impulse response, ns.
inline double gaussian_filter_sigma(double cutoff) {
  return std::sqrt(std::log(2.0)) / (constants::two_pi * cutoff);
}

/// Filters one real channel in the frequency domain. Edges are extended with
/// their boundary values so constant signals pass unchanged.
inline std::vector<double> gaussian_filter_samples(std::span<const double> x, double sample_rate,
                                                   double cutoff) {
  if (!(cutoff > 0.0)) throw ConfigError("gaussian_filter: cutoff must be positive");
  if (x.empty()) return {};
  const double sigma_samples = gaussian_filter_sigma(cutoff) * sample_rate;
  const auto pad = static_cast<std::size_t>(std::ceil(10.0 * sigma_samples)) + 8;
  const std::size_t n = x.size() + 2 * pad;
  std::vector<double> buf(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k < pad) buf[k] = x.front();
    else if (k >= pad + x.size()) buf[k] = x.back();
    else buf[k] = x[k - pad];
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, buf);
  for (std::size_t k = 0; k < n; ++k) {
    const double bin = static_cast<double>(k <= n / 2 ? k : n - k);
    spec[k] *= gaussian_response(bin * sample_rate / static_cast<double>(n), cutoff);
  }
  std::vector<double> out;
  fft.inv(out, spec);
  return {out.begin() + static_cast<std::ptrdiff_t>(pad),
          out.begin() + static_cast<std::ptrdiff_t>(pad + x.size())};
}

inline IFWaveform gaussian_filter(const IFWaveform& w, double cutoff = 0.320) {
  w.validate();
  IFWaveform out = w;
  out.i_samples = gaussian_filter_samples(w.i_samples, w.sample_rate, cutoff);
  out.q_samples = gaussian_filter_samples(w.q_samples, w.sample_rate, cutoff);
  return out;
}

struct Demodulated {
  std::vector<double> amplitude;
  std::vector<double> phase;
  std::complex<double> iq_point; // mean complex baseband over the window
};

/// Digital mixing with the IF tone followed by a gaussian low-pass
/// (default cutoff 2 f_IF), then integration to one I-Q point.
inline Demodulated demodulate(const IFWaveform& w, double if_frequency = 0.100,
                              double lowpass_cutoff = 0.0) {
  w.validate();
  if (std::abs(if_frequency - w.if_frequency) > 1e-12) {
    throw ConfigError("demodulate: IF frequency does not match the waveform");
  }
  const std::size_t n = w.size();
  std::vector<double> re(n), im(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double arg = constants::two_pi * if_frequency * w.time(k);
    const std::complex<double> z =
        std::complex<double>(w.i_samples[k], w.q_samples[k]) * std::polar(1.0, -arg);
    re[k] = z.real();
    im[k] = z.imag();
  }
  const double cutoff = lowpass_cutoff > 0.0 ? lowpass_cutoff : 2.0 * if_frequency;
  re = gaussian_filter_samples(re, w.sample_rate, cutoff);
  im = gaussian_filter_samples(im, w.sample_rate, cutoff);

  Demodulated d;
  d.amplitude.resize(n);
  d.phase.resize(n);
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    const std::complex<double> z(re[k], im[k]);
    d.amplitude[k] = std::abs(z);
    d.phase[k] = d.amplitude[k] > 0.0 ? std::arg(z) : 0.0;
    sum += z;
  }
  d.iq_point = n > 0 ? sum / static_cast<double>(n) : std::complex<double>{};
  if (std::abs(d.iq_point) < 1e-300) d.iq_point = {0.0, 0.0};
  return d;
}

/// Writes "time_ns,I,Q" rows.
inline void write_waveform(std::ostream& os, const IFWaveform& w) {
  os << "time_ns,I,Q\n";
  os.precision(17);
  for (std::size_t k = 0; k < w.size(); ++k) {
    os << w.time(k) << ',' << w.i_samples[k] << ',' << w.q_samples[k] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Calibrated XY pulse realizing a rotation by `angle` about the axis at
/// `phase`. Negative angles flip the phase by pi.
inline Pulse xy_rotation(const device::PulseConfig& cfg, double angle, double phase, double start,
                         double detuning = 0.0) {
  Envelope env;
  env.shape = cfg.xy_shape;
  env.duration = cfg.xy_duration;
  env.sigma = cfg.xy_shape == EnvelopeShape::gaussian ? cfg.sigma() : 0.0;
  const double pi_amp = calibrate_pi_amplitude(env.shape, env.duration, env.sigma);
  env.peak_amplitude = pi_amp * std::abs(angle) / constants::pi;
  if (angle < 0.0) phase += constants::pi;
  return Pulse{env, start, Channel::XY, detuning, phase};
}

inline Pulse readout_pulse(const device::PulseConfig& cfg, double start) {
  return Pulse{Envelope{EnvelopeShape::rectangle, cfg.readout_duration, 1.0, 0.0}, start,
               Channel::RO, 0.0, 0.0};
}

/// Rectangular XY pulse of length tau at the Rabi rate that gives a pi
/// rotation in one calibrated gate time, then readout.
inline PulseSequence build_rabi(const device::PulseConfig& cfg, double drive_detuning, double tau) {
  if (tau < 0.0) throw ConfigError("build_rabi: tau must be non-negative");
  std::vector<Pulse> pulses;
  if (tau > 0.0) {
    const double amp = calibrate_pi_amplitude(EnvelopeShape::rectangle, cfg.xy_duration);
    pulses.push_back(Pulse{Envelope{EnvelopeShape::rectangle, tau, amp, 0.0}, 0.0, Channel::XY,
                           drive_detuning, 0.0});
  }
  pulses.push_back(readout_pulse(cfg, tau));
  return PulseSequence(std::move(pulses));
}

inline PulseSequence build_t1(const device::PulseConfig& cfg, double tau) {
  if (tau < 0.0) throw ConfigError("build_t1: tau must be non-negative");
  std::vector<Pulse> pulses{xy_rotation(cfg, constants::pi, 0.0, 0.0)};
  pulses.push_back(readout_pulse(cfg, cfg.xy_duration + tau));
  return PulseSequence(std::move(pulses));
}

inline PulseSequence build_ramsey(const device::PulseConfig& cfg, double tau, double detuning) {
  if (tau < 0.0) throw ConfigError("build_ramsey: tau must be non-negative");
  const double half = constants::pi / 2.0;
  std::vector<Pulse> pulses{xy_rotation(cfg, half, 0.0, 0.0, detuning),
                            xy_rotation(cfg, half, 0.0, cfg.xy_duration + tau, detuning)};
  pulses.push_back(readout_pulse(cfg, 2.0 * cfg.xy_duration + tau));
  return PulseSequence(std::move(pulses));
}

/// Back-to-back calibrated gates. The identity occupies one gate slot as an
/// explicit idle.
inline PulseSequence build_rb(const device::PulseConfig& cfg, std::span<const PhysicalGate> gates) {
  std::vector<Pulse> pulses;
  double t = 0.0;
  for (auto g : gates) {
    if (g != PhysicalGate::I) {
      const auto rot = rotation_of(g);
      pulses.push_back(xy_rotation(cfg, rot.angle, rot.phase, t));
    }
    t += cfg.xy_duration;
  }
  pulses.push_back(readout_pulse(cfg, t));
  return PulseSequence(std::move(pulses));
}

} // namespace transmon::seq
