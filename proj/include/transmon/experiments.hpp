#pragma once

// Sweep runners. Every point is an independent work item with its own RNG
// keys, so results do not depend on the number of workers or their order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "transmon/clifford.hpp"
#include "transmon/device_model.hpp"
#include "transmon/dynamics.hpp"
#include "transmon/plan.hpp"
#include "transmon/readout.hpp"
#include "transmon/rng.hpp"
#include "transmon/sequencer.hpp"
#include "transmon/serialize.hpp"

namespace transmon::experiments {

struct RunOptions {
  unsigned workers = 1;
  bool keep_shots = false;
};

struct RunResult {
  DataSet data;
  std::vector<readout::ShotRecord> shots; // only with keep_shots
};

/// Reserved shot index for draws that are not shots (e.g. Clifford choices).
inline constexpr std::uint32_t kSequenceDrawIndex = 0xFFFFFFFFu;

/// Runs fn(0..n-1) on up to `workers` threads. The first exception is
/// rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

struct PointShots {
  std::size_t ones = 0;
  std::size_t n = 0;
  std::vector<readout::ShotRecord> records;
};

inline PointShots sample_point(const dynamics::DensityState& state, const device::ReadoutModel& model,
                               std::uint64_t seed, std::uint64_t sequence_id, std::size_t shots,
                               std::uint32_t first_shot, bool keep) {
  PointShots out;
  out.n = shots;
  if (keep) out.records.reserve(shots);
  for (std::size_t j = 0; j < shots; ++j) {
    rng::Stream stream(seed, sequence_id, first_shot + static_cast<std::uint32_t>(j));
    const auto rec = readout::sample_shot(state, model, stream);
    out.ones += static_cast<std::size_t>(rec.bit);
    if (keep) out.records.push_back(rec);
  }
  return out;
}

inline void stamp(DataSet& ds, const device::DeviceSpec& d, const ExperimentPlan& p) {
  ds.kind = p.kind;
  ds.metadata.device_hash = io::device_hash(d);
  ds.metadata.plan_hash = io::plan_hash(p);
  ds.metadata.seed = p.global_seed;
}

inline void add_estimates(DataSet& ds, const std::vector<PointShots>& pts) {
  std::vector<double> p(pts.size()), se(pts.size()), n(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto est = readout::estimate_from_counts(pts[k].ones, pts[k].n);
    p[k] = est.p_hat;
    se[k] = est.standard_error;
    n[k] = static_cast<double>(est.shots);
  }
  ds.add("p_hat", std::move(p));
  ds.add("se", std::move(se));
  ds.add("shots", std::move(n));
}

inline void collect_shots(RunResult& out, std::vector<PointShots>& pts) {
  for (auto& p : pts) {
    out.shots.insert(out.shots.end(), p.records.begin(), p.records.end());
    p.records.clear();
  }
}

inline void require_kind(const ExperimentPlan& p, std::initializer_list<Kind> kinds, const char* who) {
  if (std::find(kinds.begin(), kinds.end(), p.kind) == kinds.end()) {
    throw UsageError(std::string(who) + ": plan kind '" + std::string(to_string(p.kind)) + "' not accepted");
  }
}

/// One simulated state per point, then shots; the shared shape of the
/// time-domain sweeps.
template <typename BuildState>
RunResult run_points(const device::DeviceSpec& d, const ExperimentPlan& plan, std::size_t n_points,
                     const RunOptions& opt, BuildState&& build) {
  std::vector<double> p_sim(n_points);
  std::vector<PointShots> pts(n_points);
  parallel_for(n_points, opt.workers, [&](std::size_t k) {
    const dynamics::DensityState s = build(k);
    p_sim[k] = readout::bright_population(s, d.readout);
    pts[k] = sample_point(s, d.readout, plan.global_seed, k, plan.shots_per_point, 0, opt.keep_shots);
  });
  RunResult out;
  out.data.add("p_sim", std::move(p_sim));
  add_estimates(out.data, pts);
  collect_shots(out, pts);
  return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Time-domain protocols
// ---------------------------------------------------------------------------

/// Rectangle drive over detuning x duration. Rows are ordered detuning-major.
inline RunResult run_rabi_chevron(const device::DeviceSpec& d, const ExperimentPlan& plan,
                                  const RunOptions& opt = {}) {
  detail::require_kind(plan, {Kind::rabi_chevron}, "run_rabi_chevron");
  plan.validate();
  const auto& det = plan.axes[0].values;
  const auto& tau = plan.axes[1].values;
  const auto model = dynamics::QubitModel::from_device(d);
  const auto eopt = dynamics::EvolveOptions::from_device(d);
  const auto init = dynamics::initial_state(d);
  const std::size_t nt = tau.size();
  auto out = detail::run_points(d, plan, det.size() * nt, opt, [&](std::size_t k) {
    const auto sequence = seq::build_rabi(d.pulses, det[k / nt], tau[k % nt]);
    return dynamics::evolve_final(init, sequence, model, eopt);
  });
  std::vector<double> dcol, tcol;
  for (double x : det)
    for (double t : tau) {
      dcol.push_back(x);
      tcol.push_back(t);
    }
  DataSet ds;
  ds.add(plan.axes[0].name, std::move(dcol));
  ds.add(plan.axes[1].name, std::move(tcol));
  for (auto& c : out.data.columns) ds.add(c.name, std::move(c.values));
  detail::stamp(ds, d, plan);
  out.data = std::move(ds);
  return out;
}

/// X_pi, delay (axis in us), readout.
inline RunResult run_t1(const device::DeviceSpec& d, const ExperimentPlan& plan, const RunOptions& opt = {}) {
  detail::require_kind(plan, {Kind::t1}, "run_t1");
  plan.validate();
  const auto& delay = plan.axes[0].values;
  device::PulseConfig pc = d.pulses;
  if (plan.pi_duration > 0.0) pc.xy_duration = plan.pi_duration;
  const auto model = dynamics::QubitModel::from_device(d);
  const auto eopt = dynamics::EvolveOptions::from_device(d);
  const auto init = dynamics::initial_state(d);
  auto out = detail::run_points(d, plan, delay.size(), opt, [&](std::size_t k) {
    return dynamics::evolve_final(init, seq::build_t1(pc, 1e3 * delay[k]), model, eopt);
  });
  out.data.columns.insert(out.data.columns.begin(), Column{plan.axes[0].name, delay});
  detail::stamp(out.data, d, plan);
  return out;
}

/// Two detuned X_pi/2 pulses around a delay (axis in us).
inline RunResult run_ramsey(const device::DeviceSpec& d, const ExperimentPlan& plan,
                            const RunOptions& opt = {}) {
  detail::require_kind(plan, {Kind::ramsey}, "run_ramsey");
  plan.validate();
  const auto& delay = plan.axes[0].values;
  const auto model = dynamics::QubitModel::from_device(d);
  const auto eopt = dynamics::EvolveOptions::from_device(d);
  const auto init = dynamics::initial_state(d);
  auto out = detail::run_points(d, plan, delay.size(), opt, [&](std::size_t k) {
    return dynamics::evolve_final(init, seq::build_ramsey(d.pulses, 1e3 * delay[k], plan.detuning), model,
                                  eopt);
  });
  out.data.columns.insert(out.data.columns.begin(), Column{plan.axes[0].name, delay});
  detail::stamp(out.data, d, plan);
  return out;
}

// ---------------------------------------------------------------------------
// Randomized benchmarking
// ---------------------------------------------------------------------------

/// Random Cliffords for sequence s at length n. Keyed only by (seed, n, s),
/// so reference and interleaved runs draw the same sequences.
inline std::vector<clifford::CliffordElement> draw_rb_sequence(std::uint64_t seed, std::uint32_t n,
                                                               std::uint32_t s) {
  rng::Stream stream(seed, (static_cast<std::uint64_t>(n) << 32) | s, kSequenceDrawIndex);
  std::vector<clifford::CliffordElement> seq(n);
  for (auto& c : seq) c = clifford::random_clifford(stream);
  return seq;
}

/// The full Clifford list executed for one sequence: the random draws, the
/// interleaved gate after each one when requested, then the recovery.
inline std::vector<clifford::CliffordElement> rb_schedule(const std::vector<clifford::CliffordElement>& draws,
                                                          bool interleaved, PhysicalGate gate) {
  std::vector<clifford::CliffordElement> full;
  full.reserve(2 * draws.size() + 1);
  const auto g = clifford::element_of(gate);
  for (auto c : draws) {
    full.push_back(c);
    if (interleaved) full.push_back(g);
  }
  full.push_back(clifford::recovery_gate(full));
  return full;
}

namespace detail {

/// Clifford-level depolarizing model: exact signed-axis rotations of the
/// Bloch vector with a contraction per random Clifford (clifford_p) and per
/// interleaved gate (gate_p). The recovery is noiseless.
inline dynamics::DensityState rb_fast_state(const std::vector<clifford::CliffordElement>& draws, bool interleaved,
                                            const ExperimentPlan& plan) {
  const auto& group = clifford::CliffordGroup::instance();
  std::array<double, 3> v{0.0, 0.0, 1.0};
  auto apply = [&](clifford::CliffordElement e, double scale) {
    const auto& m = group.axis_map(e);
    std::array<double, 3> w{};
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) w[i] += m[i][j] * v[j];
    for (auto& x : w) x *= scale;
    v = w;
  };
  const auto full = rb_schedule(draws, interleaved, plan.interleaved_gate);
  std::size_t k = 0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    apply(full[k++], plan.clifford_p);
    if (interleaved) apply(full[k++], plan.gate_p);
  }
  apply(full.back(), 1.0);
  return dynamics::DensityState::from_bloch(v[0], v[1], v[2]);
}

inline dynamics::DensityState rb_pulse_state(const device::DeviceSpec& d,
                                             const std::vector<clifford::CliffordElement>& draws, bool interleaved,
                                             const ExperimentPlan& plan) {
  // Identity elements keep one idle gate slot.
  const auto full = rb_schedule(draws, interleaved, plan.interleaved_gate);
  std::vector<PhysicalGate> gates;
  for (auto c : full) {
    const auto& dec = clifford::decompose(c);
    gates.insert(gates.end(), dec.begin(), dec.end());
  }
  const auto sequence = seq::build_rb(d.pulses, gates);
  return dynamics::evolve_final(dynamics::initial_state(d), sequence, dynamics::QubitModel::from_device(d),
                                dynamics::EvolveOptions::from_device(d));
}

} // namespace detail

/// One RB curve. shots_per_point is the total budget per length, split as
/// evenly as possible over the sequences (earlier sequences take the
/// remainder).
inline RunResult run_rb_curve(const device::DeviceSpec& d, const ExperimentPlan& plan, bool interleaved,
                              const RunOptions& opt = {}) {
  plan.validate();
  if (!is_rb(plan.kind)) throw UsageError("run_rb: plan kind must be rb_reference or rb_interleaved");
  if (plan.shots_per_point < static_cast<std::size_t>(plan.n_random_sequences)) {
    throw ConfigError("run_rb: shots_per_point must be at least n_random_sequences");
  }
  const auto& lengths = plan.axes[0].values;
  const auto n_seq = static_cast<std::size_t>(plan.n_random_sequences);
  const std::size_t items = lengths.size() * n_seq;
  std::vector<detail::PointShots> pts(items);
  std::vector<double> p_sim(items);
  parallel_for(items, opt.workers, [&](std::size_t k) {
    const auto n = static_cast<std::uint32_t>(lengths[k / n_seq]);
    const auto s = static_cast<std::uint32_t>(k % n_seq);
    const auto draws = draw_rb_sequence(plan.global_seed, n, s);
    const auto state = plan.rb_noise == RbNoiseLevel::clifford ? detail::rb_fast_state(draws, interleaved, plan)
                                                               : detail::rb_pulse_state(d, draws, interleaved, plan);
    p_sim[k] = readout::bright_population(state, d.readout);
    const std::size_t base = plan.shots_per_point / n_seq;
    const std::size_t shots = base + (s < plan.shots_per_point % n_seq ? 1 : 0);
    pts[k] = detail::sample_point(state, d.readout, plan.global_seed, (static_cast<std::uint64_t>(n) << 32) | s,
                                  shots, 0, opt.keep_shots);
  });

  RunResult out;
  std::vector<double> col_n, col_p, col_se, col_shots, col_seq_se, col_sim;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    std::size_t ones = 0, total = 0;
    double mean = 0.0, sq = 0.0, sim = 0.0;
    for (std::size_t s = 0; s < n_seq; ++s) {
      const auto& pt = pts[i * n_seq + s];
      ones += pt.ones;
      total += pt.n;
      const double ps = static_cast<double>(pt.ones) / static_cast<double>(pt.n);
      mean += ps;
      sq += ps * ps;
      sim += p_sim[i * n_seq + s];
    }
    const double m = static_cast<double>(n_seq);
    mean /= m;
    const double var = n_seq > 1 ? std::max(0.0, (sq - m * mean * mean) / (m - 1.0)) : 0.0;
    const auto est = readout::estimate_from_counts(ones, total);
    col_n.push_back(lengths[i]);
    col_p.push_back(est.p_hat);
    col_se.push_back(est.standard_error);
    col_shots.push_back(static_cast<double>(total));
    col_seq_se.push_back(std::sqrt(var / m));
    col_sim.push_back(sim / m);
  }
  out.data.add(plan.axes[0].name, std::move(col_n));
  out.data.add("p_sim", std::move(col_sim));
  out.data.add("p_hat", std::move(col_p));
  out.data.add("se", std::move(col_se));
  out.data.add("shots", std::move(col_shots));
  out.data.add("se_sequences", std::move(col_seq_se));
  detail::collect_shots(out, pts);
  ExperimentPlan tagged = plan;
  tagged.kind = interleaved ? Kind::rb_interleaved : Kind::rb_reference;
  detail::stamp(out.data, d, tagged);
  return out;
}

/// Reference and interleaved curves on paired sequences.
inline std::pair<RunResult, RunResult> run_rb(const device::DeviceSpec& d, const ExperimentPlan& plan,
                                              const RunOptions& opt = {}) {
  return {run_rb_curve(d, plan, false, opt), run_rb_curve(d, plan, true, opt)};
}

// ---------------------------------------------------------------------------
// Frequency-domain characterization
// ---------------------------------------------------------------------------

/// Steady state of the qubit under a CW tone at drive_ghz.
inline dynamics::DensityState cw_steady_state(const device::DeviceSpec& d, double drive_ghz, double rabi_rate,
                                              int levels) {
  const double delta = constants::two_pi * (drive_ghz - d.transmon.fq);
  const double eta = constants::two_pi * d.transmon.anharmonicity;
  const dynamics::Operator h =
      dynamics::frame_hamiltonian(levels, delta, eta) + dynamics::drive_hamiltonian(levels, rabi_rate, 0.0);
  const auto diss = dynamics::dissipators(levels, dynamics::NoiseChannels::from_device(d));
  return dynamics::steady_state(h, diss);
}

/// Resonator transmission probed at the |0>-dressed frequency while a CW
/// tone drives the qubit. The response mixes the two dressed lines by the
/// steady-state excitation (a saturation model, not a driven-cavity
/// simulation).
inline RunResult run_two_tone(const device::DeviceSpec& d, const ExperimentPlan& plan,
                              const RunOptions& opt = {}) {
  detail::require_kind(plan, {Kind::two_tone}, "run_two_tone");
  plan.validate();
  const auto& f = plan.axes[0].values;
  const double probe = readout::dressed_resonator_frequency(d.resonator.fr, d.coupling.chi, 0);
  const auto s0 = readout::s21_conditioned(probe, d, 0);
  const auto s1 = readout::s21_conditioned(probe, d, 1);
  std::vector<double> pe(f.size()), leak(f.size()), resp(f.size());
  parallel_for(f.size(), opt.workers, [&](std::size_t k) {
    const auto ss = cw_steady_state(d, f[k], plan.drive_amplitude, d.simulation.levels);
    const auto pops = dynamics::excited_population(ss);
    pe[k] = pops.excited;
    leak[k] = pops.leakage;
    const double p = std::clamp(pops.excited + pops.leakage, 0.0, 1.0);
    resp[k] = std::abs((1.0 - p) * s0 + p * s1);
  });
  RunResult out;
  out.data.add(plan.axes[0].name, f);
  out.data.add("p_excited", std::move(pe));
  out.data.add("p_leakage", std::move(leak));
  out.data.add("response", std::move(resp));
  detail::stamp(out.data, d, plan);
  return out;
}

/// Index of the largest deviation of `response` from its median.
inline std::size_t strongest_feature(const std::vector<double>& response) {
  std::vector<double> sorted = response;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  std::size_t best = 0;
  for (std::size_t k = 1; k < response.size(); ++k) {
    if (std::abs(response[k] - median) > std::abs(response[best] - median)) best = k;
  }
  return best;
}

/// Hanger transmission over the frequency axis, optionally with the qubit
/// in a definite state and additive complex gaussian noise.
inline RunResult run_vna_sweep(const device::DeviceSpec& d, const ExperimentPlan& plan,
                               const RunOptions& opt = {}) {
  detail::require_kind(plan, {Kind::vna_sweep}, "run_vna_sweep");
  plan.validate();
  const auto& f = plan.axes[0].values;
  const double fr = plan.qubit_state < 0
                        ? d.resonator.fr
                        : readout::dressed_resonator_frequency(d.resonator.fr, d.coupling.chi, plan.qubit_state);
  std::vector<double> re(f.size()), im(f.size()), mag(f.size());
  parallel_for(f.size(), opt.workers, [&](std::size_t k) {
    std::complex<double> s = readout::s21_hanger(f[k], fr, d.resonator.q_internal, d.resonator.q_external);
    if (plan.noise > 0.0) {
      rng::Stream stream(plan.global_seed, k, 0);
      const double nr = stream.normal();
      const double ni = stream.normal();
      s += plan.noise * std::complex<double>(nr, ni);
    }
    re[k] = s.real();
    im[k] = s.imag();
    mag[k] = std::abs(s);
  });
  RunResult out;
  out.data.add(plan.axes[0].name, f);
  out.data.add("s21_re", std::move(re));
  out.data.add("s21_im", std::move(im));
  out.data.add("s21_abs", std::move(mag));
  detail::stamp(out.data, d, plan);
  return out;
}

/// Dispatch on the plan kind. RB kinds return the requested curve only.
inline RunResult run(const device::DeviceSpec& d, const ExperimentPlan& plan, const RunOptions& opt = {}) {
  switch (plan.kind) {
  case Kind::rabi_chevron: return run_rabi_chevron(d, plan, opt);
  case Kind::t1: return run_t1(d, plan, opt);
  case Kind::ramsey: return run_ramsey(d, plan, opt);
  case Kind::rb_reference: return run_rb_curve(d, plan, false, opt);
  case Kind::rb_interleaved: return run_rb_curve(d, plan, true, opt);
  case Kind::two_tone: return run_two_tone(d, plan, opt);
  case Kind::vna_sweep: return run_vna_sweep(d, plan, opt);
  }
  throw UsageError("run: unknown plan kind");
}

} // namespace transmon::experiments
