#pragma once

// Density-matrix evolution of a driven transmon (2 or 3 levels) with
// amplitude damping and pure dephasing.
//
// Time is in ns and angular rates in rad/ns inside this module; decoherence
// rates are stored in 1/us as they are quoted.
//
// Frames: idle segments evolve in the frame rotating at the qubit frequency
// using the exact exponential of the idle Liouvillian. Each pulse is
// integrated with classical RK4 in the frame of its own drive frequency;
// the state is rotated into and out of that frame at the pulse boundaries,
// which is what turns a detuned drive into Ramsey fringes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "transmon/constants.hpp"
#include "transmon/device_model.hpp"
#include "transmon/errors.hpp"
#include "transmon/sequencer.hpp"

namespace transmon::dynamics {

using cd = std::complex<double>;
using Operator = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using SuperOperator = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, 9, 9>;

/// Qubit density operator, dimension 2 or 3.
class DensityState {
public:
  DensityState() : rho_(Operator::Zero(2, 2)) { rho_(0, 0) = 1.0; }

  explicit DensityState(Operator rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols() || (rho_.rows() != 2 && rho_.rows() != 3)) {
      throw ConfigError("DensityState: dimension must be 2 or 3");
    }
  }

  static DensityState basis(int dim, int level) {
    Operator r = Operator::Zero(dim, dim);
    r(level, level) = 1.0;
    return DensityState(r);
  }
  static DensityState ground(int dim = 2) { return basis(dim, 0); }
  static DensityState excited(int dim = 2) { return basis(dim, 1); }

  /// diag(1 - p, p, 0...).
  static DensityState thermal(int dim, double p_excited) {
    Operator r = Operator::Zero(dim, dim);
    r(0, 0) = 1.0 - p_excited;
    r(1, 1) = p_excited;
    return DensityState(r);
  }

  /// Two-level state with Bloch vector (x, y, z); z = +1 is the ground state.
  static DensityState from_bloch(double x, double y, double z) {
    Operator r(2, 2);
    r(0, 0) = 0.5 * (1.0 + z);
    r(1, 1) = 0.5 * (1.0 - z);
    r(0, 1) = 0.5 * cd(x, -y);
    r(1, 0) = 0.5 * cd(x, y);
    return DensityState(r);
  }

  int dim() const { return static_cast<int>(rho_.rows()); }
  const Operator& matrix() const { return rho_; }
  Operator& matrix() { return rho_; }

  double population(int level) const { return level < dim() ? rho_(level, level).real() : 0.0; }
  double trace() const { return rho_.trace().real(); }
  double purity() const { return (rho_ * rho_).trace().real(); }

  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

  double min_eigenvalue() const {
    const Operator h = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  /// Throws unless Hermitian, unit trace, and positive within tolerances.
  void check(double herm_tol = 1e-12, double trace_tol = 1e-9, double eig_tol = 1e-9) const {
    if (hermiticity_error() > herm_tol) throw std::runtime_error("DensityState: not Hermitian");
    if (std::abs(trace() - 1.0) > trace_tol) throw std::runtime_error("DensityState: trace != 1");
    if (min_eigenvalue() < -eig_tol) throw std::runtime_error("DensityState: negative eigenvalue");
  }

private:
  Operator rho_;
};

/// Decoherence rates in 1/us.
struct NoiseChannels {
  double gamma1 = 0.0;
  double gamma_phi = 0.0;

  static NoiseChannels from_times(double t1_us, double t2_us) {
    NoiseChannels n;
    n.gamma1 = std::isinf(t1_us) ? 0.0 : 1.0 / t1_us;
    const double gamma2 = std::isinf(t2_us) ? 0.0 : 1.0 / t2_us;
    n.gamma_phi = gamma2 - 0.5 * n.gamma1;
    if (n.gamma_phi < 0.0 && n.gamma_phi > -1e-15) n.gamma_phi = 0.0;
    n.validate();
    return n;
  }

  static NoiseChannels from_device(const device::DeviceSpec& d) {
    return from_times(d.transmon.t1, d.transmon.t2);
  }

  void validate() const {
    if (gamma1 < 0.0) throw ConfigError("noise: gamma1 must be non-negative");
    if (gamma_phi < 0.0) throw ConfigError("noise: T2 > 2 T1 implies negative pure dephasing");
  }
};

/// Ladder lowering operator a = sum sqrt(k) |k-1><k|.
inline Operator lowering(int dim) {
  Operator a = Operator::Zero(dim, dim);
  for (int k = 1; k < dim; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

inline Operator number(int dim) {
  Operator n = Operator::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

/// Bare Hamiltonian in the frame rotating at the drive: level k sits at
/// -k delta, plus the anharmonic shift on |2>. Angular units.
inline Operator frame_hamiltonian(int dim, double delta, double anharmonicity_rad) {
  Operator h = Operator::Zero(dim, dim);
  for (int k = 1; k < dim; ++k) h(k, k) = -static_cast<double>(k) * delta;
  if (dim == 3) h(2, 2) += anharmonicity_rad;
  return h;
}

/// Drive term (omega/2)(e^{-i phase} a + e^{i phase} a^dag); for two levels
/// this is (omega/2)(cos(phase) sigma_x + sin(phase) sigma_y).
inline Operator drive_hamiltonian(int dim, double omega, double phase) {
  const Operator a = lowering(dim);
  const cd e = std::polar(1.0, phase);
  return 0.5 * omega * (std::conj(e) * a + e * a.adjoint());
}

struct Dissipators {
  Operator lower;   // sqrt(gamma1) a
  Operator dephase; // sqrt(2 gamma_phi) n
};

/// Collapse operators in 1/ns. sqrt(2 gamma_phi) n reproduces
/// (gamma_phi/2) D[sigma_z] on the qubit subspace.
inline Dissipators dissipators(int dim, const NoiseChannels& noise) {
  return {std::sqrt(noise.gamma1 * 1e-3) * lowering(dim),
          std::sqrt(2.0 * noise.gamma_phi * 1e-3) * number(dim)};
}

/// Right-hand side of the master equation.
inline Operator lindblad_rhs(const Operator& h, const Dissipators& d, const Operator& rho) {
  const cd minus_i(0.0, -1.0);
  Operator out = minus_i * (h * rho - rho * h);
  for (const Operator* l : {&d.lower, &d.dephase}) {
    const Operator ldl = l->adjoint() * (*l);
    out += (*l) * rho * l->adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

/// Column-stacked superoperator of the master equation with time-independent H.
inline SuperOperator liouvillian(const Operator& h, const Dissipators& d) {
  const int n = static_cast<int>(h.rows());
  SuperOperator lv = SuperOperator::Zero(n * n, n * n);
  // vec(A rho B) = (B^T kron A) vec(rho); build column by column from basis matrices.
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) {
      Operator e = Operator::Zero(n, n);
      e(r, c) = 1.0;
      const Operator img = lindblad_rhs(h, d, e);
      for (int cc = 0; cc < n; ++cc) {
        for (int rr = 0; rr < n; ++rr) lv(cc * n + rr, c * n + r) = img(rr, cc);
      }
    }
  }
  return lv;
}

inline Operator apply_super(const SuperOperator& s, const Operator& rho) {
  const int n = static_cast<int>(rho.rows());
  Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, 9, 1> v(n * n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) v(c * n + r) = rho(r, c);
  const Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, 9, 1> w = s * v;
  Operator out(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) out(r, c) = w(c * n + r);
  return out;
}

/// Steady state of a time-independent master equation (unit trace).
inline DensityState steady_state(const Operator& h, const Dissipators& d) {
  const int n = static_cast<int>(h.rows());
  SuperOperator lv = liouvillian(h, d);
  Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, 9, 1> rhs =
      Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, 9, 1>::Zero(n * n);
  for (int k = 0; k < n * n; ++k) lv(0, k) = 0.0;
  for (int k = 0; k < n; ++k) lv(0, k * n + k) = 1.0;
  rhs(0) = 1.0;
  const Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, 9, 1> v = lv.fullPivLu().solve(rhs);
  Operator rho(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) rho(r, c) = v(c * n + r);
  rho = 0.5 * (rho + rho.adjoint());
  return DensityState(rho);
}

struct EvolveOptions {
  double dt = 0.05;       // ns, RK4 step during pulses
  double dt_idle = 1.0;   // ns, sampling of idles when recording
  bool record = true;     // keep every step; otherwise only the final state
  bool check_physical = false;

  static EvolveOptions from_device(const device::DeviceSpec& d) {
    return {d.simulation.dt_pulse, d.simulation.dt_idle, false, false};
  }
};

struct Trajectory {
  std::vector<double> times; // ns
  std::vector<DensityState> states;

  const DensityState& final_state() const { return states.back(); }
};

/// Physical inputs of the evolution, taken from a device or set directly.
struct QubitModel {
  int levels = 2;
  double anharmonicity = -0.3; // GHz
  NoiseChannels noise;

  static QubitModel from_device(const device::DeviceSpec& d) {
    return {d.simulation.levels, d.transmon.anharmonicity, NoiseChannels::from_device(d)};
  }
};

namespace detail {

/// Rotation between the qubit frame and the frame of a drive detuned by
/// delta (rad/ns): rho_drive = V rho_qubit V^dag, V = exp(i delta n t).
inline Operator frame_rotation(int dim, double delta, double t) {
  Operator v = Operator::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) v(k, k) = std::polar(1.0, delta * static_cast<double>(k) * t);
  return v;
}

inline void check_step_size(double dt, double delta, double omega_peak, double gamma_per_ns,
                            double level2_rad, int dim) {
  double rate = std::max({std::abs(delta), std::abs(omega_peak), gamma_per_ns});
  if (dim == 3) rate = std::max(rate, std::abs(level2_rad));
  if (dt * rate >= 0.05) {
    throw ConfigError("evolve: step size too large (dt * max rate = " + std::to_string(dt * rate) +
                      " rad, must be < 0.05)");
  }
}

} // namespace detail

/// Integrates the master equation across the schedule up to the start of
/// readout.
inline Trajectory evolve(const DensityState& initial, const seq::PulseSequence& sequence,
                         const QubitModel& model, const EvolveOptions& opt) {
  if (!(opt.dt > 0.0) || !(opt.dt_idle > 0.0)) throw ConfigError("evolve: dt must be positive");
  const int dim = initial.dim();
  if (dim != model.levels) throw ConfigError("evolve: state dimension does not match model");
  model.noise.validate();

  const Dissipators diss = dissipators(dim, model.noise);
  const double eta_rad = constants::two_pi * model.anharmonicity;
  const double gamma_ns = 1e-3 * std::max(model.noise.gamma1 * 2.0, model.noise.gamma_phi * 8.0);

  Trajectory traj;
  Operator rho = initial.matrix();
  double t = 0.0;
  auto push = [&](double time, const Operator& r) {
    if (opt.check_physical) DensityState(r).check();
    if (opt.record) {
      traj.times.push_back(time);
      traj.states.emplace_back(r);
    }
  };
  push(t, rho);

  // Idle propagator in the qubit frame: only the anharmonic level rotates.
  const SuperOperator idle_gen = liouvillian(frame_hamiltonian(dim, 0.0, eta_rad), diss);

  for (const auto& seg : sequence.segments()) {
    const double duration = seg.duration();
    if (duration <= 0.0) continue;
    if (!seg.pulse) {
      if (!opt.record) {
        rho = apply_super((idle_gen * duration).exp(), rho);
        t = seg.end;
        if (opt.check_physical) DensityState(rho).check();
        continue;
      }
      const int steps = std::max(1, static_cast<int>(std::ceil(duration / opt.dt_idle - 1e-9)));
      const double h = duration / steps;
      const SuperOperator prop = (idle_gen * h).exp();
      for (int s = 0; s < steps; ++s) {
        rho = apply_super(prop, rho);
        t = seg.start + (s + 1) * h;
        push(t, rho);
      }
      continue;
    }

    const seq::Pulse& p = *seg.pulse;
    const double delta = constants::two_pi * p.drive_detuning;
    const Operator h0 = frame_hamiltonian(dim, delta, eta_rad);
    detail::check_step_size(opt.dt, delta, p.envelope.peak_amplitude, gamma_ns,
                            dim == 3 ? h0(2, 2).real() : 0.0, dim);

    Operator v = detail::frame_rotation(dim, delta, seg.start);
    rho = v * rho * v.adjoint();

    const Operator drive_unit = drive_hamiltonian(dim, 1.0, p.phase);
    // Stage times are clamped so rounding at the window edges cannot switch
    // the drive off.
    auto hamiltonian = [&](double local_t) -> Operator {
      return h0 + p.envelope.value(std::clamp(local_t, 0.0, duration)) * drive_unit;
    };

    const int steps = std::max(1, static_cast<int>(std::ceil(duration / opt.dt - 1e-9)));
    const double h = duration / steps;
    for (int s = 0; s < steps; ++s) {
      const double lt = s * h;
      const Operator h_start = hamiltonian(lt);
      const Operator h_mid = hamiltonian(lt + 0.5 * h);
      const Operator h_end = hamiltonian((s + 1) * h);
      const Operator k1 = lindblad_rhs(h_start, diss, rho);
      const Operator k2 = lindblad_rhs(h_mid, diss, rho + 0.5 * h * k1);
      const Operator k3 = lindblad_rhs(h_mid, diss, rho + 0.5 * h * k2);
      const Operator k4 = lindblad_rhs(h_end, diss, rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (opt.record || opt.check_physical) {
        const Operator w = detail::frame_rotation(dim, delta, seg.start + lt + h);
        push(seg.start + lt + h, w.adjoint() * rho * w);
      }
    }

    v = detail::frame_rotation(dim, delta, seg.end);
    rho = v.adjoint() * rho * v;
    t = seg.end;
  }

  if (!opt.record) {
    traj.times.push_back(t);
    traj.states.emplace_back(rho);
  }
  return traj;
}

inline DensityState evolve_final(const DensityState& initial, const seq::PulseSequence& sequence,
                                 const QubitModel& model, EvolveOptions opt) {
  opt.record = false;
  return evolve(initial, sequence, model, opt).final_state();
}

/// Thermal initial state at the device's configured excited-state population.
inline DensityState initial_state(const device::DeviceSpec& d) {
  return DensityState::thermal(d.simulation.levels, d.transmon.thermal_population);
}

struct Populations {
  double excited;
  double leakage; // population of |2>, zero for two levels
};

inline Populations excited_population(const DensityState& s) {
  return {s.population(1), s.dim() == 3 ? s.population(2) : 0.0};
}

/// Ramsey fringe with ideal instantaneous pi/2 pulses.
/// tau in ns, detuning in GHz, times in us.
inline double ramsey_closed_form(double tau_ns, double detuning_ghz, double /*t1_us*/, double t2_us) {
  const double decay = std::isinf(t2_us) ? 1.0 : std::exp(-tau_ns * 1e-3 / t2_us);
  return 0.5 + 0.5 * decay * std::cos(constants::two_pi * detuning_ghz * tau_ns);
}

/// Detuned two-level Rabi formula; omega and delta in rad/ns, tau in ns.
inline double rabi_closed_form(double omega, double delta, double tau) {
  const double w2 = omega * omega + delta * delta;
  if (w2 == 0.0) return 0.0;
  const double s = std::sin(0.5 * std::sqrt(w2) * tau);
  return omega * omega / w2 * s * s;
}

/// Writes "time_ns,P0,P1[,P2]" rows.
inline void write_trajectory(std::ostream& os, const Trajectory& traj) {
  const int dim = traj.states.empty() ? 2 : traj.states.front().dim();
  os << "time_ns,P0,P1" << (dim == 3 ? ",P2" : "") << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << traj.times[k];
    for (int l = 0; l < dim; ++l) os << ',' << traj.states[k].population(l);
    os << '\n';
  }
}

} // namespace transmon::dynamics
