#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "transmon/dynamics.hpp"

using namespace transmon;
using namespace transmon::dynamics;
using seq::Envelope;
using seq::Pulse;
using seq::PulseSequence;

namespace {

const double kPi = 3.14159265358979323846;
const double kInf = std::numeric_limits<double>::infinity();

Pulse readout_at(double t) {
  return Pulse{Envelope{device::EnvelopeShape::rectangle, 500.0, 1.0, 0.0}, t, seq::Channel::RO, 0.0, 0.0};
}

Pulse rect(double start, double duration, double omega, double detuning_ghz = 0.0, double phase = 0.0) {
  return Pulse{Envelope{device::EnvelopeShape::rectangle, duration, omega, 0.0}, start, seq::Channel::XY,
               detuning_ghz, phase};
}

QubitModel model(double t1, double t2, int levels = 2) {
  return QubitModel{levels, -0.3, NoiseChannels::from_times(t1, t2)};
}

EvolveOptions opts(double dt = 0.05, bool record = false) { return EvolveOptions{dt, 1.0, record, false}; }

} // namespace

TEST(ExcitedPopulation, Examples) {
  EXPECT_EQ(excited_population(DensityState::ground()).excited, 0.0);
  EXPECT_EQ(excited_population(DensityState::excited()).excited, 1.0);
  EXPECT_EQ(excited_population(DensityState::from_bloch(0, 0, 0)).excited, 0.5);
  const auto p = excited_population(DensityState::basis(3, 2));
  EXPECT_EQ(p.excited, 0.0);
  EXPECT_EQ(p.leakage, 1.0);
}

TEST(NoiseChannels, Rates) {
  const auto n = NoiseChannels::from_times(27.0, 6.6);
  EXPECT_NEAR(n.gamma1, 1.0 / 27.0, 1e-15);
  EXPECT_NEAR(n.gamma_phi, 1.0 / 6.6 - 0.5 / 27.0, 1e-15);
  EXPECT_THROW(NoiseChannels::from_times(3.0, 6.5), ConfigError);
  EXPECT_EQ(NoiseChannels::from_times(kInf, kInf).gamma_phi, 0.0);
}

TEST(Evolve, AmplitudeDampingIdle) {
  const double t1 = 3.5;
  const PulseSequence s({readout_at(10000.0)});
  const auto traj = evolve(DensityState::excited(), s, model(t1, 2 * t1), EvolveOptions{0.05, 10.0, true, true});
  ASSERT_GT(traj.times.size(), 100u);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    EXPECT_NEAR(traj.states[k].population(1), std::exp(-traj.times[k] * 1e-3 / t1), 1e-6);
  }
}

TEST(Evolve, AmplitudeDampingUnderZeroDrive) {
  // Same decay through the RK4 path: a zero-amplitude pulse.
  const double t1 = 3.5;
  const PulseSequence s({rect(0.0, 2000.0, 0.0), readout_at(2000.0)});
  const auto traj = evolve(DensityState::excited(), s, model(t1, 2 * t1), opts(0.5, true));
  for (std::size_t k = 0; k < traj.times.size(); k += 97) {
    EXPECT_NEAR(traj.states[k].population(1), std::exp(-traj.times[k] * 1e-3 / t1), 1e-6);
  }
}

TEST(Evolve, ResonantRabi) {
  const double omega = kPi / 30.0;
  for (double tau : {5.0, 30.0, 47.5, 60.0, 91.0}) {
    const PulseSequence s({rect(0.0, tau, omega), readout_at(tau)});
    const auto f = evolve_final(DensityState::ground(), s, model(kInf, kInf), opts());
    const double expect = std::pow(std::sin(omega * tau / 2), 2);
    EXPECT_NEAR(f.population(1), expect, 1e-6) << tau;
  }
}

TEST(Evolve, PiPulseGivesFullInversion) {
  device::PulseConfig cfg;
  for (auto shape : {device::EnvelopeShape::rectangle, device::EnvelopeShape::gaussian}) {
    cfg.xy_shape = shape;
    const auto f = evolve_final(DensityState::ground(), seq::build_t1(cfg, 0.0), model(kInf, kInf), opts());
    EXPECT_NEAR(f.population(1), 1.0, 1e-6);
  }
}

TEST(Evolve, DetunedRabiMatchesClosedForm) {
  const double omega = kPi / 30.0;
  for (double det_mhz : {-20.0, -5.0, 3.0, 12.5, 40.0}) {
    for (double tau : {10.0, 33.0, 120.0, 200.0}) {
      const PulseSequence s({rect(0.0, tau, omega, det_mhz * 1e-3), readout_at(tau)});
      const auto f = evolve_final(DensityState::ground(), s, model(kInf, kInf), opts());
      const double delta = 2 * kPi * det_mhz * 1e-3;
      // independent two-level formula
      const double w = std::sqrt(omega * omega + delta * delta);
      const double expect = omega * omega / (w * w) * std::pow(std::sin(w * tau / 2), 2);
      EXPECT_NEAR(f.population(1), expect, 1e-6) << det_mhz << " " << tau;
      EXPECT_NEAR(rabi_closed_form(omega, delta, tau), expect, 1e-14);
    }
  }
}

TEST(Evolve, ChevronSymmetricInDetuning) {
  const double omega = kPi / 30.0;
  for (double det : {0.004, 0.017}) {
    const PulseSequence a({rect(0.0, 77.0, omega, det), readout_at(77.0)});
    const PulseSequence b({rect(0.0, 77.0, omega, -det), readout_at(77.0)});
    EXPECT_NEAR(evolve_final(DensityState::ground(), a, model(20.0, 10.0), opts()).population(1),
                evolve_final(DensityState::ground(), b, model(20.0, 10.0), opts()).population(1), 1e-12);
  }
}

TEST(RamseyClosedForm, Examples) {
  EXPECT_DOUBLE_EQ(ramsey_closed_form(0.0, 0.001, 27.0, 6.6), 1.0);
  EXPECT_NEAR(ramsey_closed_form(1e9, 0.001, 27.0, 6.6), 0.5, 1e-12);
  EXPECT_NEAR(ramsey_closed_form(500.0, 0.001, 27.0, kInf), 0.0, 1e-12);
}

TEST(Evolve, ShortPulseRamseyMatchesClosedForm) {
  device::PulseConfig cfg;
  cfg.xy_shape = device::EnvelopeShape::rectangle;
  cfg.xy_duration = 1.0;
  const double t1 = 3.5, t2 = 2.2, det = 0.0002;
  double worst = 0.0;
  for (double tau = 0.0; tau <= 3 * t2 * 1e3; tau += 110.0) {
    const auto f = evolve_final(DensityState::ground(), seq::build_ramsey(cfg, tau, det), model(t1, t2), opts(0.01));
    worst = std::max(worst, std::abs(f.population(1) - ramsey_closed_form(tau, det, t1, t2)));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Evolve, RamseyFringeFrequencyEqualsDetuning) {
  device::PulseConfig cfg;
  const double det = 0.002; // 2 MHz, 6 periods in 3 us
  std::vector<double> tau, p;
  for (double t = 0.0; t <= 3000.0; t += 5.0) {
    tau.push_back(t);
    p.push_back(evolve_final(DensityState::ground(), seq::build_ramsey(cfg, t, det), model(kInf, kInf), opts())
                    .population(1));
  }
  // minima by parabolic interpolation
  std::vector<double> minima;
  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    if (p[k] < p[k - 1] && p[k] <= p[k + 1]) {
      const double denom = p[k - 1] - 2 * p[k] + p[k + 1];
      minima.push_back(tau[k] + 0.5 * 5.0 * (p[k - 1] - p[k + 1]) / denom);
    }
  }
  ASSERT_GE(minima.size(), 5u);
  const double period = (minima.back() - minima.front()) / static_cast<double>(minima.size() - 1);
  EXPECT_NEAR(1.0 / period, det, 0.001 * det);
}

TEST(Evolve, UnitaryWithoutNoise) {
  device::PulseConfig cfg;
  const std::vector<PhysicalGate> gates{PhysicalGate::X_pi2, PhysicalGate::Y_pi, PhysicalGate::I,
                                        PhysicalGate::X_mpi2, PhysicalGate::Y_pi2};
  const auto traj = evolve(DensityState::ground(), seq::build_rb(cfg, gates), model(kInf, kInf), opts(0.05, true));
  for (const auto& s : traj.states) EXPECT_NEAR(s.purity(), 1.0, 1e-9);
}

TEST(Evolve, PhysicalAlongLongNoisyTrajectory) {
  device::PulseConfig cfg;
  auto m = model(3.5, 2.2, 3);
  const auto traj = evolve(DensityState::ground(3), seq::build_ramsey(cfg, 10000.0, 0.001), m,
                           EvolveOptions{0.02, 5.0, true, true});
  for (const auto& s : traj.states) {
    EXPECT_LT(std::abs(s.trace() - 1.0), 1e-9);
    EXPECT_LT(s.hermiticity_error(), 1e-12);
    EXPECT_GE(s.min_eigenvalue(), -1e-9);
  }
}

TEST(Evolve, HalvingDefaultStepChangesLittle) {
  device::PulseConfig cfg;
  const std::vector<PhysicalGate> gates{PhysicalGate::X_pi2, PhysicalGate::Y_pi, PhysicalGate::X_pi};
  const auto s = seq::build_rb(cfg, gates);
  const auto a = evolve_final(DensityState::ground(), s, model(3.5, 2.2), opts(0.05));
  const auto b = evolve_final(DensityState::ground(), s, model(3.5, 2.2), opts(0.025));
  EXPECT_LT(std::abs(a.population(1) - b.population(1)), 1e-7);
}

TEST(Evolve, StepBoundEnforced) {
  const PulseSequence s({rect(0.0, 30.0, kPi / 30.0), readout_at(30.0)});
  EXPECT_THROW(evolve_final(DensityState::ground(), s, model(kInf, kInf), opts(1.0)), ConfigError);
  // the third level rotates at 2 pi eta and tightens the bound
  EXPECT_THROW(evolve_final(DensityState::ground(3), s, model(kInf, kInf, 3), opts(0.05)), ConfigError);
  EXPECT_NO_THROW(evolve_final(DensityState::ground(3), s, model(kInf, kInf, 3), opts(0.02)));
  EXPECT_THROW(evolve_final(DensityState::ground(3), s, model(kInf, kInf, 2), opts(0.02)), ConfigError);
}

TEST(Evolve, ThreeLevelLeakageFromShortPulse) {
  // A 4 ns pi pulse has bandwidth comparable to eta; some |2> population appears.
  const PulseSequence s({rect(0.0, 4.0, kPi / 4.0), readout_at(4.0)});
  const auto f = evolve_final(DensityState::ground(3), s, model(kInf, kInf, 3), opts(0.002));
  EXPECT_GT(f.population(2), 1e-3);
  EXPECT_NEAR(f.trace(), 1.0, 1e-9);
}

TEST(SteadyState, DampingRelaxesToGround) {
  const auto d = dissipators(2, NoiseChannels::from_times(10.0, 5.0));
  const auto s = steady_state(frame_hamiltonian(2, 0.0, 0.0), d);
  EXPECT_NEAR(s.population(0), 1.0, 1e-12);
}

TEST(SteadyState, StrongResonantDriveSaturates) {
  const auto d = dissipators(2, NoiseChannels::from_times(10.0, 5.0));
  const auto s = steady_state(drive_hamiltonian(2, 0.5, 0.0), d);
  EXPECT_NEAR(s.population(1), 0.5, 1e-4);
}

TEST(WriteTrajectory, Columns) {
  const PulseSequence s({rect(0.0, 1.0, 0.1), readout_at(1.0)});
  const auto traj = evolve(DensityState::ground(3), s, model(kInf, kInf, 3), opts(0.02, true));
  std::ostringstream os;
  write_trajectory(os, traj);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "time_ns,P0,P1,P2");
}
