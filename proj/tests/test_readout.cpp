#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "transmon/readout.hpp"

using namespace transmon;
using namespace transmon::readout;
using dynamics::DensityState;

namespace {

ReadoutModel clean_model() {
  ReadoutModel m;
  m.eps0 = 0.0;
  m.eps1 = 0.0;
  return m;
}

double mean_bit(const DensityState& s, const ReadoutModel& m, int n, std::uint64_t seed) {
  long ones = 0;
  for (int k = 0; k < n; ++k) {
    rng::Stream st(seed, 0, static_cast<std::uint32_t>(k));
    ones += sample_shot(s, m, st).bit;
  }
  return static_cast<double>(ones) / n;
}

double binomial_sigma(double p, int n) { return std::sqrt(p * (1 - p) / n); }

} // namespace

TEST(Discriminate, Examples) {
  const ReadoutModel m;
  EXPECT_EQ(discriminate(m.mean_g, m), 0);
  EXPECT_EQ(discriminate(m.mean_e, m), 1);
  EXPECT_EQ(discriminate(0.5 * (m.mean_g + m.mean_e), m), 0);
  ReadoutModel tilted;
  tilted.mean_g = {0.2, 1.0};
  tilted.mean_e = {-0.4, -0.7};
  EXPECT_EQ(discriminate({0.19, 0.9}, tilted), 0);
  EXPECT_EQ(discriminate({-0.3, -0.5}, tilted), 1);
  EXPECT_EQ(discriminate(0.5 * (tilted.mean_g + tilted.mean_e), tilted), 0);
}

TEST(SampleShot, GroundWithoutErrorAlwaysZero) {
  const auto m = clean_model();
  for (int k = 0; k < 5000; ++k) {
    rng::Stream st(3, 1, static_cast<std::uint32_t>(k));
    EXPECT_EQ(sample_shot(DensityState::ground(), m, st).bit, 0);
  }
}

TEST(SampleShot, ExcitedWithAssignmentError) {
  auto m = clean_model();
  m.eps1 = 0.05;
  const int n = 100000;
  EXPECT_NEAR(mean_bit(DensityState::excited(), m, n, 11), 0.95, 3 * binomial_sigma(0.95, n));
}

TEST(SampleShot, EqualSuperposition) {
  const int n = 100000;
  EXPECT_NEAR(mean_bit(DensityState::from_bloch(1, 0, 0), clean_model(), n, 12), 0.5,
              3 * binomial_sigma(0.5, n));
}

TEST(SampleShot, LeakageRecordedAsExcitedByDefault) {
  auto m = clean_model();
  EXPECT_EQ(mean_bit(DensityState::basis(3, 2), m, 200, 4), 1.0);
  m.leakage_as_excited = false;
  EXPECT_EQ(mean_bit(DensityState::basis(3, 2), m, 200, 4), 0.0);
}

TEST(SampleShot, StoredPointsRediscriminate) {
  ReadoutModel m;
  m.sigma = 1.5; // heavy overlap, many folds
  const auto s = DensityState::from_bloch(0.3, 0.1, 0.2);
  for (int k = 0; k < 20000; ++k) {
    rng::Stream st(99, 7, static_cast<std::uint32_t>(k));
    const auto shot = sample_shot(s, m, st);
    EXPECT_EQ(discriminate(shot.iq, m), shot.bit);
    EXPECT_EQ(shot.sequence_id, 7u);
    EXPECT_EQ(shot.shot_index, static_cast<std::uint32_t>(k));
  }
}

TEST(SampleShot, SameKeySameShot) {
  const ReadoutModel m;
  const auto s = DensityState::from_bloch(0, 0, 0);
  rng::Stream a(5, 9, 13), b(5, 9, 13);
  const auto x = sample_shot(s, m, a);
  const auto y = sample_shot(s, m, b);
  EXPECT_EQ(x.iq, y.iq);
  EXPECT_EQ(x.bit, y.bit);
  EXPECT_EQ(x.rng_stream_id, y.rng_stream_id);
}

TEST(SeparationFidelity, Limits) {
  ReadoutModel m;
  m.mean_g = {0.0, 0.0};
  m.mean_e = {1e-300, 0.0};
  EXPECT_NEAR(separation_fidelity(m), 0.5, 1e-12);
  m.mean_e = {1e3, 0.0};
  EXPECT_NEAR(separation_fidelity(m), 1.0, 1e-15);
  m.sigma = 0.0;
  EXPECT_THROW(separation_fidelity(m), DomainError);
}

TEST(SeparationFidelity, FourSigmaMatchesMonteCarlo) {
  ReadoutModel m;
  m.mean_g = {-0.5, 0.2};
  m.mean_e = {0.5, 0.2};
  m.sigma = 0.25; // separation 4 sigma
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> n01;
  const int n = 1000000;
  long correct = 0;
  for (int k = 0; k < n; ++k) {
    const int truth = k & 1;
    const auto mean = truth ? m.mean_e : m.mean_g;
    const std::complex<double> iq = mean + m.sigma * std::complex<double>(n01(gen), n01(gen));
    correct += discriminate(iq, m) == truth;
  }
  const double mc = static_cast<double>(correct) / n;
  const double f = separation_fidelity(m);
  EXPECT_NEAR(mc, f, 3 * binomial_sigma(f, n));
  EXPECT_NEAR(f, 1 - 0.5 * std::erfc(std::sqrt(2.0)), 1e-15);
}

TEST(EstimatePopulation, Examples) {
  std::vector<ShotRecord> ones(100);
  for (auto& s : ones) s.bit = 1;
  const auto e = estimate_population(ones);
  EXPECT_EQ(e.p_hat, 1.0);
  EXPECT_EQ(e.standard_error, 0.0);
  const auto h = estimate_from_counts(5000, 10000);
  EXPECT_DOUBLE_EQ(h.p_hat, 0.5);
  EXPECT_DOUBLE_EQ(h.standard_error, 0.005);
  EXPECT_THROW(estimate_population(std::vector<ShotRecord>{}), UsageError);
}

TEST(EstimatePopulation, SimulatedExcitedWithTenPercentError) {
  auto m = clean_model();
  m.eps1 = 0.1;
  std::vector<ShotRecord> shots;
  for (int k = 0; k < 40000; ++k) {
    rng::Stream st(77, 0, static_cast<std::uint32_t>(k));
    shots.push_back(sample_shot(DensityState::excited(), m, st));
  }
  const auto e = estimate_population(shots);
  EXPECT_NEAR(e.p_hat, 0.9, 3 * binomial_sigma(0.9, 40000));
  EXPECT_NEAR(e.standard_error, binomial_sigma(e.p_hat, 40000), 1e-15);
}

TEST(EstimatePopulation, StandardErrorScalesAsInverseRoot) {
  const ReadoutModel m = clean_model();
  const auto s = DensityState::thermal(2, 0.3);
  std::vector<double> scaled;
  for (int n : {100, 10000, 1000000}) {
    std::size_t ones = 0;
    for (int k = 0; k < n; ++k) {
      rng::Stream st(8, static_cast<std::uint64_t>(n), static_cast<std::uint32_t>(k));
      ones += static_cast<std::size_t>(sample_shot(s, m, st).bit);
    }
    scaled.push_back(estimate_from_counts(ones, static_cast<std::size_t>(n)).standard_error * std::sqrt(n));
  }
  const double ideal = std::sqrt(0.3 * 0.7);
  EXPECT_NEAR(scaled[0], ideal, 0.05);
  EXPECT_NEAR(scaled[1], ideal, 0.005);
  EXPECT_NEAR(scaled[2], ideal, 0.0005);
}

TEST(Visibility, RabiAmplitudeScaledByAssignmentErrors) {
  ReadoutModel m;
  m.eps0 = 0.04;
  m.eps1 = 0.07;
  // p_hat = eps0 + (1 - eps0 - eps1) P; linear regression of p_hat on P.
  const int shots = 20000;
  std::vector<double> x, y;
  for (int k = 0; k <= 20; ++k) {
    const double p = std::pow(std::sin(0.15 * k), 2);
    const auto s = DensityState::from_bloch(0, 0, 1 - 2 * p);
    x.push_back(p);
    y.push_back(mean_bit(s, m, shots, 1000 + static_cast<std::uint64_t>(k)));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double var_x = sxx / n - (sx / n) * (sx / n);
  const double se = std::sqrt(0.25 / shots / (n * var_x)); // worst-case binomial variance
  EXPECT_NEAR(slope, 1 - m.eps0 - m.eps1, 3 * se);
}

TEST(S21Hanger, Examples) {
  const double q = device::loaded_q(5.8e3, 12.9e3);
  EXPECT_NEAR(std::abs(s21_hanger(6.868, 6.868, 5.8e3, 12.9e3)), 1 - q / 12.9e3, 1e-15);
  EXPECT_NEAR(std::abs(s21_hanger(9.0, 6.868, 5.8e3, 12.9e3)), 1.0, 1e-3);
  EXPECT_THROW(s21_hanger(6.0, 6.868, 0.0, 12.9e3), DomainError);
  // minimum of |S21| sits at f_r
  double best = 1e9, at = 0;
  for (double f = 6.86; f < 6.876; f += 1e-6) {
    const double a = std::abs(s21_hanger(f, 6.868, 5.8e3, 12.9e3));
    if (a < best) best = a, at = f;
  }
  EXPECT_NEAR(at, 6.868, 1e-6);
}

TEST(S21Hanger, StateConditionedSplitIsTwoChi) {
  const auto soi = device::soi_device();
  const double f0 = dressed_resonator_frequency(soi.resonator.fr, soi.coupling.chi, 0);
  const double f1 = dressed_resonator_frequency(soi.resonator.fr, soi.coupling.chi, 1);
  EXPECT_NEAR((f0 - f1) * 1e3, 7.0, 1e-9);
  EXPECT_NEAR(std::abs(s21_conditioned(f0, soi, 0)), 1 - soi.resonator.q_total() / soi.resonator.q_external, 1e-12);
}

TEST(WriteShots, Format) {
  std::vector<ShotRecord> shots{{{0.5, -0.25}, 1, 3, 4, 0}};
  std::ostringstream os;
  write_shots(os, shots);
  EXPECT_EQ(os.str(), "sequence_id,shot_index,I,Q,bit\n3,4,0.5,-0.25,1\n");
}
