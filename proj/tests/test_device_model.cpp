#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "transmon/device_model.hpp"

using namespace transmon;
using namespace transmon::device;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Independent evaluation of (Phi0/2pi)^2 / L / h, straight from SI values.
double ej_oracle_ghz(double l_nh) {
  const double phi0 = 2.067833848e-15;
  const double h = 6.62607015e-34;
  const double pi = 3.14159265358979323846;
  return (phi0 / (2 * pi)) * (phi0 / (2 * pi)) / (l_nh * 1e-9) / h / 1e9;
}

} // namespace

TEST(EcFromAnharmonicity, Examples) {
  EXPECT_DOUBLE_EQ(ec_from_anharmonicity(-0.260), 0.260);
  EXPECT_DOUBLE_EQ(ec_from_anharmonicity(-0.300), 0.300);
  EXPECT_DOUBLE_EQ(ec_from_anharmonicity(-1.0), 1.0);
}

TEST(EcFromAnharmonicity, RejectsNonNegative) {
  EXPECT_THROW(ec_from_anharmonicity(0.0), DomainError);
  EXPECT_THROW(ec_from_anharmonicity(0.1), DomainError);
  EXPECT_THROW(ec_from_anharmonicity(std::nan("")), DomainError);
}

TEST(TransmonFrequency, Examples) {
  EXPECT_LT(rel(transmon_frequency(13.1, 0.260), 4.962), 0.01);
  EXPECT_LT(rel(transmon_frequency(14.8, 0.300), 5.652), 0.01);
  EXPECT_NEAR(transmon_frequency(0.125, 1.0), 0.0, 1e-15);
  EXPECT_THROW(transmon_frequency(0.0, 0.3), DomainError);
  EXPECT_THROW(transmon_frequency(10.0, -0.3), DomainError);
}

TEST(EjFromSpectrum, Examples) {
  EXPECT_LT(rel(ej_from_spectrum(4.962, -0.260), 13.1), 0.01);
  EXPECT_LT(rel(ej_from_spectrum(5.652, -0.300), 14.8), 0.01);
  EXPECT_NEAR(ej_from_spectrum(0.0, -1.0), 0.125, 1e-15);
  EXPECT_THROW(ej_from_spectrum(5.0, 0.2), DomainError);
  EXPECT_THROW(ej_from_spectrum(-1.0, -0.2), DomainError);
}

TEST(EjFromSpectrum, RoundTripSweep) {
  for (int i = 0; i <= 25; ++i) {
    for (int k = 0; k <= 8; ++k) {
      const double ej = 5.0 + i;
      const double ec = 0.1 + 0.05 * k;
      const double back = ej_from_spectrum(transmon_frequency(ej, ec), -ec);
      EXPECT_LT(rel(back, ej), 1e-9) << ej << " " << ec;
    }
  }
}

TEST(EjFromInductance, Examples) {
  EXPECT_NEAR(ej_from_inductance(22.0, 2), ej_oracle_ghz(11.0), 1e-9);
  EXPECT_NEAR(ej_from_inductance(22.0, 2), 14.9, 0.05);
  EXPECT_LT(rel(ej_from_inductance(22.0, 2), 14.8), 0.02);
  EXPECT_DOUBLE_EQ(ej_from_inductance(44.0, 4), ej_from_inductance(22.0, 2));
  EXPECT_NEAR(ej_from_inductance(22.0, 1), 0.5 * ej_from_inductance(22.0, 2), 1e-12);
  EXPECT_THROW(ej_from_inductance(0.0, 2), DomainError);
  EXPECT_THROW(ej_from_inductance(22.0, 0), DomainError);
}

TEST(SquidEj, Examples) {
  EXPECT_DOUBLE_EQ(squid_ej(14.8, 0.0), 14.8);
  EXPECT_NEAR(squid_ej(14.8, 0.5), 0.0, 1e-14);
  EXPECT_NEAR(squid_ej(14.8, 1.0 / 3.0), 7.4, 1e-12);
  EXPECT_THROW(squid_ej(0.0, 0.1), DomainError);
}

TEST(SquidEj, EvenPeriodicFlatAtZero) {
  for (double phi = -1.3; phi <= 1.3; phi += 0.0625) {
    EXPECT_NEAR(squid_ej(14.8, phi), squid_ej(14.8, -phi), 1e-12);
    EXPECT_NEAR(squid_ej(14.8, phi), squid_ej(14.8, phi + 1.0), 1e-12);
    EXPECT_LE(squid_ej(14.8, phi), 14.8);
  }
  const double h = 1e-5;
  const double slope = (squid_ej(14.8, h) - squid_ej(14.8, -h)) / (2 * h);
  EXPECT_LT(std::abs(slope), 1e-8);
}

TEST(CouplingFromChi, Examples) {
  EXPECT_NEAR(coupling_from_chi(0.0012, -1.906, -0.260), 0.138, 0.0005);
  EXPECT_LT(rel(coupling_from_chi(0.0012, -1.906, -0.260), 0.135), 0.03);
  EXPECT_LT(rel(coupling_from_chi(0.0035, -1.491, -0.300), 0.177), 0.01);
  EXPECT_DOUBLE_EQ(coupling_from_chi(0.0, -1.5, -0.3), 0.0);
}

TEST(CouplingFromChi, NegativeRadicandNamesInputs) {
  try {
    coupling_from_chi(-0.0012, -1.906, -0.260);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("chi=-0.0012"), std::string::npos) << msg;
    EXPECT_NE(msg.find("detuning=-1.906"), std::string::npos) << msg;
  }
}

TEST(ChiFromCoupling, Examples) {
  EXPECT_LT(rel(chi_from_coupling(0.177, -1.491, -0.300), 0.0035), 0.01);
  EXPECT_LT(rel(chi_from_coupling(0.138, -1.906, -0.260), 0.0012), 0.03);
  EXPECT_DOUBLE_EQ(chi_from_coupling(0.0, -1.5, -0.3), 0.0);
  EXPECT_THROW(chi_from_coupling(0.1, 0.0, -0.3), DomainError);
  EXPECT_THROW(chi_from_coupling(0.1, 0.3, -0.3), DomainError);
}

TEST(ChiFromCoupling, RoundTripSweep) {
  for (double chi : {1e-4, 5e-4, 0.0012, 0.0035, 0.01}) {
    for (double delta : {-3.0, -1.906, -1.491, -0.8}) {
      for (double eta : {-0.2, -0.26, -0.3}) {
        const double g = coupling_from_chi(chi, delta, eta);
        EXPECT_LT(rel(chi_from_coupling(g, delta, eta), chi), 1e-9);
      }
    }
  }
}

TEST(PurcellT1, ReferenceValues) {
  const double k_si = kappa_rad_per_us(6.868, loaded_q(5.8e3, 12.9e3));
  EXPECT_LT(rel(purcell_t1(-1.906, 0.135, k_si), 18.5), 0.05);
  const double k_soi = kappa_rad_per_us(7.143, loaded_q(45.8e3, 6.1e3));
  EXPECT_LT(rel(purcell_t1(-1.491, 0.177, k_soi), 8.5), 0.05);
  const double k_qe = kappa_rad_per_us(6.868, 12.9e3);
  EXPECT_LT(rel(purcell_t1(-1.906, 0.138, k_qe), 57.0), 0.05);
  EXPECT_THROW(purcell_t1(-1.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(purcell_t1(-1.0, 0.1, 0.0), DomainError);
}

TEST(PurcellT1, MonotoneInDetuningAndQ) {
  double prev = 0.0;
  for (double d = 0.2; d < 3.0; d += 0.1) {
    const double t = purcell_t1(-d, 0.1, 5.0);
    EXPECT_GT(t, prev);
    prev = t;
  }
  prev = 0.0;
  for (double q = 1e3; q < 1e5; q *= 1.5) {
    const double t = purcell_t1(-1.5, 0.1, kappa_rad_per_us(7.0, q));
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(ThermalPopulation, Examples) {
  const double p = thermal_population(4.962, 7.0);
  EXPECT_LT(p, 1e-14);
  EXPECT_GT(p, 0.0);
  // h f / k T evaluated by hand: 6.62607015e-34 * 4.962e9 / (1.380649e-23 * 7e-3)
  const double x = 6.62607015e-34 * 4.962e9 / (1.380649e-23 * 7e-3);
  EXPECT_NEAR(p / std::exp(-x), 1.0, 1e-9);
  EXPECT_NEAR(thermal_population(5.0, 1e12), 0.5, 1e-9);
  EXPECT_EQ(thermal_population(5.0, 1e-3), 0.0);
  EXPECT_THROW(thermal_population(5.0, 0.0), DomainError);
}

TEST(DeviceSpec, ReferenceDevicesValidate) {
  const auto si = si_device();
  const auto soi = soi_device();
  EXPECT_NO_THROW(si.validate());
  EXPECT_NO_THROW(soi.validate());
  EXPECT_NEAR(si.coupling.detuning, -1.906, 1e-12);
  EXPECT_NEAR(soi.coupling.detuning, -1.491, 1e-12);
  EXPECT_NEAR(si.tuned_frequency(), 4.962, 1e-9);
  EXPECT_LT(rel(soi.squid.ej_max, soi.transmon.ej), 0.02);
  EXPECT_LT(rel(soi.purcell_t1(), 8.5), 0.05);
}

TEST(DeviceSpec, TuningLowersFrequency) {
  auto in = soi_inputs();
  double prev = std::numeric_limits<double>::infinity();
  for (double phi : {0.0, 0.1, 0.2, 0.3, 0.4}) {
    in.flux = phi;
    const double f = make_device(in).tuned_frequency();
    EXPECT_LT(f, prev);
    prev = f;
  }
}

TEST(DeviceSpec, InvalidInputsRejected) {
  auto in = si_inputs();
  in.t2 = 60.0; // > 2 T1
  EXPECT_THROW(make_device(in), ConfigError);
  in = si_inputs();
  in.inductance_per_junction = 22.0; // E_J(L) 12% off the spectrum
  EXPECT_THROW(make_device(in), ConfigError);
  in = si_inputs();
  in.anharmonicity = 0.1;
  EXPECT_THROW(make_device(in), DomainError);
  in = si_inputs();
  in.chi = -0.0012;
  EXPECT_THROW(make_device(in), DomainError);
  in = si_inputs();
  in.q_internal = -1;
  EXPECT_THROW(make_device(in), ConfigError);
}
