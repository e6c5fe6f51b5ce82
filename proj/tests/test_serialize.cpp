#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "transmon/config.hpp"
#include "transmon/serialize.hpp"

using namespace transmon;
using namespace transmon::experiments;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string message_of(const std::string& text) {
  try {
    config::parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kMinimalDevice = R"({"f_q": 4.962, "anharmonicity": -0.26, "f_r": 6.868, "Q_i": 5800,
  "Q_e": 12900, "chi": 0.0012, "T1": 27.0, "T2": 6.6, "junction_inductance": 24.93})";

} // namespace

TEST(Fnv1a, KnownValues) {
  EXPECT_EQ(io::fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(io::fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(io::fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(FormatDouble, RoundTripsExactly) {
  for (double v : {0.1, 1.0 / 3.0, 6.868, -2.5e-300, 123456789.125, 0.0}) {
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_THROW(io::parse_double("1.5x"), UsageError);
}

TEST(DeviceJson, RoundTrip) {
  for (const auto& d : {device::si_device(), device::soi_device()}) {
    const auto back = io::device_from_json(io::to_json(d));
    EXPECT_EQ(io::to_json(back).dump(), io::to_json(d).dump());
    EXPECT_EQ(io::device_hash(back), io::device_hash(d));
    EXPECT_DOUBLE_EQ(back.coupling.g, d.coupling.g);
  }
}

TEST(DeviceJson, MissingKeysListedTogether) {
  try {
    io::device_from_json(io::json::parse(R"({"f_q": 5.0, "T1": 20})"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    for (const char* key : {"device.anharmonicity", "device.f_r", "device.Q_i", "device.Q_e", "device.chi",
                            "device.T2"}) {
      EXPECT_NE(m.find(key), std::string::npos) << key;
    }
    EXPECT_EQ(m.find("device.f_q"), std::string::npos);
  }
}

TEST(DeviceJson, UnknownKeysRejected) {
  auto j = io::json::parse(kMinimalDevice);
  j["Q_int"] = 5000;
  EXPECT_THROW(io::device_from_json(j), ConfigError);
  j = io::json::parse(kMinimalDevice);
  j["readout"] = {{"epsilon0", 0.1}};
  EXPECT_THROW(io::device_from_json(j), ConfigError);
}

TEST(DeviceJson, WrongTypesAndRanges) {
  auto j = io::json::parse(kMinimalDevice);
  j["T1"] = "long";
  EXPECT_THROW(io::device_from_json(j), ConfigError);
  j = io::json::parse(kMinimalDevice);
  j["T2"] = 60.0; // above 2 T1
  EXPECT_THROW(io::device_from_json(j), ConfigError);
  j = io::json::parse(kMinimalDevice);
  j["thermal_population"] = "hot";
  EXPECT_THROW(io::device_from_json(j), ConfigError);
  j = io::json::parse(kMinimalDevice);
  j["thermal_population"] = "boltzmann";
  EXPECT_NEAR(io::device_from_json(j).transmon.thermal_population, device::thermal_population(4.962, 7.0), 1e-18);
}

TEST(PlanJson, RoundTripEveryKind) {
  const auto d = device::si_device();
  std::vector<ExperimentPlan> plans{default_t1_plan(d, 3), default_ramsey_plan(d, 3), default_chevron_plan(d, 3),
                                    default_rb_plan(Kind::rb_interleaved, 12, 0.99, 0.998, 3),
                                    default_two_tone_plan(d, 3), default_vna_plan(d, 3)};
  plans[3].interleaved_gate = PhysicalGate::Y_mpi2;
  plans[3].rb_noise = RbNoiseLevel::pulse;
  plans[5].qubit_state = 1;
  plans[5].noise = 0.02;
  for (const auto& p : plans) {
    const auto back = io::plan_from_json(io::to_json(p), d, 3);
    EXPECT_EQ(io::to_json(back).dump(), io::to_json(p).dump()) << to_string(p.kind);
    EXPECT_EQ(io::plan_hash(back), io::plan_hash(p));
  }
}

TEST(PlanJson, AxisSpecs) {
  const auto d = device::si_device();
  auto p = io::plan_from_json(
      io::json::parse(R"({"kind": "t1", "axes": [{"name": "delay_us", "start": 1, "stop": 100, "points": 3,
                          "spacing": "log"}]})"),
      d, 1);
  ASSERT_EQ(p.axes[0].values.size(), 3u);
  EXPECT_NEAR(p.axes[0].values[1], 10.0, 1e-12);
  EXPECT_THROW(io::plan_from_json(io::json::parse(R"({"kind": "t1", "axes": [{"name": "x", "start": 0, "stop": 1,
                                                      "points": 3, "spacing": "log"}]})"),
                                  d, 1),
               ConfigError);
  EXPECT_THROW(io::plan_from_json(io::json::parse(R"({"kind": "t1", "shots": 10})"), d, 1), ConfigError);
  EXPECT_THROW(io::plan_from_json(io::json::parse(R"({"kind": "echo"})"), d, 1), ConfigError);
  EXPECT_THROW(io::plan_from_json(io::json::parse(R"({"kind": "rb_reference", "clifford_p": 1.5})"), d, 1),
               ConfigError);
}

TEST(RunConfig, EmptyConfigListsEveryMissingSection) {
  const auto m = message_of("{}");
  EXPECT_NE(m.find("missing required keys"), std::string::npos);
  EXPECT_NE(m.find("config.device"), std::string::npos);
  EXPECT_NE(m.find("config.experiment"), std::string::npos);
}

TEST(RunConfig, MissingDeviceAndExperimentKeysTogether) {
  const auto m = message_of(R"({"device": {"f_q": 5.0}, "experiment": {}})");
  EXPECT_NE(m.find("device.chi"), std::string::npos);
  EXPECT_NE(m.find("device.T2"), std::string::npos);
  EXPECT_NE(m.find("experiment.kind"), std::string::npos);
}

TEST(RunConfig, CommentsAllowedAndUnknownTopLevelRejected) {
  const std::string ok = std::string("// header\n{\"device\": ") + kMinimalDevice +
                         ", /* plan */ \"experiment\": {\"kind\": \"t1\"}, \"seed\": 9}";
  const auto cfg = config::parse_run_config(ok);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.plan.global_seed, 9u);
  EXPECT_EQ(cfg.plan.kind, Kind::t1);
  const std::string bad = std::string("{\"device\": ") + kMinimalDevice +
                          ", \"experiment\": {\"kind\": \"t1\"}, \"sede\": 9}";
  EXPECT_NE(message_of(bad).find("unknown key 'sede'"), std::string::npos);
  EXPECT_THROW(config::parse_run_config("{\"device\": "), ConfigError);
}

TEST(RunConfig, KindAndSeedOverrides) {
  const std::string text = std::string("{\"device\": ") + kMinimalDevice + ", \"experiment\": {\"kind\": \"t1\"}}";
  const auto cfg = config::parse_run_config(text, Kind::ramsey, 44);
  EXPECT_EQ(cfg.plan.kind, Kind::ramsey);
  EXPECT_EQ(cfg.plan.global_seed, 44u);
  const std::string no_exp = std::string("{\"device\": ") + kMinimalDevice + "}";
  EXPECT_EQ(config::parse_run_config(no_exp, Kind::vna_sweep).plan.kind, Kind::vna_sweep);
}

TEST(RunConfig, ShippedConfigsParse) {
  for (const char* name : {"si.cfg", "soi.cfg"}) {
    const auto text = slurp(std::string(TRANSMON_CONFIG_DIR) + "/" + name);
    ASSERT_FALSE(text.empty()) << name;
    const auto cfg = config::parse_run_config(text);
    EXPECT_NO_THROW(cfg.device.validate());
    EXPECT_NO_THROW(cfg.plan.validate());
  }
  const auto si = config::parse_run_config(slurp(std::string(TRANSMON_CONFIG_DIR) + "/si.cfg"));
  EXPECT_EQ(si.device.transmon.fq, 4.962);
  EXPECT_EQ(si.device.resonator.q_internal, 5800);
}

TEST(Csv, WriteReadRoundTrip) {
  DataSet ds;
  ds.kind = Kind::ramsey;
  ds.metadata.seed = 77;
  ds.metadata.device_hash = "d1";
  ds.metadata.plan_hash = "p1";
  ds.metadata.extra["started"] = "2020-01-01T00:00:00Z";
  ds.add("delay_us", {0.0, 0.1, 1.0 / 3.0});
  ds.add("p_hat", {0.25, 0.5, 1.0});
  ds.add("se", {std::sqrt(0.25 * 0.75 / 4), std::sqrt(0.25 / 4), 0.0});
  ds.add("shots", {4, 4, 4});
  const std::string text = io::csv_string(ds, "abc");
  std::istringstream in(text);
  const auto f = io::read_csv(in);
  EXPECT_EQ(f.config_hash, "abc");
  EXPECT_EQ(f.data.kind, Kind::ramsey);
  EXPECT_EQ(f.data.metadata.seed, 77u);
  EXPECT_EQ(f.data.metadata.extra.at("started"), "2020-01-01T00:00:00Z");
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    EXPECT_EQ(f.data.columns[c].name, ds.columns[c].name);
    EXPECT_EQ(f.data.columns[c].values, ds.columns[c].values);
  }
  EXPECT_EQ(io::csv_string(f.data, f.config_hash), text);
}

TEST(Csv, InvalidDataRejected) {
  std::istringstream ragged("p_hat,se,shots\n0.5,0.25\n");
  EXPECT_THROW(io::read_csv(ragged), UsageError);
  std::istringstream bad_se("p_hat,se,shots\n0.5,0.3,4\n");
  EXPECT_THROW(io::read_csv(bad_se), UsageError);
  std::istringstream out_of_range("p_hat,se,shots\n1.5,0,4\n");
  EXPECT_THROW(io::read_csv(out_of_range), UsageError);
  std::istringstream empty("# only comments\n");
  EXPECT_THROW(io::read_csv(empty), UsageError);
}

TEST(FitJson, NullSigmaForUnidentifiable) {
  analysis::FitResult fr;
  fr.model = "exponential";
  fr.names = {"A", "T1", "offset"};
  fr.values = Eigen::Vector3d(0.9, 27.0, 0.05);
  fr.sigmas = Eigen::Vector3d(0.01, std::numeric_limits<double>::infinity(), 0.001);
  fr.flags = {"unidentifiable:T1"};
  const auto j = io::to_json(fr);
  EXPECT_TRUE(j["parameters"]["T1"]["sigma"].is_null());
  EXPECT_EQ(j["parameters"]["A"]["value"], 0.9);
  EXPECT_FALSE(j["reportable"].get<bool>());
}
