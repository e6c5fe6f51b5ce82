#pragma once

// Text formats: device and plan sections as JSON (comments allowed on
// input), datasets as CSV with a '#' metadata preamble, fit results and run
// manifests as JSON.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "transmon/analysis.hpp"
#include "transmon/device_model.hpp"
#include "transmon/errors.hpp"
#include "transmon/plan.hpp"

namespace transmon::io {

using json = nlohmann::json;

/// FNV-1a 64-bit, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw UsageError("cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline json parse_config_text(const std::string& text) {
  try {
    return json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Strict object reading
// ---------------------------------------------------------------------------

/// Reads keys from one JSON object, remembering which were consumed so that
/// unknown keys can be rejected and missing required keys listed together.
class ObjectReader {
public:
  ObjectReader(const json& obj, std::string path, std::vector<std::string>& missing)
      : obj_(obj), path_(std::move(path)), missing_(missing) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <typename T>
  T required(const std::string& key, T fallback = T{}) {
    seen_.insert(key);
    if (!obj_.contains(key)) {
      missing_.push_back(path_ + "." + key);
      return fallback;
    }
    return get<T>(key);
  }

  template <typename T>
  T optional(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!obj_.contains(key)) return fallback;
    return get<T>(key);
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

  const std::string& path() const { return path_; }

private:
  template <typename T>
  T get(const std::string& key) const {
    try {
      return obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& missing_;
  std::set<std::string> seen_;
};

inline void throw_if_missing(const std::vector<std::string>& missing) {
  if (missing.empty()) return;
  std::string msg = "missing required keys:";
  for (const auto& m : missing) msg += " " + m;
  throw ConfigError(msg);
}

// ---------------------------------------------------------------------------
// Device
// ---------------------------------------------------------------------------

inline std::string to_string(device::EnvelopeShape s) {
  return s == device::EnvelopeShape::gaussian ? "gaussian" : "rectangle";
}

inline device::EnvelopeShape shape_from_string(const std::string& s) {
  if (s == "gaussian") return device::EnvelopeShape::gaussian;
  if (s == "rectangle") return device::EnvelopeShape::rectangle;
  throw ConfigError("unknown envelope shape '" + s + "'");
}

inline json to_json(const device::DeviceSpec& d) {
  json j;
  j["name"] = d.name;
  j["f_q"] = d.transmon.fq;
  j["anharmonicity"] = d.transmon.anharmonicity;
  j["T1"] = d.transmon.t1;
  j["T2"] = d.transmon.t2;
  j["thermal_population"] = d.transmon.thermal_population;
  j["f_r"] = d.resonator.fr;
  j["Q_i"] = d.resonator.q_internal;
  j["Q_e"] = d.resonator.q_external;
  j["chi"] = d.coupling.chi;
  j["junction_inductance"] = d.squid.inductance_per_junction;
  j["n_junctions"] = d.squid.n_junctions;
  j["flux"] = d.squid.flux;
  j["temperature_mK"] = d.fridge.temperature_mk;
  j["readout"] = {{"mean_g", {d.readout.mean_g.real(), d.readout.mean_g.imag()}},
                  {"mean_e", {d.readout.mean_e.real(), d.readout.mean_e.imag()}},
                  {"sigma", d.readout.sigma},
                  {"eps0", d.readout.eps0},
                  {"eps1", d.readout.eps1},
                  {"leakage_as_excited", d.readout.leakage_as_excited}};
  j["pulses"] = {{"xy_shape", to_string(d.pulses.xy_shape)},
                 {"xy_duration", d.pulses.xy_duration},
                 {"xy_sigma", d.pulses.xy_sigma},
                 {"readout_duration", d.pulses.readout_duration}};
  j["simulation"] = {{"levels", d.simulation.levels},
                     {"dt_pulse", d.simulation.dt_pulse},
                     {"dt_idle", d.simulation.dt_idle}};
  return j;
}

inline std::complex<double> point_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected [I, Q]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

/// Builds and validates a device; every missing required key is reported.
inline device::DeviceSpec device_from_json(const json& j, const std::string& path = "device") {
  std::vector<std::string> missing;
  ObjectReader r(j, path, missing);
  device::DeviceInputs in{};
  in.name = r.optional<std::string>("name", "device");
  in.fq = r.required<double>("f_q");
  in.anharmonicity = r.required<double>("anharmonicity");
  in.fr = r.required<double>("f_r");
  in.q_internal = r.required<double>("Q_i");
  in.q_external = r.required<double>("Q_e");
  in.chi = r.required<double>("chi");
  in.t1 = r.required<double>("T1");
  in.t2 = r.required<double>("T2");
  in.inductance_per_junction = r.optional<double>("junction_inductance", 22.0);
  in.n_junctions = r.optional<int>("n_junctions", 2);
  in.flux = r.optional<double>("flux", 0.0);
  in.temperature_mk = r.optional<double>("temperature_mK", 7.0);

  // A number, or "boltzmann" to derive it from the fridge temperature.
  bool boltzmann = false;
  if (const json* tp = r.child("thermal_population")) {
    if (tp->is_string()) {
      if (tp->get<std::string>() != "boltzmann") {
        throw ConfigError(path + ".thermal_population: expected a number or \"boltzmann\"");
      }
      boltzmann = true;
    } else if (tp->is_number()) {
      in.thermal_population = tp->get<double>();
    } else {
      throw ConfigError(path + ".thermal_population: wrong type");
    }
  }

  device::ReadoutModel ro;
  if (const json* rj = r.child("readout")) {
    ObjectReader rr(*rj, path + ".readout", missing);
    if (const json* m = rr.child("mean_g")) ro.mean_g = point_from_json(*m, rr.path() + ".mean_g");
    if (const json* m = rr.child("mean_e")) ro.mean_e = point_from_json(*m, rr.path() + ".mean_e");
    ro.sigma = rr.optional<double>("sigma", ro.sigma);
    ro.eps0 = rr.optional<double>("eps0", ro.eps0);
    ro.eps1 = rr.optional<double>("eps1", ro.eps1);
    ro.leakage_as_excited = rr.optional<bool>("leakage_as_excited", ro.leakage_as_excited);
    rr.reject_unknown();
  }
  device::PulseConfig pc;
  if (const json* pj = r.child("pulses")) {
    ObjectReader pr(*pj, path + ".pulses", missing);
    pc.xy_shape = shape_from_string(pr.optional<std::string>("xy_shape", to_string(pc.xy_shape)));
    pc.xy_duration = pr.optional<double>("xy_duration", pc.xy_duration);
    pc.xy_sigma = pr.optional<double>("xy_sigma", pc.xy_sigma);
    pc.readout_duration = pr.optional<double>("readout_duration", pc.readout_duration);
    pr.reject_unknown();
  }
  device::SimulationConfig sc;
  if (const json* sj = r.child("simulation")) {
    ObjectReader sr(*sj, path + ".simulation", missing);
    sc.levels = sr.optional<int>("levels", sc.levels);
    sc.dt_pulse = sr.optional<double>("dt_pulse", sc.dt_pulse);
    sc.dt_idle = sr.optional<double>("dt_idle", sc.dt_idle);
    sr.reject_unknown();
  }
  r.reject_unknown();
  throw_if_missing(missing);

  if (boltzmann) in.thermal_population = device::thermal_population(in.fq, in.temperature_mk);
  device::DeviceSpec d = device::make_device(in);
  d.readout = ro;
  d.pulses = pc;
  d.simulation = sc;
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Plan
// ---------------------------------------------------------------------------

inline std::string to_string(experiments::RbNoiseLevel l) {
  return l == experiments::RbNoiseLevel::clifford ? "clifford" : "pulse";
}

inline json to_json(const experiments::ExperimentPlan& p) {
  json j;
  j["kind"] = std::string(experiments::to_string(p.kind));
  j["shots_per_point"] = p.shots_per_point;
  json axes = json::array();
  for (const auto& a : p.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
  j["axes"] = axes;
  switch (p.kind) {
  case experiments::Kind::ramsey: j["detuning"] = p.detuning; break;
  case experiments::Kind::t1: j["pi_duration"] = p.pi_duration; break;
  case experiments::Kind::rb_reference:
  case experiments::Kind::rb_interleaved:
    j["n_random_sequences"] = p.n_random_sequences;
    j["interleaved_gate"] = std::string(transmon::to_string(p.interleaved_gate));
    j["rb_noise"] = to_string(p.rb_noise);
    j["clifford_p"] = p.clifford_p;
    j["gate_p"] = p.gate_p;
    break;
  case experiments::Kind::two_tone: j["drive_amplitude"] = p.drive_amplitude; break;
  case experiments::Kind::vna_sweep:
    j["qubit_state"] = p.qubit_state;
    j["noise"] = p.noise;
    break;
  default: break;
  }
  return j;
}

/// Axis either as explicit "values" or as {start, stop, points, spacing}.
inline experiments::Axis axis_from_json(const json& j, const std::string& path,
                                        std::vector<std::string>& missing) {
  ObjectReader r(j, path, missing);
  experiments::Axis a;
  a.name = r.required<std::string>("name");
  if (r.has("values")) {
    a.values = r.required<std::vector<double>>("values");
    r.optional<double>("start", 0.0);
  } else {
    const double start = r.required<double>("start");
    const double stop = r.required<double>("stop");
    const int points = r.required<int>("points", 2);
    const std::string spacing = r.optional<std::string>("spacing", "linear");
    if (points < 1) throw ConfigError(path + ".points must be >= 1");
    if (spacing == "linear") a.values = experiments::linspace(start, stop, points);
    else if (spacing == "log") {
      if (!(start > 0.0) || !(stop > 0.0)) throw ConfigError(path + ": log spacing needs positive bounds");
      a.values = experiments::logspace(start, stop, points);
    } else throw ConfigError(path + ".spacing must be 'linear' or 'log'");
  }
  r.reject_unknown();
  return a;
}

/// Default plan for the kind, overridden by whatever keys the section sets.
inline experiments::ExperimentPlan plan_from_json(const json& j, const device::DeviceSpec& d,
                                                  std::uint64_t seed, const std::string& path = "experiment") {
  using namespace experiments;
  std::vector<std::string> missing;
  ObjectReader r(j, path, missing);
  const std::string kind_name = r.required<std::string>("kind");
  throw_if_missing(missing);
  const Kind kind = kind_from_string(kind_name);

  ExperimentPlan p;
  switch (kind) {
  case Kind::rabi_chevron: p = default_chevron_plan(d, seed); break;
  case Kind::t1: p = default_t1_plan(d, seed); break;
  case Kind::ramsey: p = default_ramsey_plan(d, seed); break;
  case Kind::rb_reference:
  case Kind::rb_interleaved: p = default_rb_plan(kind, 40, 1.0, 1.0, seed); break;
  case Kind::two_tone: p = default_two_tone_plan(d, seed); break;
  case Kind::vna_sweep: p = default_vna_plan(d, seed); break;
  }
  p.global_seed = seed;
  p.shots_per_point = r.optional<std::size_t>("shots_per_point", p.shots_per_point);
  if (const json* axes = r.child("axes")) {
    if (!axes->is_array()) throw ConfigError(path + ".axes: expected an array");
    p.axes.clear();
    for (std::size_t k = 0; k < axes->size(); ++k) {
      p.axes.push_back(axis_from_json((*axes)[k], path + ".axes[" + std::to_string(k) + "]", missing));
    }
  }
  p.detuning = r.optional<double>("detuning", p.detuning);
  p.pi_duration = r.optional<double>("pi_duration", p.pi_duration);
  p.n_random_sequences = r.optional<int>("n_random_sequences", p.n_random_sequences);
  p.interleaved_gate =
      gate_from_string(r.optional<std::string>("interleaved_gate", std::string(transmon::to_string(p.interleaved_gate))));
  const std::string noise_level = r.optional<std::string>("rb_noise", to_string(p.rb_noise));
  if (noise_level == "clifford") p.rb_noise = RbNoiseLevel::clifford;
  else if (noise_level == "pulse") p.rb_noise = RbNoiseLevel::pulse;
  else throw ConfigError(path + ".rb_noise must be 'clifford' or 'pulse'");
  p.clifford_p = r.optional<double>("clifford_p", p.clifford_p);
  p.gate_p = r.optional<double>("gate_p", p.gate_p);
  p.drive_amplitude = r.optional<double>("drive_amplitude", p.drive_amplitude);
  p.qubit_state = r.optional<int>("qubit_state", p.qubit_state);
  p.noise = r.optional<double>("noise", p.noise);
  r.reject_unknown();
  throw_if_missing(missing);
  p.validate();
  return p;
}

inline std::string device_hash(const device::DeviceSpec& d) { return fnv1a_hex(to_json(d).dump()); }
inline std::string plan_hash(const experiments::ExperimentPlan& p) { return fnv1a_hex(to_json(p).dump()); }

inline std::string config_hash(const device::DeviceSpec& d, const experiments::ExperimentPlan& p) {
  return fnv1a_hex(to_json(d).dump() + "\n" + to_json(p).dump() + "\n" + std::to_string(p.global_seed));
}

// ---------------------------------------------------------------------------
// DataSet CSV
// ---------------------------------------------------------------------------

/// "# key: value" preamble, header row, one row per point.
inline void write_csv(std::ostream& os, const experiments::DataSet& ds, const std::string& cfg_hash) {
  os << "# transmon dataset v1\n";
  os << "# kind: " << experiments::to_string(ds.kind) << '\n';
  os << "# seed: " << ds.metadata.seed << '\n';
  os << "# config_hash: " << cfg_hash << '\n';
  os << "# device_hash: " << ds.metadata.device_hash << '\n';
  os << "# plan_hash: " << ds.metadata.plan_hash << '\n';
  for (const auto& [k, v] : ds.metadata.extra) os << "# " << k << ": " << v << '\n';
  for (std::size_t c = 0; c < ds.columns.size(); ++c) os << (c ? "," : "") << ds.columns[c].name;
  os << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
      os << (c ? "," : "") << format_double(ds.columns[c].values[r]);
    }
    os << '\n';
  }
}

inline std::string csv_string(const experiments::DataSet& ds, const std::string& cfg_hash) {
  std::ostringstream os;
  write_csv(os, ds, cfg_hash);
  return os.str();
}

struct CsvFile {
  experiments::DataSet data;
  std::string config_hash;
};

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvFile read_csv(std::istream& is) {
  CsvFile f;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(2, colon - 2);
      const std::string value = line.substr(colon + 2);
      if (key == "kind") f.data.kind = experiments::kind_from_string(value);
      else if (key == "seed") f.data.metadata.seed = std::stoull(value);
      else if (key == "config_hash") f.config_hash = value;
      else if (key == "device_hash") f.data.metadata.device_hash = value;
      else if (key == "plan_hash") f.data.metadata.plan_hash = value;
      else f.data.metadata.extra[key] = value;
      continue;
    }
    if (header.empty()) {
      header = split(line, ',');
      for (const auto& h : header) f.data.columns.push_back({h, {}});
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw UsageError("csv: row has wrong number of cells");
    for (std::size_t c = 0; c < cells.size(); ++c) f.data.columns[c].values.push_back(parse_double(cells[c]));
  }
  if (header.empty()) throw UsageError("csv: no header row");
  f.data.validate();
  return f;
}

// ---------------------------------------------------------------------------
// Fit results
// ---------------------------------------------------------------------------

inline json to_json(const analysis::FitResult& fr) {
  json j;
  j["model"] = fr.model;
  json params = json::object();
  for (std::size_t k = 0; k < fr.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double s = fr.sigmas(i);
    params[fr.names[k]] = {{"value", fr.values(i)}, {"sigma", std::isfinite(s) ? json(s) : json(nullptr)}};
  }
  j["parameters"] = params;
  j["rss"] = fr.rss;
  j["dof"] = fr.dof;
  j["reduced_chi2"] = fr.reduced_chi2();
  j["max_abs_residual"] = fr.max_abs_residual;
  j["converged"] = fr.converged;
  j["iterations"] = fr.iterations;
  j["flags"] = fr.flags;
  j["reportable"] = fr.reportable();
  return j;
}

inline json to_json(const analysis::RbFidelities& f) {
  return {{"p_reference", f.p_ref},        {"p_reference_sigma", f.p_ref_sigma},
          {"p_interleaved", f.p_int},      {"p_interleaved_sigma", f.p_int_sigma},
          {"f_clifford", f.f_clifford},    {"f_clifford_sigma", f.f_clifford_sigma},
          {"f_gate", f.f_gate},            {"f_gate_sigma", f.f_gate_sigma},
          {"nonphysical_gain", f.nonphysical_gain}};
}

} // namespace transmon::io
