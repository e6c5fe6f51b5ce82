// transmon: device parameters, simulated experiments, fits and the
// acceptance selftest from one executable.
//
// Exit codes: 0 success, 1 selftest failure, 2 invalid input or config,
// 3 runtime failure, 4 a fit did not converge.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bundled_data.hpp"
#include "transmon/acceptance.hpp"
#include "transmon/analysis.hpp"
#include "transmon/config.hpp"
#include "transmon/experiments.hpp"
#include "transmon/serialize.hpp"

namespace fs = std::filesystem;
using namespace transmon;
using io::json;

namespace {

enum Exit : int { kOk = 0, kSelftestFailed = 1, kValidation = 2, kRuntime = 3, kNonConvergence = 4 };

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  std::string device_name;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> shots;
  unsigned workers = 1;
  bool keep_shots = false;
  bool timestamps = false;
  std::string kind;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw RuntimeFailure("write failed for '" + p.string() + "'");
}

std::string config_text(const CommonOptions& o) {
  if (!o.config_path.empty()) return read_file(o.config_path);
  if (o.device_name == "soi") return bundled::soi_cfg;
  return bundled::si_cfg;
}

config::RunConfig load(const CommonOptions& o, std::optional<experiments::Kind> kind = std::nullopt) {
  if (!o.kind.empty()) kind = experiments::kind_from_string(o.kind);
  auto cfg = config::parse_run_config(config_text(o), kind, o.seed);
  if (o.shots) {
    cfg.plan.shots_per_point = *o.shots;
    cfg.plan.validate();
  }
  return cfg;
}

/// --out, else $TRANSMON_OUTPUT_ROOT joined with the config's output, else
/// ./transmon_out.
fs::path output_dir(const CommonOptions& o, const config::RunConfig& cfg) {
  if (!o.out.empty()) return o.out;
  const char* root = std::getenv("TRANSMON_OUTPUT_ROOT");
  const fs::path base = root && *root ? fs::path(root) : fs::path(".");
  return base / (cfg.output.empty() ? fs::path("transmon_out") : fs::path(cfg.output));
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// ---------------------------------------------------------------------------
// Fitting helpers shared by run, fit and rb
// ---------------------------------------------------------------------------

std::string default_model(experiments::Kind k) {
  switch (k) {
  case experiments::Kind::t1: return "exponential";
  case experiments::Kind::ramsey: return "ramsey";
  case experiments::Kind::rb_reference:
  case experiments::Kind::rb_interleaved: return "rb";
  case experiments::Kind::vna_sweep: return "hanger";
  default: return "";
  }
}

std::vector<double> floored_se(const experiments::DataSet& ds) {
  return analysis::apply_se_floor(ds.column("se"), ds.column("shots"));
}

analysis::FitResult fit_dataset(const experiments::DataSet& ds, const std::string& model) {
  const auto& x = ds.columns.front().values;
  if (model == "exponential") return analysis::fit_exponential(x, ds.column("p_hat"), floored_se(ds));
  if (model == "ramsey") return analysis::fit_ramsey(x, ds.column("p_hat"), floored_se(ds));
  if (model == "rb") return analysis::fit_rb(x, ds.column("p_hat"), floored_se(ds));
  if (model == "hanger") {
    const auto& re = ds.column("s21_re");
    const auto& im = ds.column("s21_im");
    std::vector<std::complex<double>> s(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) s[k] = {re[k], im[k]};
    double noise = 0.0;
    if (auto it = ds.metadata.extra.find("noise"); it != ds.metadata.extra.end()) noise = std::stod(it->second);
    return analysis::fit_hanger(x, s, noise);
  }
  throw UsageError("unknown fit model '" + model + "' (exponential, ramsey, rb, hanger)");
}

void print_fit(const analysis::FitResult& fr) {
  std::printf("model %s: %s, %d iterations, reduced chi2 %.3f\n", fr.model.c_str(),
              fr.reportable() ? "converged" : "NOT REPORTABLE", fr.iterations, fr.reduced_chi2());
  for (std::size_t k = 0; k < fr.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    std::printf("  %-10s %.8g +- %.3g\n", fr.names[k].c_str(), fr.values(i), fr.sigmas(i));
  }
  for (const auto& f : fr.flags) std::printf("  flag: %s\n", f.c_str());
}

json fit_json_with_views(const experiments::DataSet& ds, const analysis::FitResult& fr) {
  json j = io::to_json(fr);
  if (fr.model == "exponential" && fr.reportable()) {
    const auto view = analysis::log_space_lifetime(ds.columns.front().values, ds.column("p_hat"), floored_se(ds),
                                                   fr.value("offset"));
    j["log_space_view"] = {{"T1", view.lifetime}, {"sigma", view.sigma}, {"points", view.points}};
    std::printf("  log-space view: T1 %.6g +- %.3g over %zu points\n", view.lifetime, view.sigma, view.points);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

struct Written {
  fs::path csv;
  std::string csv_text;
};

Written write_dataset(const fs::path& dir, const std::string& stem, experiments::DataSet& ds,
                      const std::string& cfg_hash, bool timestamps) {
  if (timestamps) ds.metadata.extra["created_utc"] = utc_now();
  Written w{dir / (stem + ".csv"), io::csv_string(ds, cfg_hash)};
  write_file(w.csv, w.csv_text);
  return w;
}

void write_shots(const fs::path& p, const std::vector<readout::ShotRecord>& shots, const std::string& cfg_hash,
                 std::uint64_t seed) {
  std::ostringstream os;
  os << "# config_hash: " << cfg_hash << "\n# seed: " << seed << '\n';
  readout::write_shots(os, shots);
  write_file(p, os.str());
}

json manifest(const config::RunConfig& cfg, const std::string& cfg_hash) {
  return {{"format", "transmon-run/1"},
          {"seed", cfg.plan.global_seed},
          {"config_hash", cfg_hash},
          {"device_hash", io::device_hash(cfg.device)},
          {"plan_hash", io::plan_hash(cfg.plan)},
          {"device", io::to_json(cfg.device)},
          {"plan", io::to_json(cfg.plan)}};
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

std::string cell(double v, const char* f = "%.6g") {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_params(const CommonOptions& o) {
  const auto cfg = config::parse_run_config(config_text(o), experiments::Kind::t1);
  const auto& d = cfg.device;
  const json ref = json::parse(bundled::reference_json)["rows"];
  auto refcell = [&](const char* key, int col) {
    if (!ref.contains(key) || ref[key][col].is_null()) return std::string("-");
    return cell(ref[key][col].get<double>());
  };
  const double delta = d.transmon.fq - d.resonator.fr;
  const double kappa = d.resonator.kappa_rad_per_us();
  const double kappa_qe = device::kappa_rad_per_us(d.resonator.fr, d.resonator.q_external);
  const double g = d.coupling.g;
  const auto noise = dynamics::NoiseChannels::from_device(d);

  struct Row {
    const char* name;
    double value;
    const char* ref_key;
  };
  const Row rows[] = {
      {"f_q [GHz]", d.transmon.fq, "f_q_ghz"},
      {"anharmonicity [GHz]", d.transmon.anharmonicity, "anharmonicity_ghz"},
      {"f_r [GHz]", d.resonator.fr, "f_r_ghz"},
      {"chi [GHz]", d.coupling.chi, "chi_ghz"},
      {"2 chi [MHz]", 2e3 * d.coupling.chi, nullptr},
      {"Delta = f_q - f_r [GHz]", delta, nullptr},
      {"E_C [GHz]", d.transmon.ec, nullptr},
      {"E_J from spectrum [GHz]", d.transmon.ej, "E_J_ghz"},
      {"E_J from inductance [GHz]", d.squid.ej_max, nullptr},
      {"L_J per junction [nH]", d.squid.inductance_per_junction, "L_J_per_junction_nH"},
      {"E_J / E_C", d.transmon.ej / d.transmon.ec, nullptr},
      {"tuned f_q at flux [GHz]", d.tuned_frequency(), nullptr},
      {"g [GHz]", g, "g_ghz"},
      {"Q_i", d.resonator.q_internal, "Q_i"},
      {"Q_e", d.resonator.q_external, "Q_e"},
      {"Q_total", d.resonator.q_total(), nullptr},
      {"kappa [rad/us]", kappa, nullptr},
      {"Purcell T1, Q_total [us]", device::purcell_t1(delta, g, kappa), "purcell_T1_us"},
      {"Purcell T1, Q = Q_e [us]", device::purcell_t1(delta, g, kappa_qe), "purcell_T1_Qe_us"},
      {"T1 [us]", d.transmon.t1, "T1_us"},
      {"T2 [us]", d.transmon.t2, "T2_us"},
      {"Gamma_phi [1/us]", noise.gamma_phi, nullptr},
      {"thermal population at T_f", device::thermal_population(d.transmon.fq, d.fridge.temperature_mk), nullptr},
  };
  std::printf("device '%s'\n", d.name.c_str());
  std::printf("%-30s %14s %14s %14s\n", "quantity", "derived", "ref si", "ref soi");
  for (const auto& r : rows) {
    std::printf("%-30s %14s %14s %14s\n", r.name, cell(r.value).c_str(),
                r.ref_key ? refcell(r.ref_key, 0).c_str() : "", r.ref_key ? refcell(r.ref_key, 1).c_str() : "");
  }
  return kOk;
}

int cmd_run(const CommonOptions& o) {
  const auto cfg = load(o);
  const auto dir = output_dir(o, cfg);
  auto result = experiments::run(cfg.device, cfg.plan, {o.workers, o.keep_shots});
  const std::string hash = io::config_hash(cfg.device, cfg.plan);
  const std::string stem(experiments::to_string(cfg.plan.kind));
  if (cfg.plan.kind == experiments::Kind::vna_sweep) result.data.metadata.extra["noise"] = io::format_double(cfg.plan.noise);
  const auto w = write_dataset(dir, stem, result.data, hash, o.timestamps);

  json m = manifest(cfg, hash);
  m["data_file"] = w.csv.filename().string();
  m["data_hash"] = io::fnv1a_hex(w.csv_text);
  if (o.timestamps) m["created_utc"] = result.data.metadata.extra["created_utc"];
  if (o.keep_shots && !result.shots.empty()) {
    write_shots(dir / (stem + ".shots.csv"), result.shots, hash, cfg.plan.global_seed);
    m["shots_file"] = stem + ".shots.csv";
  }

  int code = kOk;
  const std::string model = default_model(cfg.plan.kind);
  if (!model.empty()) {
    const auto fr = fit_dataset(result.data, model);
    print_fit(fr);
    m["fits"] = {{model, fit_json_with_views(result.data, fr)}};
    if (!fr.reportable()) code = kNonConvergence;
  } else if (cfg.plan.kind == experiments::Kind::two_tone) {
    const auto& resp = result.data.column("response");
    const auto k = experiments::strongest_feature(resp);
    const double f = result.data.columns.front().values[k];
    std::printf("strongest two-tone feature at %.6f GHz\n", f);
    m["results"] = {{"strongest_feature_ghz", f}};
  }
  write_file(dir / (stem + ".manifest.json"), m.dump(2) + "\n");
  std::printf("wrote %s (%zu rows)\n", w.csv.string().c_str(), result.data.rows());
  return code;
}

int cmd_fit(const std::string& path, const std::string& model_opt, bool force) {
  const fs::path csv_path(path);
  const std::string text = read_file(csv_path);
  std::istringstream is(text);
  auto file = io::read_csv(is);

  fs::path mpath = csv_path;
  mpath.replace_extension(".manifest.json");
  if (fs::exists(mpath)) {
    const json m = json::parse(read_file(mpath));
    const bool hash_ok = m.value("config_hash", "") == file.config_hash;
    const bool data_ok = m.value("data_hash", "") == io::fnv1a_hex(text);
    if ((!hash_ok || !data_ok) && !force) {
      throw UsageError("dataset does not match its manifest (" +
                       std::string(!hash_ok ? "config hash" : "data hash") + " differs); use --force to fit anyway");
    }
  } else if (!force) {
    throw UsageError("no manifest next to '" + path + "'; use --force to fit anyway");
  }

  const std::string model = model_opt.empty() ? default_model(file.data.kind) : model_opt;
  if (model.empty()) throw UsageError("no default fit model for this dataset kind; pass --model");
  const auto fr = fit_dataset(file.data, model);
  print_fit(fr);
  json out = {{"dataset", csv_path.filename().string()},
              {"config_hash", file.config_hash},
              {"seed", file.data.metadata.seed},
              {"fit", fit_json_with_views(file.data, fr)}};
  fs::path fpath = csv_path;
  fpath.replace_extension(".fit.json");
  write_file(fpath, out.dump(2) + "\n");
  return fr.reportable() ? kOk : kNonConvergence;
}

int cmd_rb(const CommonOptions& o) {
  auto cfg = load(o);
  if (!experiments::is_rb(cfg.plan.kind)) {
    throw ConfigError("rb: experiment kind must be rb_reference or rb_interleaved");
  }
  const auto dir = output_dir(o, cfg);
  auto [ref, inter] = experiments::run_rb(cfg.device, cfg.plan, {o.workers, o.keep_shots});
  const std::string hash = io::config_hash(cfg.device, cfg.plan);
  const auto wr = write_dataset(dir, "rb_reference", ref.data, hash, o.timestamps);
  const auto wi = write_dataset(dir, "rb_interleaved", inter.data, hash, o.timestamps);
  if (o.keep_shots) {
    write_shots(dir / "rb_reference.shots.csv", ref.shots, hash, cfg.plan.global_seed);
    write_shots(dir / "rb_interleaved.shots.csv", inter.shots, hash, cfg.plan.global_seed);
  }

  const auto fr = fit_dataset(ref.data, "rb");
  const auto fi = fit_dataset(inter.data, "rb");
  std::printf("reference curve\n");
  print_fit(fr);
  std::printf("interleaved curve (%s)\n", std::string(to_string(cfg.plan.interleaved_gate)).c_str());
  print_fit(fi);

  json m = manifest(cfg, hash);
  m["data_files"] = {{"reference", wr.csv.filename().string()}, {"interleaved", wi.csv.filename().string()}};
  m["data_hashes"] = {{"reference", io::fnv1a_hex(wr.csv_text)}, {"interleaved", io::fnv1a_hex(wi.csv_text)}};
  m["fits"] = {{"reference", io::to_json(fr)}, {"interleaved", io::to_json(fi)}};
  int code = kOk;
  if (fr.reportable() && fi.reportable()) {
    const auto fid = analysis::rb_fidelities(fr, fi);
    std::printf("average Clifford fidelity f(C) = %.5f +- %.5f\n", fid.f_clifford, fid.f_clifford_sigma);
    std::printf("interleaved gate fidelity f(G) = %.5f +- %.5f%s\n", fid.f_gate, fid.f_gate_sigma,
                fid.nonphysical_gain ? "  [warning: interleaved decay slower than reference]" : "");
    m["fidelities"] = io::to_json(fid);
  } else {
    code = kNonConvergence;
  }
  write_file(dir / "rb.manifest.json", m.dump(2) + "\n");
  return code;
}

int cmd_selftest(double scale, unsigned workers, std::optional<std::uint64_t> seed) {
  acceptance::Settings s;
  s.shot_scale = scale;
  s.workers = workers;
  if (seed) s.seed = *seed;
  int failed = 0;
  acceptance::run_all(s, [&](const acceptance::CriterionResult& r) {
    std::printf("%s\n", acceptance::format_line(r).c_str());
    std::fflush(stdout);
    failed += r.passed ? 0 : 1;
  });
  std::printf("%d of 11 criteria passed\n", 11 - failed);
  return failed == 0 ? kOk : kSelftestFailed;
}

void add_common(CLI::App* sub, CommonOptions& o, bool experiment_flags) {
  sub->add_option("--config", o.config_path, "run configuration file (JSON, comments allowed)");
  sub->add_option("--device", o.device_name, "bundled reference configuration")
      ->check(CLI::IsMember({"si", "soi"}));
  if (!experiment_flags) return;
  sub->add_option("--seed", o.seed, "global seed (overrides the config)");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--shots", o.shots, "shots per point (RB: per sequence length)")->check(CLI::PositiveNumber);
  sub->add_option("--workers", o.workers, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  sub->add_flag("--keep-shots", o.keep_shots, "also write every shot");
  sub->add_flag("--timestamps", o.timestamps, "stamp outputs with the wall-clock time");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"transmon characterization simulator"};
  app.require_subcommand(1);

  CommonOptions params_o, run_o, rb_o;
  auto* params = app.add_subcommand("params", "derived device parameters next to the reference values");
  add_common(params, params_o, false);

  auto* run = app.add_subcommand("run", "run the configured experiment and write data plus manifest");
  add_common(run, run_o, true);
  run->add_option("--kind", run_o.kind, "experiment kind (replaces the config's experiment)")
      ->check(CLI::IsMember({"rabi_chevron", "t1", "ramsey", "rb_reference", "rb_interleaved", "two_tone",
                             "vna_sweep"}));

  std::string fit_path, fit_model;
  bool fit_force = false;
  auto* fit = app.add_subcommand("fit", "fit a stored dataset");
  fit->add_option("dataset", fit_path, "dataset CSV written by run or rb")->required();
  fit->add_option("--model", fit_model, "exponential, ramsey, rb or hanger (default from the dataset kind)");
  fit->add_flag("--force", fit_force, "fit even if the manifest is missing or does not match");

  auto* rb = app.add_subcommand("rb", "reference and interleaved RB, fits and fidelities");
  add_common(rb, rb_o, true);

  double scale = 0.25;
  unsigned st_workers = 1;
  std::optional<std::uint64_t> st_seed;
  auto* selftest = app.add_subcommand("selftest", "run the acceptance criteria at reduced shot counts");
  selftest->add_option("--scale", scale, "shot-count multiplier")->check(CLI::Range(1e-3, 10.0));
  selftest->add_option("--workers", st_workers, "worker threads")->check(CLI::PositiveNumber);
  selftest->add_option("--seed", st_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  for (auto* sub : {params, run, rb}) {
    if (sub->parsed()) {
      auto& o = sub == params ? params_o : sub == run ? run_o : rb_o;
      if (!o.config_path.empty() && !o.device_name.empty()) {
        std::fprintf(stderr, "error: --config and --device are mutually exclusive\n");
        return kValidation;
      }
    }
  }

  try {
    if (params->parsed()) return cmd_params(params_o);
    if (run->parsed()) return cmd_run(run_o);
    if (fit->parsed()) return cmd_fit(fit_path, fit_model, fit_force);
    if (rb->parsed()) return cmd_rb(rb_o);
    if (selftest->parsed()) return cmd_selftest(scale, st_workers, st_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kValidation;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidation;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return kValidation;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}
