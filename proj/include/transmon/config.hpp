#pragma once

// Run configuration: one device section, one experiment section, seed and
// output directory. Everything is validated before any work starts.

#include <cstdint>
#include <optional>
#include <string>

#include "transmon/plan.hpp"
#include "transmon/serialize.hpp"

namespace transmon::config {

struct RunConfig {
  device::DeviceSpec device;
  experiments::ExperimentPlan plan;
  std::uint64_t seed = 1;
  std::string output; // empty: caller decides
};

/// Parses and validates a config. With kind_override set, the experiment
/// section becomes optional and a section of a different kind is replaced
/// by that kind's default plan.
inline RunConfig parse_run_config(const std::string& text,
                                  std::optional<experiments::Kind> kind_override = std::nullopt,
                                  std::optional<std::uint64_t> seed_override = std::nullopt) {
  const io::json j = io::parse_config_text(text);
  std::vector<std::string> missing;
  io::ObjectReader r(j, "config", missing);
  const io::json* dev = r.child("device");
  const io::json* exp = r.child("experiment");
  RunConfig cfg;
  cfg.seed = r.optional<std::uint64_t>("seed", 1);
  cfg.output = r.optional<std::string>("output", "");
  r.reject_unknown();

  if (!dev) missing.push_back("config.device");
  if (!exp && !kind_override) missing.push_back("config.experiment");
  // Collect the device's own missing keys too, so one message lists all.
  if (dev && dev->is_object()) {
    for (const char* key : {"f_q", "anharmonicity", "f_r", "Q_i", "Q_e", "chi", "T1", "T2"}) {
      if (!dev->contains(key)) missing.push_back(std::string("device.") + key);
    }
  }
  if (exp && exp->is_object() && !exp->contains("kind") && !kind_override) {
    missing.push_back("experiment.kind");
  }
  io::throw_if_missing(missing);

  if (seed_override) cfg.seed = *seed_override;
  cfg.device = io::device_from_json(*dev);

  const bool use_section =
      exp && (!kind_override || (exp->contains("kind") && experiments::kind_from_string((*exp)["kind"].get<std::string>()) ==
                                                              *kind_override));
  if (use_section) {
    cfg.plan = io::plan_from_json(*exp, cfg.device, cfg.seed);
  } else {
    cfg.plan = io::plan_from_json(io::json{{"kind", std::string(experiments::to_string(*kind_override))}},
                                  cfg.device, cfg.seed);
  }
  return cfg;
}

} // namespace transmon::config
