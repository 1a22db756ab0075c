#pragma once

#include <cstdint>
#include <string>

#include "vjsim/agents.hpp"
#include "vjsim/core.hpp"

namespace vjsim {

// Everything a run needs, collected from one flat key=value file.  The file
// format is deliberately dumb: one "key = value" pair per line, '#' starts a
// comment, keys carry their unit as a suffix so a bare number in the file is
// never ambiguous.  Unknown keys are an error rather than a warning; silently
// ignored typos have burned us before.
struct ExperimentConfig {
  PhysicalParams phys;
  Arena arena;
  NumericalParams num;
  SimMode mode;
  SignalField signal;     // read when mode.signal != SignalMode::None
  int n_agents = 16;
  int n_runs = 50;
  std::uint64_t seed = 1;
  double warmup = 20.0;          // seconds spent mixing inside the closed pen
  double horizon = 20.0;         // forward-solver end time, seconds
  double mass_sample_dt = 0.1;   // cadence of mass-curve samples, seconds
  std::string out_dir = "out";

  void validate() const;
};

// Parse a config file.  Throws ConfigError on unreadable files, malformed
// lines, unknown keys, unparseable values, or values the core validators
// reject.
ExperimentConfig load_config(const std::string& path);

// Parse from an in-memory string (same rules); `origin` only decorates errors.
ExperimentConfig parse_config(const std::string& text, const std::string& origin);

// Canonical serialization: every key in a fixed order, shortest round-trip
// float formatting.  parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialization with the out_dir line dropped, so
// the digest identifies the experiment, not where its files land.
std::string config_digest(const ExperimentConfig& cfg);

// Shortest round-trip decimal form of a double ("inf" for the sentinel).
std::string format_double(double v);

}  // namespace vjsim
