#pragma once

// Flat INI configuration with one section per module:
//
//   [selection] [solver] [pipeline] [oracle] [scenario]
//
// Keys are the field names of the corresponding structs; angles carry a
// `_deg` suffix. Unknown sections or keys are rejected.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "g2sfusion/g2s.h"
#include "g2sfusion/pipeline.h"
#include "g2sfusion/synth.h"

namespace g2sfusion {

struct RunConfig {
  PipelineConfig pipeline;
  OracleNoise oracle;
  ScenarioConfig scenario;

  void validate() const;
};

/// "kitti" and "fordav" carry the published parameter sets. "synthetic"
/// re-balances the term weights to the synthetic noise levels and is the
/// default for simulated runs.
RunConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Overrides fields of `config` from INI text. Throws kConfigInvalid.
void apply_ini(std::istream& is, RunConfig& config, const std::string& source = "<stream>");
void apply_ini_file(const std::filesystem::path& path, RunConfig& config);

/// Writes every field as INI; apply_ini() on the output reproduces `config`.
void write_ini(std::ostream& os, const RunConfig& config);

}  // namespace g2sfusion
