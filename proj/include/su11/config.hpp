#pragma once

// Run configuration: YAML document <-> ExperimentConfig + analysis options,
// canonical serialization and the SHA-256 config digest.

#include "su11/acquisition.hpp"
#include "su11/analysis.hpp"
#include "su11/frame_stack.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace su11 {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kRngName = "mt19937_64/boost.random";

struct OutputSettings {
    std::string stack;
    std::string report_dir;
};

struct RunConfig {
    ExperimentConfig experiment;
    AnalysisOptions analysis;
    OutputSettings output;
};

/// Defaults for a preset (Table 1 plates); Custom starts from PhiPlus plates.
RunConfig default_run_config(Preset preset = Preset::PhiPlus);

/// Parses and validates. Throws ConfigError carrying the 1-based line of the
/// offending key when known; unknown keys are rejected.
RunConfig parse_run_config(std::string_view yaml_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// YAML document with every setting spelled out.
std::string emit_run_config(const RunConfig& config);

/// Canonical JSON of every field that influences a simulated stack.
nlohmann::json experiment_to_json(const ExperimentConfig& config);
Digest config_digest(const ExperimentConfig& config);
std::string digest_hex(const Digest& digest);

}  // namespace su11
