#pragma once

// Composed runs: analysis of a stack against its config, the three-preset
// round trip, and the CSV-to-stack import path.

#include "su11/analysis.hpp"
#include "su11/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace su11 {

struct StackAnalysis {
    RunAnalysis primary;
    std::optional<RunAnalysis> revival;
    AnalysisReport report;
};

StackAnalysis analyze_stack(const FrameStack& stack, const FrameStack* revival, const RunConfig& config);

/// Expected label of a Table-1 preset when its revival companion is supplied.
BellLabel expected_label(Preset preset);

struct RoundtripCase {
    Preset preset = Preset::PhiPlus;
    BellLabel expected = BellLabel::Unknown;
    AnalysisReport report;
    double drift_span = 0.0;        // max - min of the phase trajectory, rad
    bool insufficient_drift = false;
    bool pass() const { return report.label == expected; }
};

struct RoundtripResult {
    std::uint64_t seed_offset = 0;
    std::vector<RoundtripCase> cases;
    bool passed() const;
};

/// Simulates and analyzes the three presets (Psi+ with its revival run). Both
/// seeds of `base` are shifted by `seed_offset`.
RoundtripResult run_roundtrip(const RunConfig& base, std::uint64_t seed_offset = 0);

std::string format_summary(const std::vector<RoundtripResult>& results);

/// Reads frame_<t>_H.csv / frame_<t>_V.csv (t = 0, 1, ...) from `dir`. Each
/// file holds one line per stripe row, one value per pixel column. Geometry,
/// calibration and fps come from `config`.
FrameStack import_csv_stack(const std::filesystem::path& dir, const RunConfig& config);

}  // namespace su11
