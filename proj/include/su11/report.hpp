#pragma once

// Report JSON, run manifests and static SVG plots.

#include "su11/analysis.hpp"
#include "su11/frame_stack.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace su11 {

inline constexpr int kReportSchema = 1;

nlohmann::json report_to_json(const AnalysisReport& report);

struct RunManifest {
    std::string command;
    std::string config_digest;  // hex
    std::map<std::string, std::string> outputs;
    std::map<std::string, double> timings_s;
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

/// Stripe spectra of the H-extremal frames, both polarizations from the same frame.
std::string spectra_svg(const FrameStack& stack, const RunAnalysis& run);

/// I_ref time series of both polarizations.
std::string reference_series_svg(const RunAnalysis& run, double fps);

}  // namespace su11
