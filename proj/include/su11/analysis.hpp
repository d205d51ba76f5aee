#pragma once

// Measurement pipeline on a recorded frame stack: stripe spectra, extremal
// frames at 1064 nm, contrast, relative fringe phase and Bell labelling.

#include "su11/acquisition.hpp"
#include "su11/frame_stack.hpp"
#include "su11/spectral.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace su11 {

enum class Polarization { H, V };

enum class BellLabel { PhiPlus, PhiMinus, PsiPlusCandidate, PsiPlusConfirmed, Unknown };

std::string_view to_string(BellLabel label);
BellLabel bell_label_from_string(std::string_view name);

struct Thresholds {
    double high_pct = 50.0;
    double low_pct = 20.0;
    double phase_tol = 0.3;  // rad
};

struct AnalysisOptions {
    Thresholds thresholds;
    double lambda_ref_nm = kReferenceWavelengthNm;
    int ref_halfwidth = 2;         // columns each side of the reference pixel
    double band_fraction = 0.6;    // analysed band, fraction of envelope FWHM
    double min_modulation = 0.02;  // relative fringe depth floor
};

struct StripeSpectrum {
    Eigen::VectorXd intensity;
    Eigen::VectorXd wavelength_nm;
};

/// Column-wise sum over the stripe rows.
StripeSpectrum extract_stripe_spectrum(const Frame& frame, StripeBounds stripe, const WavelengthCalibration& cal);

struct FrameMetrics {
    std::size_t frame = 0;
    double i_ref_h = 0.0;
    double i_ref_v = 0.0;
};

FrameMetrics frame_metrics(const Frame& frame, std::size_t index, StripeBounds stripe_h, StripeBounds stripe_v,
                           double ref_column, int halfwidth);

struct ExtremalFrames {
    std::size_t idx_max = 0;
    std::size_t idx_min = 0;
};

/// Ties resolve to the lowest frame index.
ExtremalFrames select_extremal_frames(std::span<const FrameMetrics> metrics, Polarization pol);
ExtremalFrames select_extremal_frames(const FrameStack& stack, Polarization pol, const AnalysisOptions& options = {});

/// 100 (I_max - I_min) / (I_max + I_min).
double contrast(double i_max, double i_min);

/// Half-open column range.
struct ColumnBand {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

/// Columns within +-fraction/2 of the envelope FWHM around omega0.
ColumnBand analysis_band(const WavelengthCalibration& cal, std::uint32_t cols, const SpectralModel& model,
                         double fraction);

/// Fringe phase of `v` relative to `h` (same spatial frequency), in (-pi, pi].
/// Empty when either trace has relative modulation below `min_modulation`.
std::optional<double> relative_fringe_phase(const Eigen::VectorXd& h, const Eigen::VectorXd& v,
                                            double min_modulation = 0.02);

std::optional<double> relative_fringe_phase(const Frame& frame, StripeBounds stripe_h, StripeBounds stripe_v,
                                            const WavelengthCalibration& cal, ColumnBand band,
                                            double min_modulation = 0.02);

struct RunMeasurement {
    double contrast_h = 0.0;
    double contrast_v = 0.0;
    std::optional<double> delta_psi;
};

BellLabel classify(const RunMeasurement& primary, const std::optional<RunMeasurement>& revival,
                   const Thresholds& thresholds = {});

/// F = 1 - (C_residual / C_reference)^2.
double fidelity_from_residual_contrast(double c_residual, double c_reference);

struct RunAnalysis {
    RunMeasurement measurement;
    ExtremalFrames selected_h;
    ExtremalFrames selected_v;
    std::vector<FrameMetrics> metrics;
    std::vector<std::optional<double>> frame_delta_psi;
    ColumnBand band;
    double ref_column = 0.0;
};

/// Per-frame metrics and phases plus the run-level contrasts. `model` supplies
/// the envelope centre and width that define the analysed band.
RunAnalysis analyze_run(const FrameStack& stack, const SpectralModel& model, const AnalysisOptions& options = {});

struct AnalysisReport {
    RunMeasurement primary;
    ExtremalFrames selected_h;
    ExtremalFrames selected_v;
    std::size_t frames = 0;
    std::size_t frames_with_phase = 0;
    std::optional<RunMeasurement> revival;
    BellLabel label = BellLabel::Unknown;
    std::optional<double> fidelity_estimate;
    Thresholds thresholds;
};

AnalysisReport build_report(const RunAnalysis& primary, const RunAnalysis* revival, const AnalysisOptions& options);

/// Circular mean of the defined entries; empty if none.
std::optional<double> circular_mean(std::span<const std::optional<double>> phases);

}  // namespace su11
