#pragma once

// Table-1 presets, phase drift, spectrometer calibration and synthetic CCD
// frame rendering.

#include "su11/frame_stack.hpp"
#include "su11/polarization.hpp"
#include "su11/spectral.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace su11 {

enum class Preset { PhiPlus, PhiMinus, PsiPlus, Custom };

enum class SpdcPlateKind { Rotation, HalfWave, QuarterWaveDoublePass };

std::string_view to_string(Preset preset);
Preset preset_from_string(std::string_view name);
std::string_view to_string(SpdcPlateKind kind);
SpdcPlateKind spdc_plate_kind_from_string(std::string_view name);

struct PlateSettings {
    double pump_plate_deg = 0.0;
    double spdc_plate_deg = 90.0;
    SpdcPlateKind spdc_kind = SpdcPlateKind::QuarterWaveDoublePass;
};

/// Table 1 plate angles for a non-custom preset.
PlateSettings table_settings(Preset preset);

struct DriftModel {
    double sigma_step = 0.7;  // rad per frame
    double phi_init = 0.0;
    std::uint64_t seed = 1;
    double sigma_differential = 0.0;  // rad per frame, V channel only
};

/// Cubic map from wavelength to fractional column index, in powers of
/// (lambda - lambda_ref).
class WavelengthCalibration {
public:
    WavelengthCalibration() = default;
    explicit WavelengthCalibration(std::array<double, 4> coefficients, double lambda_ref_nm = kReferenceWavelengthNm);

    double column(double wavelength_nm) const;
    double slope(double wavelength_nm) const;
    /// Inverse map; requires the calibration to be monotonic around lambda_ref.
    double wavelength(double column) const;

    /// Throws unless the map is strictly monotonic on [lo, hi].
    void require_monotonic(double lambda_lo_nm, double lambda_hi_nm) const;

    const std::array<double, 4>& coefficients() const { return coeffs_; }
    double lambda_ref() const { return lambda_ref_; }

private:
    std::array<double, 4> coeffs_{260.0, 2.0, -0.002, 5e-7};
    double lambda_ref_ = kReferenceWavelengthNm;
};

struct CameraModel {
    std::uint32_t rows = 40;
    std::uint32_t cols = 512;
    StripeBounds stripe_h{10, 16};
    StripeBounds stripe_v{24, 30};
    double psf_sigma = 1.0;             // pixels
    double counts_per_unit = 2.0e6;     // counts per spectral-density unit per exposure
    double read_noise = 5.0;            // counts rms
    std::uint8_t bit_depth = 16;
    double fps = 50.0;
    std::uint64_t noise_seed = 7;
    bool poisson = true;
    double exposure_phase_blur = 0.0;   // rad of phase swept during one exposure

    void validate() const;
};

struct ExperimentConfig {
    Preset preset = Preset::PhiPlus;
    PlateSettings plates = table_settings(Preset::PhiPlus);
    SpectralModel spectral;
    DriftModel drift;
    CameraModel camera;
    WavelengthCalibration calibration;
    std::uint32_t n_frames = 200;

    void validate() const;
};

/// Config for the revival companion of a run: same settings, SPDC plate at 90 degrees.
ExperimentConfig revival_config(const ExperimentConfig& config);

/// Mid-interferometer operator for a given SPDC plate setting.
TwoPhotonOperator<> spdc_plate_operator(SpdcPlateKind kind, double angle_deg);

struct PresetPipeline {
    BiphotonPolarState<> state_in;  // eps-scaled, arriving at the second pass
    MeasurementConfig meas;
    TwoPhotonOperator<> spdc_operator;
};

PresetPipeline preset_pipeline(const ExperimentConfig& config);

/// Common-mode random-walk phase, one value per frame.
std::vector<double> simulate_phase_trajectory(const DriftModel& drift, std::size_t n_frames);

/// Column angular frequencies, sorted ascending, and the column of each.
struct ColumnGrid {
    Eigen::VectorXd omega;                 // ascending
    std::vector<std::uint32_t> column;     // column for omega(k)
};

ColumnGrid column_grid(const CameraModel& cam, const WavelengthCalibration& cal);

struct RenderedFrame {
    Frame frame;
    double saturated_fraction = 0.0;
};

RenderedFrame render_frame(const SpectrumPair& spectra, const CameraModel& cam, const WavelengthCalibration& cal,
                           std::uint64_t seed);

/// Per-frame noise seed derived from the camera seed.
std::uint64_t frame_seed(std::uint64_t noise_seed, std::uint64_t frame_index);

FrameStack simulate_experiment(const ExperimentConfig& config);

}  // namespace su11
