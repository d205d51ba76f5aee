#pragma once

// Low-gain spectral model of the dual-polarization SU(1,1) interferometer.

#include "su11/polarization.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string_view>

namespace su11 {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kReferenceWavelengthNm = 1064.0;
inline constexpr double kMaxLowGain = 0.3;

/// Angular frequency (rad/s) of a vacuum wavelength in nm.
double angular_frequency_from_nm(double wavelength_nm);
double wavelength_nm_from_angular_frequency(double omega);

enum class EnvelopeShape { Gaussian, Sinc2 };

std::string_view to_string(EnvelopeShape shape);
EnvelopeShape envelope_shape_from_string(std::string_view name);

struct SpectralModel {
    double omega0 = angular_frequency_from_nm(kReferenceWavelengthNm);  // rad/s
    double envelope_fwhm = 50e12;                                       // Hz
    EnvelopeShape shape = EnvelopeShape::Gaussian;
    double tau = 0.2e-12;   // s, linear spectral phase
    double beta = 2.0e-29;  // s^2, quadratic spectral phase
    double eta = 0.545;     // round-trip pair amplitude transmission
    double delta_bir = 0.2507;  // rad, residual HH/VV birefringent phase
    double epsilon1 = 0.1;
    double epsilon2 = 0.1;

    /// Throws std::invalid_argument on a violated invariant.
    void validate() const;
};

/// Second-pass pump (measurement basis) and interferometer phase at omega0.
struct MeasurementConfig {
    JonesVector<> pump2 = linear_polarization(std::numbers::pi / 4);
    double phi0 = 0.0;
    // Extra phase on the VV channel only; zero for common-mode drift.
    double differential_phase = 0.0;
};

struct SpectrumPair {
    Eigen::VectorXd grid;  // rad/s, strictly increasing
    Eigen::VectorXd s_h;
    Eigen::VectorXd s_v;
};

double interferometer_phase(double omega, const SpectralModel& model, double phi0);

/// Phase-matching envelope, peak 1 at omega0, 0.5 at +-FWHM/2.
double envelope(double omega, const SpectralModel& model);

/// Polarization-resolved output spectra for the state arriving at the
/// second crystal pair. Co-polarized amplitudes interfere with the
/// second-pass generation amplitude; cross-polarized pairs add half their
/// weight to each polarization.
SpectrumPair output_spectra(const BiphotonPolarState<>& state_in, const MeasurementConfig& meas,
                            const SpectralModel& model, const Eigen::VectorXd& grid);

/// Same as output_spectra but at a single frequency: returns (S_H, S_V).
std::pair<double, double> output_density(const BiphotonPolarState<>& state_in, const MeasurementConfig& meas,
                                         const SpectralModel& model, double omega);

struct FringeVisibility {
    double v_h = 0.0;
    double v_v = 0.0;
    std::optional<double> delta_psi;  // empty when either response is flat
};

/// Visibility and relative fringe phase at omega_ref over a phi0 sweep.
/// `sweep[k]` must be the spectra computed with interferometer offset `phi0[k]`.
FringeVisibility fringe_visibility(std::span<const SpectrumPair> sweep, std::span<const double> phi0,
                                   double omega_ref);

struct FluxEstimate {
    double pairs_per_second = 0.0;
    bool low_gain_valid = true;  // false when epsilon1^2 >= 0.1
};

FluxEstimate estimate_pair_flux(double epsilon1, double bandwidth_hz);

struct PhotonOccupancy {
    double mean_pairs = 0.0;
    bool single_pair_regime = true;
};

PhotonOccupancy mean_photons_per_coherence_time(double epsilon1);

/// Wraps an angle to (-pi, pi].
double wrap_phase(double x);

}  // namespace su11
