#pragma once

// Independent cross-checks of the algebra, the spectrum engine and the
// estimators. Used by `su11 oracle` and the acceptance suite.

#include "su11/acquisition.hpp"
#include "su11/analysis.hpp"
#include "su11/spectral.hpp"

#include <string>
#include <utility>
#include <vector>

namespace su11 {

struct OracleOptions {
    // Test hook: relative perturbation of the model handed to output_spectra.
    double spectrum_perturbation = 0.0;
};

struct OracleResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

std::vector<OracleResult> run_oracles(const OracleOptions& options = {});

/// Explicit two-amplitude interference sum per co-polarized channel,
/// written without the engine's helpers.
std::pair<double, double> brute_force_density(const BiphotonPolarState<>& state_in, const MeasurementConfig& meas,
                                              const SpectralModel& model, double omega);

/// Contrast (percent, mean of H and V) at omega0 from a 64-point phi0 sweep of
/// the engine, for the given experiment.
double engine_contrast(const ExperimentConfig& config);

struct InversionPoint {
    double target_fraction = 0.0;  // residual / reference contrast requested
    double delta_bir = 0.0;        // injected birefringent phase
    double residual_pct = 0.0;
    double reference_pct = 0.0;
    double estimated_fidelity = 0.0;
    double true_fidelity = 0.0;    // |<Psi+|state_in>|^2
};

/// Finds the delta_bir giving residual contrast = fraction * reference in the
/// Psi+ preset, then re-estimates the fidelity from the two contrasts.
InversionPoint engine_inversion(const ExperimentConfig& psi_plus, double fraction);

}  // namespace su11
