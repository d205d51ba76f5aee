#include "su11/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace su11 {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// sinc^2(x) = 1/2 at x = 1.3915573...
constexpr double kSincHalfPoint = 1.39155737825151;
constexpr double kFlatFloor = 1e-6;

}  // namespace

double angular_frequency_from_nm(double wavelength_nm) {
    return kTwoPi * kSpeedOfLight / (wavelength_nm * 1e-9);
}

double wavelength_nm_from_angular_frequency(double omega) {
    return kTwoPi * kSpeedOfLight / omega * 1e9;
}

std::string_view to_string(EnvelopeShape shape) {
    return shape == EnvelopeShape::Gaussian ? "gaussian" : "sinc2";
}

EnvelopeShape envelope_shape_from_string(std::string_view name) {
    if (name == "gaussian") return EnvelopeShape::Gaussian;
    if (name == "sinc2") return EnvelopeShape::Sinc2;
    throw std::invalid_argument("unknown envelope shape '" + std::string(name) + "'");
}

void SpectralModel::validate() const {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(msg);
    };
    require(std::isfinite(omega0) && omega0 > 0, "omega0 must be positive");
    require(std::isfinite(envelope_fwhm) && envelope_fwhm > 0, "envelope_fwhm must be > 0");
    require(std::isfinite(tau) && std::isfinite(beta), "tau and beta must be finite");
    require(eta >= 0 && eta <= 1, "eta must lie in [0, 1]");
    require(std::isfinite(delta_bir), "delta_bir must be finite");
    require(epsilon1 >= 0 && epsilon1 <= kMaxLowGain, "epsilon1 must lie in [0, 0.3] (low-gain regime)");
    require(epsilon2 >= 0 && epsilon2 <= kMaxLowGain, "epsilon2 must lie in [0, 0.3] (low-gain regime)");
}

double interferometer_phase(double omega, const SpectralModel& model, double phi0) {
    const double d = omega - model.omega0;
    return phi0 + model.tau * d + model.beta * d * d;
}

double envelope(double omega, const SpectralModel& model) {
    const double dnu = (omega - model.omega0) / kTwoPi;
    if (model.shape == EnvelopeShape::Gaussian) {
        const double x = dnu / model.envelope_fwhm;
        return std::exp(-4.0 * std::numbers::ln2 * x * x);
    }
    const double u = 2.0 * kSincHalfPoint * dnu / model.envelope_fwhm;
    if (u == 0.0) return 1.0;
    const double s = std::sin(u) / u;
    return s * s;
}

namespace {

struct ChannelAmplitudes {
    BiphotonPolarState<> arriving;  // with birefringence applied
    BiphotonPolarState<> generated;
};

ChannelAmplitudes prepare(const BiphotonPolarState<>& state_in, const MeasurementConfig& meas,
                          const SpectralModel& model) {
    model.validate();
    if (model.eta == 0.0 && model.epsilon2 == 0.0)
        throw std::invalid_argument("output_spectra: eta = 0 and epsilon2 = 0 give an all-dark output");
    return {apply_birefringence(state_in, model.delta_bir), pump_generation_vector(meas.pump2, model.epsilon2)};
}

std::pair<double, double> density_at(const ChannelAmplitudes& a, const MeasurementConfig& meas,
                                     const SpectralModel& model, double omega) {
    const double phi = interferometer_phase(omega, model, meas.phi0);
    const std::complex<double> ph = std::polar(1.0, phi);
    const std::complex<double> pv = std::polar(1.0, phi + meas.differential_phase);
    const auto& m = a.arriving.c;
    const auto& g = a.generated.c;
    const double hh = std::norm(model.eta * m(kHH) * ph + g(kHH));
    const double vv = std::norm(model.eta * m(kVV) * pv + g(kVV));
    const double cross = 0.5 * model.eta * model.eta * (std::norm(m(kHV)) + std::norm(m(kVH)));
    const double gw = envelope(omega, model);
    return {gw * (hh + cross), gw * (vv + cross)};
}

}  // namespace

std::pair<double, double> output_density(const BiphotonPolarState<>& state_in, const MeasurementConfig& meas,
                                         const SpectralModel& model, double omega) {
    return density_at(prepare(state_in, meas, model), meas, model, omega);
}

SpectrumPair output_spectra(const BiphotonPolarState<>& state_in, const MeasurementConfig& meas,
                            const SpectralModel& model, const Eigen::VectorXd& grid) {
    const ChannelAmplitudes amps = prepare(state_in, meas, model);
    const double guard = 3.0 * kTwoPi * model.envelope_fwhm;
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        if (!(std::abs(grid(k) - model.omega0) <= guard))
            throw std::invalid_argument("output_spectra: grid point outside +-3 FWHM of omega0");
        if (k > 0 && !(grid(k) > grid(k - 1)))
            throw std::invalid_argument("output_spectra: grid must be strictly increasing");
    }

    SpectrumPair out{grid, Eigen::VectorXd(grid.size()), Eigen::VectorXd(grid.size())};
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const auto [h, v] = density_at(amps, meas, model, grid(k));
        out.s_h(k) = h;
        out.s_v(k) = v;
    }
    return out;
}

double wrap_phase(double x) {
    double r = std::remainder(x, kTwoPi);
    if (r <= -std::numbers::pi) r += kTwoPi;
    return r;
}

namespace {

double sample_at(const Eigen::VectorXd& grid, const Eigen::VectorXd& values, double omega) {
    const auto* first = grid.data();
    const auto* last = grid.data() + grid.size();
    const auto* it = std::lower_bound(first, last, omega);
    if (it == last) return values(grid.size() - 1);
    const Eigen::Index k = it - first;
    if (k == 0 || *it == omega) return values(k);
    const double t = (omega - grid(k - 1)) / (grid(k) - grid(k - 1));
    return (1.0 - t) * values(k - 1) + t * values(k);
}

// Least-squares fit of a + b cos(phi) + c sin(phi); returns the response
// phase psi such that the oscillating part is |B| cos(phi + psi).
std::optional<double> fundamental_phase(const Eigen::VectorXd& response, std::span<const double> phi0) {
    Eigen::MatrixXd design(response.size(), 3);
    for (Eigen::Index k = 0; k < response.size(); ++k) {
        design(k, 0) = 1.0;
        design(k, 1) = std::cos(phi0[k]);
        design(k, 2) = std::sin(phi0[k]);
    }
    const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(response);
    const double amp = std::hypot(coef(1), coef(2));
    if (!(amp > kFlatFloor * std::abs(coef(0))) || amp == 0.0) return std::nullopt;
    return std::atan2(-coef(2), coef(1));
}

}  // namespace

FringeVisibility fringe_visibility(std::span<const SpectrumPair> sweep, std::span<const double> phi0,
                                   double omega_ref) {
    if (sweep.size() != phi0.size() || sweep.size() < 3)
        throw std::invalid_argument("fringe_visibility: need >= 3 sweep points with matching phases");
    const auto [lo, hi] = std::minmax_element(phi0.begin(), phi0.end());
    if (*hi - *lo < kTwoPi * (1.0 - 1.0 / static_cast<double>(phi0.size())) - 1e-12)
        throw std::invalid_argument("fringe_visibility: phi0 sweep must cover 2 pi");

    Eigen::VectorXd h(sweep.size()), v(sweep.size());
    for (std::size_t k = 0; k < sweep.size(); ++k) {
        h(k) = sample_at(sweep[k].grid, sweep[k].s_h, omega_ref);
        v(k) = sample_at(sweep[k].grid, sweep[k].s_v, omega_ref);
    }
    auto vis = [](const Eigen::VectorXd& x) {
        const double mx = x.maxCoeff(), mn = x.minCoeff();
        return mx + mn > 0.0 ? (mx - mn) / (mx + mn) : 0.0;
    };

    FringeVisibility out{vis(h), vis(v), std::nullopt};
    if (out.v_h < kFlatFloor || out.v_v < kFlatFloor) return out;
    const auto ph = fundamental_phase(h, phi0);
    const auto pv = fundamental_phase(v, phi0);
    if (ph && pv) out.delta_psi = wrap_phase(*pv - *ph);
    return out;
}

FluxEstimate estimate_pair_flux(double epsilon1, double bandwidth_hz) {
    if (!std::isfinite(epsilon1) || !std::isfinite(bandwidth_hz) || bandwidth_hz < 0)
        throw std::invalid_argument("estimate_pair_flux: invalid arguments");
    // eps * (eps * B) rounds (0.1, 5e13) to exactly 5e11; (eps * eps) * B does not.
    const double n = epsilon1 * epsilon1;
    return {epsilon1 * (epsilon1 * bandwidth_hz), n < 0.1};
}

PhotonOccupancy mean_photons_per_coherence_time(double epsilon1) {
    const double n = epsilon1 * epsilon1;
    return {n, n < 0.1};
}

}  // namespace su11
