#include "su11/acquisition.hpp"

#include "su11/config.hpp"
#include "su11/errors.hpp"
#include "su11/parallel.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace su11 {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinSpdcFidelity = 0.999;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(Preset preset) {
    switch (preset) {
        case Preset::PhiPlus: return "PhiPlus";
        case Preset::PhiMinus: return "PhiMinus";
        case Preset::PsiPlus: return "PsiPlus";
        case Preset::Custom: return "custom";
    }
    return "?";
}

Preset preset_from_string(std::string_view name) {
    if (name == "PhiPlus") return Preset::PhiPlus;
    if (name == "PhiMinus") return Preset::PhiMinus;
    if (name == "PsiPlus") return Preset::PsiPlus;
    if (name == "custom") return Preset::Custom;
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected PhiPlus, PhiMinus, PsiPlus or custom)");
}

std::string_view to_string(SpdcPlateKind kind) {
    switch (kind) {
        case SpdcPlateKind::Rotation: return "rotation";
        case SpdcPlateKind::HalfWave: return "half_wave";
        case SpdcPlateKind::QuarterWaveDoublePass: return "quarter_wave_double_pass";
    }
    return "?";
}

SpdcPlateKind spdc_plate_kind_from_string(std::string_view name) {
    if (name == "rotation") return SpdcPlateKind::Rotation;
    if (name == "half_wave") return SpdcPlateKind::HalfWave;
    if (name == "quarter_wave_double_pass") return SpdcPlateKind::QuarterWaveDoublePass;
    throw ConfigError("unknown SPDC plate kind '" + std::string(name) + "'");
}

PlateSettings table_settings(Preset preset) {
    switch (preset) {
        case Preset::PhiPlus: return {0.0, 90.0, SpdcPlateKind::QuarterWaveDoublePass};
        case Preset::PhiMinus: return {90.0, 90.0, SpdcPlateKind::QuarterWaveDoublePass};
        case Preset::PsiPlus: return {90.0, 45.0, SpdcPlateKind::QuarterWaveDoublePass};
        case Preset::Custom: break;
    }
    throw ConfigError("custom preset has no table settings");
}

// ---------------------------------------------------------------------------
// Calibration

WavelengthCalibration::WavelengthCalibration(std::array<double, 4> coefficients, double lambda_ref_nm)
    : coeffs_(coefficients), lambda_ref_(lambda_ref_nm) {
    for (double c : coeffs_)
        if (!std::isfinite(c)) throw ConfigError("calibration coefficients must be finite");
}

double WavelengthCalibration::column(double wavelength_nm) const {
    const double x = wavelength_nm - lambda_ref_;
    return coeffs_[0] + x * (coeffs_[1] + x * (coeffs_[2] + x * coeffs_[3]));
}

double WavelengthCalibration::slope(double wavelength_nm) const {
    const double x = wavelength_nm - lambda_ref_;
    return coeffs_[1] + x * (2.0 * coeffs_[2] + x * 3.0 * coeffs_[3]);
}

double WavelengthCalibration::wavelength(double col) const {
    auto f = [&](double lambda) { return column(lambda) - col; };
    // Smallest symmetric bracket around lambda_ref holding a sign change.
    double half = 1.0;
    double lo = lambda_ref_, hi = lambda_ref_;
    bool found = f(lambda_ref_) == 0.0;
    if (found) return lambda_ref_;
    while (half < 1e5) {
        lo = lambda_ref_ - half;
        hi = lambda_ref_ + half;
        if (f(lo) * f(lambda_ref_) <= 0.0) {
            hi = lambda_ref_;
            found = true;
            break;
        }
        if (f(hi) * f(lambda_ref_) <= 0.0) {
            lo = lambda_ref_;
            found = true;
            break;
        }
        half *= 2.0;
    }
    if (!found) throw ConfigError("calibration does not reach column " + std::to_string(col));
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * lambda_ref_; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm <= 0.0) == (flo <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

void WavelengthCalibration::require_monotonic(double lambda_lo_nm, double lambda_hi_nm) const {
    std::vector<double> probes{lambda_lo_nm, lambda_hi_nm};
    if (coeffs_[3] != 0.0) {
        const double vertex = lambda_ref_ - coeffs_[2] / (3.0 * coeffs_[3]);
        if (vertex > lambda_lo_nm && vertex < lambda_hi_nm) probes.push_back(vertex);
    }
    const double s0 = slope(probes.front());
    for (double p : probes) {
        const double s = slope(p);
        if (s == 0.0 || (s > 0.0) != (s0 > 0.0))
            throw ConfigError("wavelength calibration is not strictly monotonic over the camera band");
    }
}

// ---------------------------------------------------------------------------
// Config validation

void CameraModel::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(rows > 0 && cols > 1, "camera rows/cols must be positive");
    require(bit_depth == 8 || bit_depth == 16, "camera bit_depth must be 8 or 16");
    auto inside = [&](StripeBounds s) { return s.begin < s.end && s.end <= rows; };
    require(inside(stripe_h) && inside(stripe_v), "stripes must be non-empty and inside the frame");
    require(stripe_h.end <= stripe_v.begin || stripe_v.end <= stripe_h.begin, "stripes must be disjoint");
    require(std::isfinite(psf_sigma) && psf_sigma >= 0, "psf_sigma must be >= 0");
    require(std::isfinite(counts_per_unit) && counts_per_unit > 0, "counts_per_unit must be > 0");
    require(std::isfinite(read_noise) && read_noise >= 0, "read_noise must be >= 0");
    require(std::isfinite(fps) && fps > 0, "fps must be > 0");
    require(std::isfinite(exposure_phase_blur) && exposure_phase_blur >= 0, "exposure_phase_blur must be >= 0");
}

void ExperimentConfig::validate() const {
    try {
        spectral.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    camera.validate();
    if (n_frames < 1) throw ConfigError("n_frames must be >= 1");
    if (!std::isfinite(drift.sigma_step) || drift.sigma_step < 0) throw ConfigError("drift sigma_step must be >= 0");
    if (!std::isfinite(drift.phi_init)) throw ConfigError("drift phi_init must be finite");
    if (!std::isfinite(drift.sigma_differential) || drift.sigma_differential < 0)
        throw ConfigError("drift sigma_differential must be >= 0");
    if (!std::isfinite(plates.pump_plate_deg) || !std::isfinite(plates.spdc_plate_deg))
        throw ConfigError("plate angles must be finite");
    if (preset != Preset::Custom) {
        const PlateSettings t = table_settings(preset);
        if (plates.pump_plate_deg != t.pump_plate_deg || plates.spdc_plate_deg != t.spdc_plate_deg)
            throw ConfigError("plate angles for preset " + std::string(to_string(preset)) + " must be pump " +
                              std::to_string(t.pump_plate_deg) + " deg, SPDC " + std::to_string(t.spdc_plate_deg) +
                              " deg");
    }

    const double edge_a = calibration.wavelength(0.0);
    const double edge_b = calibration.wavelength(static_cast<double>(camera.cols - 1));
    calibration.require_monotonic(std::min(edge_a, edge_b), std::max(edge_a, edge_b));
    const double ref_col = calibration.column(kReferenceWavelengthNm);
    if (!(ref_col >= 0.0 && ref_col <= camera.cols - 1.0)) throw ConfigError("1064 nm maps outside the frame");
    const double guard = 3.0 * 2.0 * std::numbers::pi * spectral.envelope_fwhm;
    for (double lambda : {edge_a, edge_b}) {
        if (std::abs(angular_frequency_from_nm(lambda) - spectral.omega0) > guard)
            throw ConfigError("camera band extends beyond +-3 envelope FWHM");
    }
}

ExperimentConfig revival_config(const ExperimentConfig& config) {
    ExperimentConfig out = config;
    out.preset = Preset::Custom;
    out.plates.spdc_plate_deg = 90.0;
    return out;
}

// ---------------------------------------------------------------------------
// Presets

TwoPhotonOperator<> spdc_plate_operator(SpdcPlateKind kind, double angle_deg) {
    const double a = angle_deg * kDeg;
    switch (kind) {
        case SpdcPlateKind::Rotation: return rotation_operator(a);
        case SpdcPlateKind::HalfWave: return waveplate_operator(WaveplateKind::Half, a / 2.0);
        case SpdcPlateKind::QuarterWaveDoublePass:
            // Fast axis at 45 deg, retardance twice the setting: quarter-wave
            // at 45 deg, half-wave (H <-> V) at 90 deg.
            return retarder_operator(std::numbers::pi / 4.0, 2.0 * a);
    }
    throw ConfigError("unknown SPDC plate kind");
}

PresetPipeline preset_pipeline(const ExperimentConfig& config) {
    config.validate();
    const auto& model = config.spectral;
    const JonesVector<> forward_pump = linear_polarization(std::numbers::pi / 4.0);
    const TwoPhotonOperator<> op = spdc_plate_operator(config.plates.spdc_kind, config.plates.spdc_plate_deg);

    const BiphotonPolarState<> ideal = normalize(op * pump_generation_vector(forward_pump, 1.0));
    if (config.preset == Preset::PsiPlus && fidelity(ideal, BellKind::PsiPlus) < kMinSpdcFidelity)
        throw ConfigError("SPDC plate kind '" + std::string(to_string(config.plates.spdc_kind)) +
                          "' at 45 deg does not produce Psi+ (fidelity " +
                          std::to_string(fidelity(ideal, BellKind::PsiPlus)) + ")");
    if ((config.preset == Preset::PhiPlus || config.preset == Preset::PhiMinus) &&
        fidelity(ideal, BellKind::PhiPlus) < kMinSpdcFidelity)
        throw ConfigError("SPDC plate kind '" + std::string(to_string(config.plates.spdc_kind)) +
                          "' at 90 deg does not preserve Phi+");

    // The first pass through the unequal crystals already carries the
    // birefringent phase; the engine applies it again on the second pass.
    BiphotonPolarState<> generated = pump_generation_vector(forward_pump, model.epsilon1);
    generated = apply_birefringence(generated, model.delta_bir);

    PresetPipeline out;
    out.spdc_operator = op;
    out.state_in = op * generated;
    out.meas.pump2 = linear_polarization(std::numbers::pi / 4.0 - config.plates.pump_plate_deg * kDeg);
    out.meas.phi0 = 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Drift

std::vector<double> simulate_phase_trajectory(const DriftModel& drift, std::size_t n_frames) {
    if (n_frames < 1) throw std::invalid_argument("simulate_phase_trajectory: n_frames must be >= 1");
    if (!(drift.sigma_step >= 0)) throw std::invalid_argument("simulate_phase_trajectory: sigma_step must be >= 0");
    std::vector<double> phi(n_frames, drift.phi_init);
    if (drift.sigma_step == 0.0) return phi;
    std::mt19937_64 rng(drift.seed);
    boost::random::normal_distribution<double> step(0.0, drift.sigma_step);
    for (std::size_t t = 1; t < n_frames; ++t) phi[t] = phi[t - 1] + step(rng);
    return phi;
}

// ---------------------------------------------------------------------------
// Rendering

ColumnGrid column_grid(const CameraModel& cam, const WavelengthCalibration& cal) {
    std::vector<std::pair<double, std::uint32_t>> pts;
    pts.reserve(cam.cols);
    for (std::uint32_t c = 0; c < cam.cols; ++c)
        pts.emplace_back(angular_frequency_from_nm(cal.wavelength(static_cast<double>(c))), c);
    std::sort(pts.begin(), pts.end());
    ColumnGrid grid;
    grid.omega.resize(cam.cols);
    grid.column.resize(cam.cols);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        grid.omega(static_cast<Eigen::Index>(k)) = pts[k].first;
        grid.column[k] = pts[k].second;
    }
    return grid;
}

namespace {

double interpolate(const Eigen::VectorXd& grid, const Eigen::VectorXd& values, double x) {
    const double* first = grid.data();
    const double* last = first + grid.size();
    const double* it = std::lower_bound(first, last, x);
    if (it == last) {
        if (x - grid(grid.size() - 1) > 1e-9 * std::abs(x))
            throw std::invalid_argument("render_frame: spectra grid does not cover the calibrated band");
        return values(grid.size() - 1);
    }
    const Eigen::Index k = it - first;
    if (*it == x) return values(k);
    if (k == 0) {
        if (grid(0) - x > 1e-9 * std::abs(x))
            throw std::invalid_argument("render_frame: spectra grid does not cover the calibrated band");
        return values(0);
    }
    const double t = (x - grid(k - 1)) / (grid(k) - grid(k - 1));
    return (1.0 - t) * values(k - 1) + t * values(k);
}

Eigen::VectorXd gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    Eigen::VectorXd k(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) k(i + radius) = std::exp(-0.5 * i * i / (sigma * sigma));
    return k / k.sum();
}

// Zero-padded separable convolution.
// Zero-padded 1-D convolution with a centred kernel.
Eigen::VectorXd convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& k) {
    const Eigen::Index radius = k.size() / 2;
    const Eigen::Index n = x.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index d = -radius; d <= radius; ++d)
            if (i + d >= 0 && i + d < n) out(i) += k(d + radius) * x(i + d);
    return out;
}

Eigen::VectorXd stripe_profile(const CameraModel& cam, StripeBounds s) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(cam.rows);
    p.segment(s.begin, s.size()).setOnes();
    return p;
}

}  // namespace

RenderedFrame render_frame(const SpectrumPair& spectra, const CameraModel& cam, const WavelengthCalibration& cal,
                           std::uint64_t seed) {
    cam.validate();
    Eigen::VectorXd col_h(cam.cols), col_v(cam.cols);
    for (std::uint32_t c = 0; c < cam.cols; ++c) {
        const double omega = angular_frequency_from_nm(cal.wavelength(static_cast<double>(c)));
        col_h(c) = interpolate(spectra.grid, spectra.s_h, omega);
        col_v(c) = interpolate(spectra.grid, spectra.s_v, omega);
    }
    // The ideal image is (stripe rows) x (spectrum) per polarization, so the
    // separable PSF blurs the row profile and the spectrum independently.
    Eigen::VectorXd row_h = stripe_profile(cam, cam.stripe_h), row_v = stripe_profile(cam, cam.stripe_v);
    if (cam.psf_sigma > 0.0) {
        const Eigen::VectorXd k = gaussian_kernel(cam.psf_sigma);
        row_h = convolve(row_h, k);
        row_v = convolve(row_v, k);
        col_h = convolve(col_h, k);
        col_v = convolve(col_v, k);
    }
    const Eigen::MatrixXd mean =
        cam.counts_per_unit * (row_h * col_h.transpose() + row_v * col_v.transpose());

    std::mt19937_64 rng(seed);
    boost::random::normal_distribution<double> read(0.0, cam.read_noise > 0 ? cam.read_noise : 1.0);
    const double max_count = std::ldexp(1.0, cam.bit_depth) - 1.0;

    RenderedFrame out;
    out.frame.resize(cam.rows, cam.cols);
    std::size_t saturated = 0;
    for (std::uint32_t r = 0; r < cam.rows; ++r) {
        for (std::uint32_t c = 0; c < cam.cols; ++c) {
            const double mu = std::max(0.0, mean(r, c));
            double value = mu;
            if (cam.poisson) {
                value = 0.0;
                if (mu > 0.0) value = boost::random::poisson_distribution<long, double>(mu)(rng);
            }
            if (cam.read_noise > 0.0) value += read(rng);
            value = std::round(value);
            if (value >= max_count) ++saturated;
            out.frame(r, c) = static_cast<std::uint16_t>(std::clamp(value, 0.0, max_count));
        }
    }
    out.saturated_fraction = static_cast<double>(saturated) / static_cast<double>(cam.rows * cam.cols);
    return out;
}

std::uint64_t frame_seed(std::uint64_t noise_seed, std::uint64_t frame_index) {
    return splitmix64(noise_seed ^ splitmix64(frame_index));
}

FrameStack simulate_experiment(const ExperimentConfig& config) {
    const PresetPipeline pipe = preset_pipeline(config);
    const std::vector<double> phases = simulate_phase_trajectory(config.drift, config.n_frames);
    std::vector<double> differential(config.n_frames, 0.0);
    if (config.drift.sigma_differential > 0.0) {
        DriftModel d{config.drift.sigma_differential, 0.0, splitmix64(config.drift.seed ^ 0xd1ffull), 0.0};
        differential = simulate_phase_trajectory(d, config.n_frames);
    }
    const ColumnGrid grid = column_grid(config.camera, config.calibration);

    FrameStack stack;
    auto& h = stack.header;
    h.rows = config.camera.rows;
    h.cols = config.camera.cols;
    h.n_frames = config.n_frames;
    h.bit_depth = config.camera.bit_depth;
    h.fps = config.camera.fps;
    h.calibration = config.calibration.coefficients();
    h.stripe_h = config.camera.stripe_h;
    h.stripe_v = config.camera.stripe_v;
    h.seeds = {config.drift.seed, config.camera.noise_seed};
    h.digest = config_digest(config);

    constexpr int kBlurSamples = 5;
    std::vector<double> saturation(config.n_frames, 0.0);
    stack.frames.resize(config.n_frames);
    parallel_for(config.n_frames, [&](std::size_t t) {
        MeasurementConfig meas = pipe.meas;
        meas.differential_phase = differential[t];
        SpectrumPair spectra;
        if (config.camera.exposure_phase_blur > 0.0) {
            for (int s = 0; s < kBlurSamples; ++s) {
                meas.phi0 = phases[t] + config.camera.exposure_phase_blur * ((s + 0.5) / kBlurSamples - 0.5);
                SpectrumPair sub = output_spectra(pipe.state_in, meas, config.spectral, grid.omega);
                if (s == 0) {
                    spectra = std::move(sub);
                } else {
                    spectra.s_h += sub.s_h;
                    spectra.s_v += sub.s_v;
                }
            }
            spectra.s_h /= kBlurSamples;
            spectra.s_v /= kBlurSamples;
        } else {
            meas.phi0 = phases[t];
            spectra = output_spectra(pipe.state_in, meas, config.spectral, grid.omega);
        }
        RenderedFrame r = render_frame(spectra, config.camera, config.calibration,
                                       frame_seed(config.camera.noise_seed, t));
        stack.frames[t] = std::move(r.frame);
        saturation[t] = r.saturated_fraction;
    });
    stack.saturation_warning =
        std::any_of(saturation.begin(), saturation.end(), [](double f) { return f > 0.01; });
    return stack;
}

}  // namespace su11
