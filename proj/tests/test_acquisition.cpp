#include "su11/acquisition.hpp"
#include "su11/errors.hpp"
#include "su11/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace su11;

namespace {

constexpr double kPi = std::numbers::pi;

ExperimentConfig preset_config(Preset p) {
    ExperimentConfig c;
    c.preset = p;
    c.plates = table_settings(p);
    return c;
}

}  // namespace

TEST(Presets, TableSettings) {
    EXPECT_EQ(table_settings(Preset::PhiPlus).pump_plate_deg, 0.0);
    EXPECT_EQ(table_settings(Preset::PhiPlus).spdc_plate_deg, 90.0);
    EXPECT_EQ(table_settings(Preset::PhiMinus).pump_plate_deg, 90.0);
    EXPECT_EQ(table_settings(Preset::PhiMinus).spdc_plate_deg, 90.0);
    EXPECT_EQ(table_settings(Preset::PsiPlus).pump_plate_deg, 90.0);
    EXPECT_EQ(table_settings(Preset::PsiPlus).spdc_plate_deg, 45.0);
    EXPECT_EQ(preset_from_string("PsiPlus"), Preset::PsiPlus);
    EXPECT_THROW(preset_from_string("Bogus"), std::exception);
}

TEST(PresetPipeline, StatesAndMeasurementPumps) {
    for (Preset p : {Preset::PhiPlus, Preset::PhiMinus, Preset::PsiPlus}) {
        ExperimentConfig c = preset_config(p);
        c.spectral.delta_bir = 0.0;
        const PresetPipeline pipe = preset_pipeline(c);
        const auto state = normalize(pipe.state_in);
        const double pump_angle = std::atan2(pipe.meas.pump2(1).real(), pipe.meas.pump2(0).real());
        if (p == Preset::PsiPlus) {
            EXPECT_NEAR(fidelity(state, BellKind::PsiPlus), 1.0, 1e-12);
            EXPECT_NEAR(pump_angle, -kPi / 4, 1e-12);
        } else {
            EXPECT_NEAR(fidelity(state, BellKind::PhiPlus), 1.0, 1e-12);
            EXPECT_NEAR(pump_angle, p == Preset::PhiPlus ? kPi / 4 : -kPi / 4, 1e-12);
        }
    }
}

TEST(PresetPipeline, RejectsNonPsiPlusOperator) {
    for (SpdcPlateKind kind : {SpdcPlateKind::Rotation, SpdcPlateKind::HalfWave}) {
        ExperimentConfig c = preset_config(Preset::PsiPlus);
        c.plates.spdc_kind = kind;
        EXPECT_THROW(preset_pipeline(c), ConfigError) << to_string(kind);
    }
}

TEST(PresetPipeline, TableAnglesEnforced) {
    ExperimentConfig c = preset_config(Preset::PhiPlus);
    c.plates.spdc_plate_deg = 45.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.preset = Preset::Custom;
    EXPECT_NO_THROW(c.validate());
}

TEST(PresetPipeline, BirefringenceCancelsForPhiAndLeavesResidualForPsi) {
    ExperimentConfig phi = preset_config(Preset::PhiPlus);
    EXPECT_NEAR(fidelity(normalize(preset_pipeline(phi).state_in), BellKind::PhiPlus),
                std::pow(std::cos(phi.spectral.delta_bir / 2), 2), 1e-12);
    ExperimentConfig psi = preset_config(Preset::PsiPlus);
    EXPECT_NEAR(fidelity(normalize(preset_pipeline(psi).state_in), BellKind::PsiPlus),
                std::pow(std::cos(psi.spectral.delta_bir / 2), 2), 1e-12);
}

TEST(PresetPipeline, ResidualContrastMonotoneInBirefringence) {
    double prev = -1.0;
    for (double d : {0.0, 0.1, 0.2, 0.3, 0.4}) {
        ExperimentConfig c = preset_config(Preset::PsiPlus);
        c.spectral.delta_bir = d;
        const double cpct = engine_contrast(c);
        EXPECT_GT(cpct, prev);
        prev = cpct;
    }
}

TEST(Drift, Trajectories) {
    DriftModel d;
    d.sigma_step = 0.0;
    d.phi_init = 1.25;
    for (double v : simulate_phase_trajectory(d, 50)) EXPECT_EQ(v, 1.25);

    d.sigma_step = 0.3;
    d.phi_init = 0.0;
    const auto a = simulate_phase_trajectory(d, 1000);
    EXPECT_EQ(a, simulate_phase_trajectory(d, 1000));
    EXPECT_EQ(a.front(), 0.0);
    double mean = 0.0;
    for (std::size_t t = 1; t < a.size(); ++t) mean += a[t] - a[t - 1];
    mean /= static_cast<double>(a.size() - 1);
    double var = 0.0;
    for (std::size_t t = 1; t < a.size(); ++t) var += std::pow(a[t] - a[t - 1] - mean, 2);
    var /= static_cast<double>(a.size() - 2);
    EXPECT_GE(var, 0.07);
    EXPECT_LE(var, 0.11);

    EXPECT_THROW(simulate_phase_trajectory(d, 0), std::invalid_argument);
}

TEST(Calibration, InverseAndMonotonicity) {
    const WavelengthCalibration cal;
    EXPECT_NEAR(cal.column(1064.0), 260.0, 1e-12);
    for (double col : {0.0, 17.3, 260.0, 400.5, 511.0}) EXPECT_NEAR(cal.column(cal.wavelength(col)), col, 1e-9);
    EXPECT_GT(cal.slope(1064.0), 0.0);
    const WavelengthCalibration bent({0.0, 1.0, 0.0, -0.001}, 1064.0);
    EXPECT_THROW(bent.require_monotonic(1000.0, 1100.0), std::exception);
}

TEST(Camera, Validation) {
    CameraModel cam;
    EXPECT_NO_THROW(cam.validate());
    cam.stripe_v = {12, 18};  // overlaps stripe_h
    EXPECT_THROW(cam.validate(), ConfigError);
    cam = CameraModel{};
    cam.bit_depth = 12;
    EXPECT_THROW(cam.validate(), ConfigError);
    cam = CameraModel{};
    cam.counts_per_unit = 0.0;
    EXPECT_THROW(cam.validate(), ConfigError);
}

namespace {

SpectrumPair flat_spectra(const CameraModel& cam, const WavelengthCalibration& cal, double h, double v) {
    const ColumnGrid g = column_grid(cam, cal);
    return {g.omega, Eigen::VectorXd::Constant(g.omega.size(), h), Eigen::VectorXd::Constant(g.omega.size(), v)};
}

}  // namespace

TEST(RenderFrame, ZeroSpectraNoReadNoiseIsBlack) {
    CameraModel cam;
    cam.read_noise = 0.0;
    const WavelengthCalibration cal;
    const auto r = render_frame(flat_spectra(cam, cal, 0.0, 0.0), cam, cal, 1);
    EXPECT_EQ(r.frame.cast<int>().sum(), 0);
}

TEST(RenderFrame, FlatNoiselessStripesAreConstant) {
    CameraModel cam;
    cam.read_noise = 0.0;
    cam.poisson = false;
    cam.psf_sigma = 0.0;
    cam.counts_per_unit = 1000.0;
    const WavelengthCalibration cal;
    const auto r = render_frame(flat_spectra(cam, cal, 3.0, 5.0), cam, cal, 1);
    for (std::uint32_t row = cam.stripe_h.begin; row < cam.stripe_h.end; ++row)
        for (std::uint32_t c = 0; c < cam.cols; ++c) EXPECT_EQ(r.frame(row, c), 3000);
    for (std::uint32_t row = cam.stripe_v.begin; row < cam.stripe_v.end; ++row)
        for (std::uint32_t c = 0; c < cam.cols; ++c) EXPECT_EQ(r.frame(row, c), 5000);
    EXPECT_EQ(r.frame(0, 0), 0);
}

TEST(RenderFrame, SaturationFlagged) {
    CameraModel cam;
    cam.bit_depth = 8;
    const WavelengthCalibration cal;
    const auto r = render_frame(flat_spectra(cam, cal, 1.0, 1.0), cam, cal, 1);
    EXPECT_GT(r.saturated_fraction, 0.01);
    EXPECT_EQ(r.frame.maxCoeff(), 255);
}

TEST(RenderFrame, PoissonMeanEqualsVariance) {
    CameraModel cam;
    cam.rows = 4;
    cam.cols = 8;
    cam.stripe_h = {1, 2};
    cam.stripe_v = {2, 3};
    cam.psf_sigma = 0.0;
    cam.read_noise = 0.0;
    cam.counts_per_unit = 200.0;
    const WavelengthCalibration cal({4.0, 2.0, 0.0, 0.0}, 1064.0);
    const SpectrumPair s = flat_spectra(cam, cal, 1.0, 1.0);
    constexpr int kFrames = 10000;
    Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(cam.cols), sum2 = Eigen::ArrayXd::Zero(cam.cols);
    for (int t = 0; t < kFrames; ++t) {
        const auto r = render_frame(s, cam, cal, frame_seed(11, t));
        const Eigen::ArrayXd row = r.frame.row(1).cast<double>().transpose().array();
        sum += row;
        sum2 += row * row;
    }
    const Eigen::ArrayXd mean = sum / kFrames;
    const Eigen::ArrayXd var = (sum2 - sum * sum / kFrames) / (kFrames - 1);
    for (Eigen::Index c = 0; c < mean.size(); ++c) {
        EXPECT_NEAR(mean(c), 200.0, 2.0);
        EXPECT_NEAR(var(c) / mean(c), 1.0, 0.05);
    }
}

TEST(RenderFrame, PhiPlusDarkAtReferenceWhenPhiIsPi) {
    ExperimentConfig c = preset_config(Preset::PhiPlus);
    c.spectral.eta = 1.0;
    c.spectral.delta_bir = 0.0;  // birefringence moves the dark point to pi - delta_bir
    c.camera.psf_sigma = 0.0;
    c.camera.read_noise = 0.0;
    c.camera.poisson = false;
    const PresetPipeline pipe = preset_pipeline(c);
    const ColumnGrid g = column_grid(c.camera, c.calibration);
    MeasurementConfig bright = pipe.meas, dark = pipe.meas;
    dark.phi0 = kPi;
    const auto fb = render_frame(output_spectra(pipe.state_in, bright, c.spectral, g.omega), c.camera, c.calibration, 1);
    const auto fd = render_frame(output_spectra(pipe.state_in, dark, c.spectral, g.omega), c.camera, c.calibration, 1);
    const int col = static_cast<int>(std::lround(c.calibration.column(1064.0)));
    for (auto stripe : {c.camera.stripe_h, c.camera.stripe_v}) {
        const int mid = static_cast<int>(stripe.begin + stripe.size() / 2);
        EXPECT_LT(fd.frame(mid, col), 1e-3 * fb.frame(mid, col));
    }
}

TEST(Simulate, DeterministicAndComposable) {
    ExperimentConfig c = preset_config(Preset::PhiPlus);
    c.n_frames = 12;
    const FrameStack a = simulate_experiment(c);
    const FrameStack b = simulate_experiment(c);
    EXPECT_EQ(encode_frame_stack(a), encode_frame_stack(b));
    EXPECT_EQ(a.header.n_frames, 12u);
    EXPECT_EQ(a.header.fps, 50.0);

    c.n_frames = 1;
    c.drift.sigma_step = 0.0;
    c.drift.phi_init = 0.4;
    const FrameStack one = simulate_experiment(c);
    const PresetPipeline pipe = preset_pipeline(c);
    MeasurementConfig meas = pipe.meas;
    meas.phi0 = 0.4;
    const auto g = column_grid(c.camera, c.calibration);
    const auto r = render_frame(output_spectra(pipe.state_in, meas, c.spectral, g.omega), c.camera, c.calibration,
                                frame_seed(c.camera.noise_seed, 0));
    EXPECT_EQ(one.frames[0], r.frame);
}

TEST(Simulate, PsiPlusWithoutBirefringenceDoesNotBreathe) {
    ExperimentConfig c = preset_config(Preset::PsiPlus);
    c.spectral.delta_bir = 0.0;
    c.n_frames = 40;
    const FrameStack s = simulate_experiment(c);
    const int col = static_cast<int>(std::lround(c.calibration.column(1064.0)));
    const int row = static_cast<int>(c.camera.stripe_h.begin + 2);
    double lo = 1e300, hi = 0.0;
    for (const auto& f : s.frames) {
        lo = std::min(lo, static_cast<double>(f(row, col)));
        hi = std::max(hi, static_cast<double>(f(row, col)));
    }
    // Shot noise only: spread within ~6 sigma of the mean level.
    EXPECT_LT(hi - lo, 8.0 * std::sqrt(hi) + 30.0);
}

TEST(Simulate, RevivalConfigSwapsPlate) {
    const ExperimentConfig r = revival_config(preset_config(Preset::PsiPlus));
    EXPECT_EQ(r.preset, Preset::Custom);
    EXPECT_EQ(r.plates.spdc_plate_deg, 90.0);
    EXPECT_EQ(r.plates.pump_plate_deg, 90.0);
}
