#include "su11/oracles.hpp"
#include "su11/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace su11;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralModel ideal_model() {
    SpectralModel m;
    m.eta = 1.0;
    m.delta_bir = 0.0;
    return m;
}

Eigen::VectorXd grid_around(const SpectralModel& m, double half_width_fwhm, int n) {
    const double half = half_width_fwhm * 2.0 * kPi * m.envelope_fwhm;
    return Eigen::VectorXd::LinSpaced(n, m.omega0 - half, m.omega0 + half);
}

FringeVisibility sweep_visibility(const BiphotonPolarState<>& state, MeasurementConfig meas, const SpectralModel& m,
                                  double omega_ref, int n = 32) {
    Eigen::VectorXd grid(1);
    grid(0) = omega_ref;
    std::vector<SpectrumPair> sweep;
    std::vector<double> phi0;
    for (int k = 0; k < n; ++k) {
        meas.phi0 = 2.0 * kPi * k / n;
        phi0.push_back(meas.phi0);
        sweep.push_back(output_spectra(state, meas, m, grid));
    }
    return fringe_visibility(sweep, phi0, omega_ref);
}

BiphotonPolarState<> phi_plus_generated(double eps) {
    return pump_generation_vector(linear_polarization(kPi / 4), eps);
}

}  // namespace

TEST(InterferometerPhase, Examples) {
    SpectralModel m;
    EXPECT_DOUBLE_EQ(interferometer_phase(m.omega0, m, 0.7), 0.7);
    m.tau = 0.0;
    m.beta = 0.0;
    EXPECT_DOUBLE_EQ(interferometer_phase(m.omega0 + 1e13, m, 0.3), 0.3);
    m.tau = 1e-12;
    EXPECT_NEAR(interferometer_phase(m.omega0 + 2.0 * kPi * 1e12, m, 0.0), 2.0 * kPi, 1e-12);
}

TEST(Envelope, HalfMaximumPoints) {
    SpectralModel m;
    EXPECT_DOUBLE_EQ(envelope(m.omega0, m), 1.0);
    EXPECT_NEAR(envelope(m.omega0 + kPi * m.envelope_fwhm, m), 0.5, 1e-12);
    EXPECT_NEAR(envelope(m.omega0 - kPi * m.envelope_fwhm, m), 0.5, 1e-12);
    EXPECT_NEAR(envelope(m.omega0 + 2.0 * kPi * 25e12, m), 0.5, 1e-12);
    m.shape = EnvelopeShape::Sinc2;
    EXPECT_DOUBLE_EQ(envelope(m.omega0, m), 1.0);
    EXPECT_NEAR(envelope(m.omega0 + kPi * m.envelope_fwhm, m), 0.5, 1e-12);
}

TEST(OutputSpectra, PhiPlusFringesInPhase) {
    const SpectralModel m = ideal_model();
    const auto state = phi_plus_generated(m.epsilon1);
    MeasurementConfig meas;  // +45 degree pump
    const Eigen::VectorXd grid = grid_around(m, 1.0, 201);
    const SpectrumPair s = output_spectra(state, meas, m, grid);
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const double phi = interferometer_phase(grid(k), m, 0.0);
        const double expect = envelope(grid(k), m) * std::norm(std::polar(1.0, phi) + 1.0) * m.epsilon1 * m.epsilon1 / 2.0;
        EXPECT_NEAR(s.s_h(k), expect, 1e-15);
        EXPECT_NEAR(s.s_v(k), expect, 1e-15);
    }
    meas.phi0 = kPi;
    const auto dark = output_density(state, meas, m, m.omega0);
    EXPECT_NEAR(dark.first, 0.0, 1e-18);
    EXPECT_NEAR(dark.second, 0.0, 1e-18);
}

TEST(OutputSpectra, PhiMinusMeasurementFlipsV) {
    const SpectralModel m = ideal_model();
    const auto state = phi_plus_generated(m.epsilon1);
    MeasurementConfig meas;
    meas.pump2 = linear_polarization(-kPi / 4);
    const Eigen::VectorXd grid = grid_around(m, 1.0, 101);
    const SpectrumPair s = output_spectra(state, meas, m, grid);
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const double phi = interferometer_phase(grid(k), m, 0.0);
        const double g = envelope(grid(k), m) * m.epsilon1 * m.epsilon1 / 2.0;
        EXPECT_NEAR(s.s_h(k), g * (2.0 + 2.0 * std::cos(phi)), 1e-15);
        EXPECT_NEAR(s.s_v(k), g * (2.0 - 2.0 * std::cos(phi)), 1e-15);
    }
}

TEST(OutputSpectra, PsiPlusIsFlat) {
    SpectralModel m = ideal_model();
    BiphotonPolarState<> psi = bell_state(BellKind::PsiPlus);
    psi.c *= m.epsilon1;
    psi.normalized = false;
    const auto v = sweep_visibility(psi, MeasurementConfig{}, m, m.omega0);
    EXPECT_NEAR(v.v_h, 0.0, 1e-12);
    EXPECT_NEAR(v.v_v, 0.0, 1e-12);
    EXPECT_FALSE(v.delta_psi.has_value());
}

TEST(OutputSpectra, Guards) {
    SpectralModel m;
    const auto state = phi_plus_generated(0.1);
    Eigen::VectorXd far(1);
    far(0) = m.omega0 + 3.5 * 2.0 * kPi * m.envelope_fwhm;
    EXPECT_THROW(output_spectra(state, MeasurementConfig{}, m, far), std::invalid_argument);
    Eigen::VectorXd unsorted(2);
    unsorted << m.omega0 + 1e12, m.omega0;
    EXPECT_THROW(output_spectra(state, MeasurementConfig{}, m, unsorted), std::invalid_argument);
    m.eta = 0.0;
    m.epsilon2 = 0.0;
    EXPECT_THROW(output_density(state, MeasurementConfig{}, m, m.omega0), std::invalid_argument);
}

TEST(SpectralModel, Validation) {
    SpectralModel m;
    EXPECT_NO_THROW(m.validate());
    m.epsilon1 = 0.5;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = SpectralModel{};
    m.eta = 1.2;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = SpectralModel{};
    m.envelope_fwhm = 0.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(FringeVisibility, Examples) {
    const SpectralModel m = ideal_model();
    const auto state = phi_plus_generated(m.epsilon1);
    MeasurementConfig meas;
    auto v = sweep_visibility(state, meas, m, m.omega0);
    EXPECT_NEAR(v.v_h, 1.0, 1e-9);
    EXPECT_NEAR(v.v_v, 1.0, 1e-9);
    ASSERT_TRUE(v.delta_psi);
    EXPECT_NEAR(*v.delta_psi, 0.0, 1e-9);

    meas.pump2 = linear_polarization(-kPi / 4);
    v = sweep_visibility(state, meas, m, m.omega0);
    EXPECT_NEAR(v.v_h, 1.0, 1e-9);
    ASSERT_TRUE(v.delta_psi);
    EXPECT_NEAR(std::abs(*v.delta_psi), kPi, 1e-9);
}

TEST(FringeVisibility, RejectsShortSweep) {
    const SpectralModel m = ideal_model();
    Eigen::VectorXd grid(1);
    grid(0) = m.omega0;
    std::vector<SpectrumPair> sweep;
    std::vector<double> phi0{0.0, 0.5, 1.0};
    for (double p : phi0) {
        MeasurementConfig meas;
        meas.phi0 = p;
        sweep.push_back(output_spectra(phi_plus_generated(0.1), meas, m, grid));
    }
    EXPECT_THROW(fringe_visibility(sweep, phi0, m.omega0), std::invalid_argument);
}

TEST(FringeVisibility, MatchedGainCeiling) {
    // V = 2 eta e1 e2 / (eta^2 e1^2 + e2^2) <= 1, equality at eta e1 = e2.
    SpectralModel m = ideal_model();
    for (double eta : {0.3, 0.545, 0.8, 1.0}) {
        m.eta = eta;
        const auto v = sweep_visibility(phi_plus_generated(m.epsilon1), MeasurementConfig{}, m, m.omega0, 64);
        const double expect = 2.0 * eta * m.epsilon1 * m.epsilon2 /
                              (eta * eta * m.epsilon1 * m.epsilon1 + m.epsilon2 * m.epsilon2);
        EXPECT_NEAR(v.v_h, expect, 1e-9);
        EXPECT_LE(v.v_h, 1.0);
    }
}

TEST(FringeVisibility, DichotomyForAllSpectralPhases) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 25; ++i) {
        SpectralModel m = ideal_model();
        m.tau = u(rng) * 1e-12;
        m.beta = u(rng) * 1e-28;
        const double w = m.omega0 + u(rng) * 2.0 * kPi * m.envelope_fwhm;
        MeasurementConfig plus, minus;
        minus.pump2 = linear_polarization(-kPi / 4);
        const auto vp = sweep_visibility(phi_plus_generated(0.1), plus, m, w);
        const auto vm = sweep_visibility(phi_plus_generated(0.1), minus, m, w);
        ASSERT_TRUE(vp.delta_psi && vm.delta_psi);
        EXPECT_NEAR(*vp.delta_psi, 0.0, 1e-9);
        EXPECT_NEAR(std::abs(wrap_phase(*vm.delta_psi - kPi)), 0.0, 1e-9);
    }
}

TEST(SpectrumOracle, MatchesBruteForce) {
    for (const auto& r : run_oracles()) {
        if (r.name == "spectrum_brute_force" || r.name == "energy_bookkeeping") EXPECT_TRUE(r.pass) << r.detail;
    }
}

TEST(SpectrumOracle, DetectsPerturbation) {
    for (const auto& r : run_oracles({1e-6}))
        if (r.name == "spectrum_brute_force") EXPECT_FALSE(r.pass);
}

TEST(Flux, Examples) {
    EXPECT_EQ(estimate_pair_flux(std::sqrt(0.01), 5e13).pairs_per_second, 5e11);
    EXPECT_EQ(estimate_pair_flux(0.0, 5e13).pairs_per_second, 0.0);
    EXPECT_NEAR(estimate_pair_flux(0.01, 1e13).pairs_per_second, 1e9, 1e-3);
    EXPECT_TRUE(estimate_pair_flux(0.1, 1e13).low_gain_valid);
    EXPECT_FALSE(estimate_pair_flux(0.5, 1e13).low_gain_valid);

    const auto n = mean_photons_per_coherence_time(0.1);
    EXPECT_NEAR(n.mean_pairs, 0.01, 1e-15);
    EXPECT_TRUE(n.single_pair_regime);
    EXPECT_TRUE(mean_photons_per_coherence_time(0.0).single_pair_regime);
    EXPECT_FALSE(mean_photons_per_coherence_time(0.5).single_pair_regime);
}

TEST(WrapPhase, Range) {
    EXPECT_DOUBLE_EQ(wrap_phase(kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_phase(-kPi), kPi);
    EXPECT_NEAR(wrap_phase(3.0 * kPi + 0.1), -kPi + 0.1, 1e-12);
}

TEST(Wavelength, RoundTrip) {
    EXPECT_NEAR(wavelength_nm_from_angular_frequency(angular_frequency_from_nm(1064.0)), 1064.0, 1e-9);
}
