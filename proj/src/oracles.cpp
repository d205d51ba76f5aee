#include "su11/oracles.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace su11 {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

std::string num(double v) {
    std::ostringstream o;
    o.precision(3);
    o << v;
    return o.str();
}

// Each check returns an empty string on success, else a failure detail.
using Check = std::function<std::string(std::string& info)>;

OracleResult timed(std::string name, const Check& check) {
    const auto t0 = std::chrono::steady_clock::now();
    OracleResult r{std::move(name), false, {}, 0.0};
    std::string info;
    try {
        const std::string failure = check(info);
        r.pass = failure.empty();
        r.detail = r.pass ? info : failure;
    } catch (const std::exception& e) {
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

double unitarity_defect(const TwoPhotonOperator<>& op) {
    const double a = (op.single.adjoint() * op.single - JonesMatrix<>::Identity()).norm();
    const double b = (op.pair.adjoint() * op.pair - PairMatrix<>::Identity()).norm();
    return std::max(a, b);
}

BiphotonPolarState<> random_state(std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> n(0.0, 1.0);
    BiphotonPolarState<> s;
    for (int k = 0; k < 4; ++k) s.c(k) = cd(n(rng), n(rng));
    s.c *= scale / s.c.norm();
    s.normalized = false;
    return s;
}

JonesVector<> random_pump(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    const double theta = 0.5 * u(rng);
    return jones_vector(cd(std::cos(theta), 0.0), std::polar(std::sin(theta), u(rng)));
}

}  // namespace

std::pair<double, double> brute_force_density(const BiphotonPolarState<>& state_in, const MeasurementConfig& meas,
                                              const SpectralModel& model, double omega) {
    const double d = omega - model.omega0;
    const double phi = meas.phi0 + model.tau * d + model.beta * d * d;
    const double phi_v = phi + meas.differential_phase;

    const double dnu = d / (2.0 * kPi);
    double g_env = 0.0;
    if (model.shape == EnvelopeShape::Gaussian) {
        g_env = std::exp(-4.0 * std::log(2.0) * dnu * dnu / (model.envelope_fwhm * model.envelope_fwhm));
    } else {
        const double u = 2.0 * 1.39155737825151 * dnu / model.envelope_fwhm;
        g_env = u == 0.0 ? 1.0 : std::pow(std::sin(u) / u, 2);
    }

    // First-pass amplitudes carried through the interferometer.
    const cd m_hh = state_in.c(0);
    const cd m_vv = state_in.c(3) * cd(std::cos(model.delta_bir), std::sin(model.delta_bir));
    const cd first_h = model.eta * m_hh * cd(std::cos(phi), std::sin(phi));
    const cd first_v = model.eta * m_vv * cd(std::cos(phi_v), std::sin(phi_v));
    // Second-pass amplitudes from the pump's H and V components.
    const cd second_h = model.epsilon2 * meas.pump2(0);
    const cd second_v = model.epsilon2 * meas.pump2(1);

    auto two_path = [](cd a, cd b) { return std::norm(a) + std::norm(b) + 2.0 * (a * std::conj(b)).real(); };
    const double cross =
        0.5 * model.eta * model.eta * (std::norm(state_in.c(1)) + std::norm(state_in.c(2)));
    return {g_env * (two_path(first_h, second_h) + cross), g_env * (two_path(first_v, second_v) + cross)};
}

double engine_contrast(const ExperimentConfig& config) {
    const PresetPipeline pipe = preset_pipeline(config);
    constexpr int kSweep = 64;
    std::vector<SpectrumPair> sweep;
    std::vector<double> phi0;
    Eigen::VectorXd grid(1);
    grid(0) = config.spectral.omega0;
    for (int k = 0; k < kSweep; ++k) {
        MeasurementConfig meas = pipe.meas;
        meas.phi0 = 2.0 * kPi * k / kSweep;
        phi0.push_back(meas.phi0);
        sweep.push_back(output_spectra(pipe.state_in, meas, config.spectral, grid));
    }
    const FringeVisibility v = fringe_visibility(sweep, phi0, config.spectral.omega0);
    return 50.0 * (v.v_h + v.v_v);
}

InversionPoint engine_inversion(const ExperimentConfig& psi_plus, double fraction) {
    InversionPoint p;
    p.target_fraction = fraction;
    ExperimentConfig cfg = psi_plus;
    cfg.spectral.delta_bir = 0.0;
    p.reference_pct = engine_contrast(revival_config(cfg));

    auto residual = [&](double delta) {
        ExperimentConfig c = cfg;
        c.spectral.delta_bir = delta;
        return engine_contrast(c);
    };
    const double target = fraction * p.reference_pct;
    double lo = 0.0, hi = kPi;
    if (fraction > 0.0) {
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (residual(mid) < target ? lo : hi) = mid;
        }
    }
    p.delta_bir = fraction > 0.0 ? 0.5 * (lo + hi) : 0.0;
    cfg.spectral.delta_bir = p.delta_bir;
    p.residual_pct = engine_contrast(cfg);
    p.reference_pct = engine_contrast(revival_config(cfg));
    p.estimated_fidelity = fidelity_from_residual_contrast(std::min(p.residual_pct, p.reference_pct), p.reference_pct);
    p.true_fidelity = fidelity(normalize(preset_pipeline(cfg).state_in), BellKind::PsiPlus);
    return p;
}

std::vector<OracleResult> run_oracles(const OracleOptions& options) {
    std::vector<OracleResult> out;

    out.push_back(timed("bell_gram", [](std::string& info) -> std::string {
        const BellKind kinds[] = {BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus};
        double worst = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const cd g = overlap(bell_state(kinds[i]), bell_state(kinds[j]));
                worst = std::max(worst, std::abs(g - cd(i == j ? 1.0 : 0.0, 0.0)));
            }
        info = "max |G - I| = " + num(worst);
        return worst <= 1e-12 ? "" : info;
    }));

    out.push_back(timed("rotation45_maps_phi_minus_to_psi_plus", [](std::string& info) -> std::string {
        const double f = fidelity(rotation_operator(45.0 * kDeg) * bell_state(BellKind::PhiMinus), BellKind::PsiPlus);
        info = "fidelity = 1 - " + num(1.0 - f);
        return std::abs(1.0 - f) <= 1e-12 ? "" : info;
    }));

    out.push_back(timed("phi_plus_rotation_invariant", [](std::string& info) -> std::string {
        double worst = 0.0;
        for (int deg = 0; deg < 360; ++deg)
            worst = std::max(worst, 1.0 - fidelity(rotation_operator(deg * kDeg) * bell_state(BellKind::PhiPlus),
                                                   BellKind::PhiPlus));
        info = "max infidelity over 1 deg grid = " + num(worst);
        return worst <= 1e-12 ? "" : info;
    }));

    out.push_back(timed("quarter_wave45_maps_phi_plus_to_psi_plus", [](std::string& info) -> std::string {
        const auto op = waveplate_operator(WaveplateKind::Quarter, 45.0 * kDeg);
        const double f = fidelity(op * bell_state(BellKind::PhiPlus), BellKind::PsiPlus);
        info = "fidelity = 1 - " + num(1.0 - f);
        return std::abs(1.0 - f) <= 1e-12 ? "" : info;
    }));

    out.push_back(timed("psi_plus_preset_operator", [](std::string& info) -> std::string {
        const auto plates = table_settings(Preset::PsiPlus);
        const auto op = spdc_plate_operator(plates.spdc_kind, plates.spdc_plate_deg);
        const auto generated = normalize(pump_generation_vector(linear_polarization(kPi / 4.0), 1.0));
        const double f = fidelity(op * generated, BellKind::PsiPlus);
        info = "fidelity = " + num(f);
        return f >= 0.999 ? "" : info;
    }));

    out.push_back(timed("operator_unitarity", [](std::string& info) -> std::string {
        double worst = 0.0;
        for (int deg = 0; deg < 180; deg += 5) {
            const double a = deg * kDeg;
            worst = std::max({worst, unitarity_defect(rotation_operator(a)),
                              unitarity_defect(waveplate_operator(WaveplateKind::Half, a)),
                              unitarity_defect(waveplate_operator(WaveplateKind::Quarter, a)),
                              unitarity_defect(retarder_operator(a, 0.37 * deg * kDeg))});
            for (auto kind : {SpdcPlateKind::Rotation, SpdcPlateKind::HalfWave, SpdcPlateKind::QuarterWaveDoublePass})
                worst = std::max(worst, unitarity_defect(spdc_plate_operator(kind, deg)));
        }
        info = "max ||U^H U - I|| = " + num(worst);
        return worst <= 1e-12 ? "" : info;
    }));

    out.push_back(timed("spectrum_brute_force", [&options](std::string& info) -> std::string {
        std::mt19937_64 rng(20240611);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < 64; ++k) {
            SpectralModel model;
            model.shape = k % 2 == 0 ? EnvelopeShape::Gaussian : EnvelopeShape::Sinc2;
            model.tau = (u(rng) - 0.5) * 1e-12;
            model.beta = (u(rng) - 0.5) * 1e-28;
            model.eta = 0.05 + 0.95 * u(rng);
            model.delta_bir = (u(rng) - 0.5) * 2.0 * kPi;
            model.epsilon1 = 0.3 * u(rng);
            model.epsilon2 = 0.01 + 0.29 * u(rng);
            const auto state = random_state(rng, model.epsilon1);
            MeasurementConfig meas;
            meas.pump2 = random_pump(rng);
            meas.phi0 = (u(rng) - 0.5) * 4.0 * kPi;
            meas.differential_phase = k % 4 == 3 ? (u(rng) - 0.5) : 0.0;
            const double omega = model.omega0 + (u(rng) - 0.5) * 4.0 * 2.0 * kPi * model.envelope_fwhm;

            SpectralModel engine = model;
            engine.eta *= 1.0 + options.spectrum_perturbation;
            Eigen::VectorXd grid(1);
            grid(0) = omega;
            const SpectrumPair s = output_spectra(state, meas, engine, grid);
            const auto [bh, bv] = brute_force_density(state, meas, model, omega);
            auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
            worst = std::max({worst, rel(s.s_h(0), bh), rel(s.s_v(0), bv)});
        }
        info = "64 tuples, max relative error = " + num(worst);
        return worst < 1e-10 ? "" : info;
    }));

    out.push_back(timed("energy_bookkeeping", [](std::string& info) -> std::string {
        SpectralModel model;
        model.eta = 1.0;
        model.epsilon2 = 0.0;
        constexpr int kPoints = 2001;
        const double half = 2.5 * 2.0 * kPi * model.envelope_fwhm;
        Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(kPoints, model.omega0 - half, model.omega0 + half);
        const double dw = grid(1) - grid(0);
        auto total = [&](const BiphotonPolarState<>& s) {
            const SpectrumPair sp = output_spectra(s, MeasurementConfig{}, model, grid);
            const Eigen::VectorXd sum = sp.s_h + sp.s_v;
            return dw * (sum.sum() - 0.5 * (sum(0) + sum(kPoints - 1)));
        };
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(0.0, kPi);
        double worst = 0.0;
        for (int k = 0; k < 16; ++k) {
            const auto s = random_state(rng, 0.1);
            const double e0 = total(s);
            const TwoPhotonOperator<> ops[] = {rotation_operator(u(rng)), retarder_operator(u(rng), u(rng)),
                                               waveplate_operator(WaveplateKind::Quarter, u(rng)),
                                               compose(waveplate_operator(WaveplateKind::Half, u(rng)),
                                                       rotation_operator(u(rng)))};
            for (const auto& op : ops) worst = std::max(worst, std::abs(total(op * s) - e0) / e0);
        }
        info = "max relative change of integrated flux = " + num(worst);
        return worst <= 1e-9 ? "" : info;
    }));

    out.push_back(timed("fringe_phase_dichotomy", [](std::string& info) -> std::string {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        constexpr int kSweep = 32;
        for (int k = 0; k < 20; ++k) {
            SpectralModel model;
            model.eta = 1.0;
            model.delta_bir = 0.0;
            model.tau = u(rng) * 1e-12;
            model.beta = u(rng) * 1e-28;
            const auto state = pump_generation_vector(linear_polarization(kPi / 4.0), model.epsilon1);
            const double omega_ref = model.omega0 + u(rng) * 2.0 * kPi * model.envelope_fwhm;
            Eigen::VectorXd grid(1);
            grid(0) = omega_ref;
            const double offset = u(rng) * kPi;
            for (double sign : {1.0, -1.0}) {
                MeasurementConfig meas;
                meas.pump2 = linear_polarization(sign * kPi / 4.0);
                std::vector<SpectrumPair> sweep;
                std::vector<double> phi0;
                for (int j = 0; j < kSweep; ++j) {
                    meas.phi0 = offset + 2.0 * kPi * j / kSweep;
                    phi0.push_back(meas.phi0);
                    sweep.push_back(output_spectra(state, meas, model, grid));
                }
                const auto v = fringe_visibility(sweep, phi0, omega_ref);
                if (!v.delta_psi) return "delta_psi undefined";
                const double expect = sign > 0 ? 0.0 : kPi;
                worst = std::max(worst, std::abs(wrap_phase(*v.delta_psi - expect)));
            }
        }
        info = "max |delta_psi - {0, pi}| = " + num(worst) + " rad";
        return worst <= 1e-9 ? "" : info;
    }));

    out.push_back(timed("estimator_inversion", [](std::string& info) -> std::string {
        ExperimentConfig cfg;
        cfg.preset = Preset::PsiPlus;
        cfg.plates = table_settings(Preset::PsiPlus);
        std::ostringstream o;
        double worst = 0.0;
        for (double pct : {0.0, 5.0, 10.0, 20.0}) {
            const InversionPoint p = engine_inversion(cfg, pct / 80.0);
            const double err = std::abs(p.estimated_fidelity - p.true_fidelity);
            worst = std::max(worst, err);
            o << "[" << pct << "/80: F_est " << num(p.estimated_fidelity) << " F_true " << num(p.true_fidelity)
              << "] ";
        }
        info = o.str() + "max error " + num(worst);
        return worst <= 0.01 ? "" : info;
    }));

    out.push_back(timed("flux_arithmetic", [](std::string& info) -> std::string {
        const FluxEstimate f = estimate_pair_flux(std::sqrt(0.01), 5e13);
        const PhotonOccupancy n = mean_photons_per_coherence_time(std::sqrt(0.01));
        info = "flux = " + num(f.pairs_per_second) + " pairs/s, mean pairs per mode = " + num(n.mean_pairs);
        const bool ok = f.pairs_per_second == 5e11 && f.low_gain_valid && n.single_pair_regime && n.mean_pairs < 1.0 &&
                        estimate_pair_flux(0.0, 5e13).pairs_per_second == 0.0;
        return ok ? "" : info;
    }));

    return out;
}

}  // namespace su11
