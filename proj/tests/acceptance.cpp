// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "su11/acquisition.hpp"
#include "su11/analysis.hpp"
#include "su11/config.hpp"
#include "su11/oracles.hpp"
#include "su11/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace su11;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSeeds = 100;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d: %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), s);
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

RunConfig preset_config(Preset p) { return default_run_config(p); }

bool in_band(double x, double lo, double hi) { return x >= lo && x <= hi; }

}  // namespace

int main() {
    // Shared by criteria 3 and 5: the 100-seed round trip.
    std::vector<RoundtripResult> trips;
    double roundtrip_seconds = 0.0;
    auto ensure_roundtrips = [&] {
        if (!trips.empty()) return;
        const auto t0 = std::chrono::steady_clock::now();
        const RunConfig base = default_run_config();
        for (int s = 0; s < kSeeds; ++s) trips.push_back(run_roundtrip(base, static_cast<std::uint64_t>(s)));
        roundtrip_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    report(1, "Bell algebra oracle", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const double f_rot = fidelity(rotation_operator(45.0 * kPi / 180.0) * bell_state(BellKind::PhiMinus),
                                      BellKind::PsiPlus);
        double worst_inv = 0.0;
        for (int deg = 0; deg < 360; ++deg)
            worst_inv = std::max(worst_inv, std::abs(1.0 - fidelity(rotation_operator(deg * kPi / 180.0) *
                                                                        bell_state(BellKind::PhiPlus),
                                                                    BellKind::PhiPlus)));
        const auto plates = table_settings(Preset::PsiPlus);
        const auto generated = normalize(pump_generation_vector(linear_polarization(kPi / 4.0), 1.0));
        const double f_psi = fidelity(spdc_plate_operator(plates.spdc_kind, plates.spdc_plate_deg) * generated,
                                      BellKind::PsiPlus);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = std::abs(1.0 - f_rot) <= 1e-12 && worst_inv <= 1e-12 && f_psi >= 0.999 && secs < 1.0;
        return Outcome{ok, "R45 Phi- -> Psi+ fidelity 1-" + fmt(1.0 - f_rot) + ", Phi+ max infidelity " +
                               fmt(worst_inv) + ", Psi+ preset fidelity " + fmt(f_psi, 6)};
    });

    report(2, "fringe-phase dichotomy", [] {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        for (Preset p : {Preset::PhiPlus, Preset::PhiMinus}) {
            const RunConfig rc = preset_config(p);
            const FrameStack s = simulate_experiment(rc.experiment);
            const RunAnalysis a = analyze_run(s, rc.experiment.spectral, rc.analysis);
            const double target = p == Preset::PhiPlus ? 0.0 : kPi;
            std::size_t defined = 0, within = 0;
            for (const auto& d : a.frame_delta_psi) {
                if (!d) continue;
                ++defined;
                if (std::abs(wrap_phase(*d - target)) <= 0.15) ++within;
            }
            const double frac = defined ? static_cast<double>(within) / static_cast<double>(defined) : 0.0;
            ok = ok && defined > 0 && frac >= 0.9;
            detail += std::string(to_string(p)) + " " + std::to_string(within) + "/" + std::to_string(defined) +
                      " frames within 0.15 rad; ";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ok = ok && secs < 30.0;
        return Outcome{ok, detail + "runtime " + fmt(secs) + " s"};
    });

    report(3, "contrast levels", [&] {
        auto measure = [](Preset p, double delta_bir, std::uint64_t offset) {
            RunConfig rc = preset_config(p);
            if (delta_bir >= 0.0) rc.experiment.spectral.delta_bir = delta_bir;
            rc.experiment.drift.seed += offset;
            rc.experiment.camera.noise_seed += offset;
            const FrameStack s = simulate_experiment(rc.experiment);
            return analyze_run(s, rc.experiment.spectral, rc.analysis).measurement;
        };
        // Single seed (shipped defaults).
        const auto phi_p = measure(Preset::PhiPlus, -1.0, 0);
        const auto phi_m = measure(Preset::PhiMinus, -1.0, 0);
        const auto psi = measure(Preset::PsiPlus, -1.0, 0);
        const auto psi0 = measure(Preset::PsiPlus, 0.0, 0);
        bool single = true;
        for (const auto& m : {phi_p, phi_m})
            single = single && in_band(m.contrast_h, 75, 85) && in_band(m.contrast_v, 75, 85);
        single = single && in_band(psi.contrast_h, 7, 13) && in_band(psi.contrast_v, 7, 13);
        single = single && psi0.contrast_h < 2.0 && psi0.contrast_v < 2.0;

        // 100-seed aggregate: Phi+-, Psi+ from the round-trip runs, Psi+ at delta_bir = 0 simulated here.
        ensure_roundtrips();
        int n_phi_p = 0, n_phi_m = 0, n_psi = 0, n_psi0 = 0;
        for (int s = 0; s < kSeeds; ++s) {
            for (const auto& c : trips[s].cases) {
                const auto& m = c.report.primary;
                if (c.preset == Preset::PhiPlus)
                    n_phi_p += in_band(m.contrast_h, 75, 85) && in_band(m.contrast_v, 75, 85);
                if (c.preset == Preset::PhiMinus)
                    n_phi_m += in_band(m.contrast_h, 75, 85) && in_band(m.contrast_v, 75, 85);
                if (c.preset == Preset::PsiPlus) n_psi += in_band(m.contrast_h, 7, 13) && in_band(m.contrast_v, 7, 13);
            }
            const auto m0 = measure(Preset::PsiPlus, 0.0, static_cast<std::uint64_t>(s));
            n_psi0 += m0.contrast_h < 2.0 && m0.contrast_v < 2.0;
        }
        const bool aggregate = n_phi_p >= 95 && n_phi_m >= 95 && n_psi >= 95 && n_psi0 >= 95;
        return Outcome{single && aggregate,
                       "seed 0: Phi+ " + fmt(phi_p.contrast_h) + "/" + fmt(phi_p.contrast_v) + "%, Phi- " +
                           fmt(phi_m.contrast_h) + "/" + fmt(phi_m.contrast_v) + "%, Psi+ " + fmt(psi.contrast_h) +
                           "/" + fmt(psi.contrast_v) + "%, Psi+(delta_bir=0) " + fmt(psi0.contrast_h) + "/" +
                           fmt(psi0.contrast_v) + "%; in band over 100 seeds: Phi+ " + std::to_string(n_phi_p) +
                           ", Phi- " + std::to_string(n_phi_m) + ", Psi+ " + std::to_string(n_psi) +
                           ", Psi+(0) " + std::to_string(n_psi0)};
    });

    report(4, "revival", [] {
        const RunConfig rc = preset_config(Preset::PsiPlus);
        const FrameStack s = simulate_experiment(rc.experiment);
        const FrameStack r = simulate_experiment(revival_config(rc.experiment));
        const StackAnalysis without = analyze_stack(s, nullptr, rc);
        const StackAnalysis with = analyze_stack(s, &r, rc);
        const auto& rev = *with.report.revival;
        const bool ok = rev.contrast_h >= 70.0 && rev.contrast_v >= 70.0 &&
                        without.report.label == BellLabel::PsiPlusCandidate &&
                        with.report.label == BellLabel::PsiPlusConfirmed;
        return Outcome{ok, "revival contrasts " + fmt(rev.contrast_h) + "/" + fmt(rev.contrast_v) + "%, label " +
                               std::string(to_string(without.report.label)) + " -> " +
                               std::string(to_string(with.report.label))};
    });

    report(5, "classification round trip", [&] {
        ensure_roundtrips();
        int all = 0;
        for (const auto& t : trips) all += t.passed();
        const bool ok = all == kSeeds && roundtrip_seconds < 300.0;
        return Outcome{ok, std::to_string(all) + "/" + std::to_string(kSeeds) + " seeds with 3/3 presets, runtime " +
                               fmt(roundtrip_seconds) + " s"};
    });

    report(6, "spectrum oracle", [] {
        bool ok = true;
        std::string detail;
        int found = 0;
        for (const auto& r : run_oracles()) {
            if (r.name != "spectrum_brute_force" && r.name != "energy_bookkeeping") continue;
            ++found;
            ok = ok && r.pass;
            detail += r.name + ": " + r.detail + "; ";
        }
        return Outcome{ok && found == 2, detail};
    });

    report(7, "flux arithmetic", [] {
        const FluxEstimate f = estimate_pair_flux(std::sqrt(0.01), 5e13);
        const PhotonOccupancy n = mean_photons_per_coherence_time(std::sqrt(0.01));
        const bool ok = f.pairs_per_second == 5e11 && f.low_gain_valid && n.single_pair_regime && n.mean_pairs < 1.0;
        return Outcome{ok, "flux " + fmt(f.pairs_per_second, 17) + " pairs/s, mean pairs per mode " +
                               fmt(n.mean_pairs) + (n.single_pair_regime ? " (single-pair regime)" : "")};
    });

    report(8, "format determinism", [] {
        const RunConfig rc = preset_config(Preset::PhiPlus);
        const auto a = encode_frame_stack(simulate_experiment(rc.experiment));
        const auto b = encode_frame_stack(simulate_experiment(rc.experiment));
        const auto path = std::filesystem::temp_directory_path() / "su11_acceptance.stk";
        write_frame_stack(decode_frame_stack(a), path);
        const auto c = encode_frame_stack(read_frame_stack(path));
        std::filesystem::remove(path);
        auto corrupt = a;
        corrupt[0] = 'X';
        bool rejected = false;
        try {
            decode_frame_stack(corrupt);
        } catch (const FormatError& e) {
            rejected = e.offset() == 0;
        }
        const bool ok = a == b && a == c && rejected;
        return Outcome{ok, std::string("repeat simulation ") + (a == b ? "byte-identical" : "DIFFERS") +
                               ", write/read " + (a == c ? "byte-exact" : "DIFFERS") + ", bad magic " +
                               (rejected ? "rejected at offset 0" : "NOT rejected") + " (" +
                               std::to_string(a.size()) + " bytes)"};
    });

    report(9, "estimator validation", [] {
        ExperimentConfig cfg = preset_config(Preset::PsiPlus).experiment;
        std::string detail;
        bool ok = true;
        for (double pct : {0.0, 5.0, 10.0, 20.0}) {
            const InversionPoint p = engine_inversion(cfg, pct / 80.0);
            // The engine's own inversion: the closed-form estimator applied to
            // the injected state's residual and reference contrasts.
            const double err = std::abs(p.estimated_fidelity - p.true_fidelity);
            // Same injection through the full camera pipeline and frame analysis.
            RunConfig rc = preset_config(Preset::PsiPlus);
            rc.experiment.spectral.delta_bir = p.delta_bir;
            const FrameStack s = simulate_experiment(rc.experiment);
            const FrameStack r = simulate_experiment(revival_config(rc.experiment));
            const auto rep = analyze_stack(s, &r, rc).report;
            const double res = 0.5 * (rep.primary.contrast_h + rep.primary.contrast_v);
            const double ref = 0.5 * (rep.revival->contrast_h + rep.revival->contrast_v);
            const double f_cam = fidelity_from_residual_contrast(std::min(res, ref), ref);
            const double err_cam = std::abs(f_cam - p.true_fidelity);
            ok = ok && err <= 0.01 && err_cam <= 0.01;
            detail += fmt(pct) + "/80%: F_true " + fmt(p.true_fidelity, 4) + " F_engine " +
                      fmt(p.estimated_fidelity, 4) + " F_camera " + fmt(f_cam, 4) + "; ";
        }
        return Outcome{ok, detail};
    });

    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
