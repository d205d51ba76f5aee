#include "su11/runner.hpp"

#include "su11/acquisition.hpp"
#include "su11/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace su11 {

StackAnalysis analyze_stack(const FrameStack& stack, const FrameStack* revival, const RunConfig& config) {
    StackAnalysis out;
    out.primary = analyze_run(stack, config.experiment.spectral, config.analysis);
    if (revival) out.revival = analyze_run(*revival, config.experiment.spectral, config.analysis);
    out.report = build_report(out.primary, out.revival ? &*out.revival : nullptr, config.analysis);
    return out;
}

BellLabel expected_label(Preset preset) {
    switch (preset) {
        case Preset::PhiPlus: return BellLabel::PhiPlus;
        case Preset::PhiMinus: return BellLabel::PhiMinus;
        case Preset::PsiPlus: return BellLabel::PsiPlusConfirmed;
        case Preset::Custom: break;
    }
    return BellLabel::Unknown;
}

bool RoundtripResult::passed() const {
    return !cases.empty() && std::all_of(cases.begin(), cases.end(), [](const RoundtripCase& c) { return c.pass(); });
}

RoundtripResult run_roundtrip(const RunConfig& base, std::uint64_t seed_offset) {
    RoundtripResult result;
    result.seed_offset = seed_offset;
    for (Preset preset : {Preset::PhiPlus, Preset::PhiMinus, Preset::PsiPlus}) {
        RunConfig cfg = base;
        cfg.experiment.preset = preset;
        cfg.experiment.plates = table_settings(preset);
        cfg.experiment.drift.seed += seed_offset;
        cfg.experiment.camera.noise_seed += seed_offset;
        cfg.experiment.validate();

        const FrameStack stack = simulate_experiment(cfg.experiment);
        std::optional<FrameStack> revival;
        if (preset == Preset::PsiPlus) revival = simulate_experiment(revival_config(cfg.experiment));

        RoundtripCase c;
        c.preset = preset;
        c.expected = expected_label(preset);
        c.report = analyze_stack(stack, revival ? &*revival : nullptr, cfg).report;
        const auto traj = simulate_phase_trajectory(cfg.experiment.drift, cfg.experiment.n_frames);
        const auto [lo, hi] = std::minmax_element(traj.begin(), traj.end());
        c.drift_span = traj.empty() ? 0.0 : *hi - *lo;
        c.insufficient_drift = c.drift_span < std::numbers::pi;
        result.cases.push_back(std::move(c));
    }
    return result;
}

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(digits);
    o << v;
    return o.str();
}

std::string phase_text(const std::optional<double>& p) { return p ? fixed(*p, 3) : "undef"; }

}  // namespace

std::string format_summary(const std::vector<RoundtripResult>& results) {
    std::ostringstream o;
    const bool detailed = results.size() == 1;
    if (detailed) {
        o << "preset    expected          got               C_H     C_V     dpsi    revival(C_H/C_V)  drift\n";
        for (const auto& c : results.front().cases) {
            const auto& r = c.report;
            std::string rev = r.revival ? fixed(r.revival->contrast_h, 1) + "/" + fixed(r.revival->contrast_v, 1) : "-";
            char line[256];
            std::snprintf(line, sizeof line, "%-9s %-17s %-17s %-7s %-7s %-7s %-17s %s%s\n",
                          std::string(to_string(c.preset)).c_str(), std::string(to_string(c.expected)).c_str(),
                          std::string(to_string(r.label)).c_str(), fixed(r.primary.contrast_h, 1).c_str(),
                          fixed(r.primary.contrast_v, 1).c_str(), phase_text(r.primary.delta_psi).c_str(),
                          rev.c_str(), fixed(c.drift_span, 2).c_str(),
                          c.insufficient_drift ? " (insufficient drift)" : "");
            o << line;
        }
    }

    std::map<Preset, std::size_t> passes;
    std::size_t total = 0, passed_runs = 0, low_drift = 0;
    std::vector<std::string> failures;
    for (const auto& res : results) {
        ++total;
        if (res.passed()) ++passed_runs;
        for (const auto& c : res.cases) {
            if (c.pass()) ++passes[c.preset];
            if (c.insufficient_drift) ++low_drift;
            if (!c.pass())
                failures.push_back("seed offset " + std::to_string(res.seed_offset) + ": " +
                                   std::string(to_string(c.preset)) + " expected " +
                                   std::string(to_string(c.expected)) + ", got " +
                                   std::string(to_string(c.report.label)) +
                                   (c.insufficient_drift ? " (insufficient drift)" : ""));
        }
    }
    for (Preset p : {Preset::PhiPlus, Preset::PhiMinus, Preset::PsiPlus})
        o << to_string(p) << ": " << passes[p] << "/" << total << " pass\n";
    o << "round trips: " << passed_runs << "/" << total << " with 3/3 presets\n";
    if (low_drift > 0)
        o << "warning: " << low_drift << " run(s) with insufficient drift (phase span < pi); extremal frames may not "
          << "sample both fringe extremes\n";
    for (const auto& f : failures) o << "FAIL " << f << '\n';
    return o.str();
}

// ---------------------------------------------------------------------------
// CSV import

namespace {

Frame::Scalar parse_sample(std::string_view cell, double max_value, const std::string& file, std::size_t line) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw FormatError(file + ": line " + std::to_string(line) + ": not a number: '" + std::string(cell) + "'", 0);
    const double r = std::round(v);
    if (r < 0.0 || r > max_value)
        throw FormatError(file + ": line " + std::to_string(line) + ": value out of range for bit depth", 0);
    return static_cast<Frame::Scalar>(r);
}

void read_stripe_csv(const std::filesystem::path& path, Frame& frame, StripeBounds stripe, double max_value) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const std::string name = path.filename().string();
    std::string text;
    std::size_t row = 0, line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (row >= stripe.size())
            throw FormatError(name + ": more than " + std::to_string(stripe.size()) + " stripe rows", 0);
        std::string_view rest(text);
        std::size_t col = 0;
        while (true) {
            const auto comma = rest.find(',');
            if (col >= static_cast<std::size_t>(frame.cols()))
                throw FormatError(name + ": line " + std::to_string(line_no) + ": too many columns", 0);
            frame(stripe.begin + row, col++) = parse_sample(rest.substr(0, comma), max_value, name, line_no);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (col != static_cast<std::size_t>(frame.cols()))
            throw FormatError(name + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(frame.cols()) + " columns, got " + std::to_string(col), 0);
        ++row;
    }
    if (row != stripe.size())
        throw FormatError(name + ": expected " + std::to_string(stripe.size()) + " stripe rows, got " +
                              std::to_string(row), 0);
}

}  // namespace

FrameStack import_csv_stack(const std::filesystem::path& dir, const RunConfig& config) {
    const auto& cam = config.experiment.camera;
    cam.validate();
    const double max_value = std::ldexp(1.0, cam.bit_depth) - 1.0;

    FrameStack stack;
    for (std::size_t t = 0;; ++t) {
        const auto ph = dir / ("frame_" + std::to_string(t) + "_H.csv");
        const auto pv = dir / ("frame_" + std::to_string(t) + "_V.csv");
        const bool has_h = std::filesystem::exists(ph), has_v = std::filesystem::exists(pv);
        if (!has_h && !has_v) break;
        if (has_h != has_v)
            throw FormatError("frame " + std::to_string(t) + ": missing " + (has_h ? pv : ph).filename().string(), 0);
        Frame f = Frame::Zero(cam.rows, cam.cols);
        read_stripe_csv(ph, f, cam.stripe_h, max_value);
        read_stripe_csv(pv, f, cam.stripe_v, max_value);
        stack.frames.push_back(std::move(f));
    }
    if (stack.frames.empty()) throw FormatError("no frame_0_H.csv / frame_0_V.csv in " + dir.string(), 0);

    auto& h = stack.header;
    h.rows = cam.rows;
    h.cols = cam.cols;
    h.n_frames = static_cast<std::uint32_t>(stack.frames.size());
    h.bit_depth = cam.bit_depth;
    h.fps = cam.fps;
    h.calibration = config.experiment.calibration.coefficients();
    h.stripe_h = cam.stripe_h;
    h.stripe_v = cam.stripe_v;
    h.seeds = {0, 0};
    h.digest = config_digest(config.experiment);
    return stack;
}

}  // namespace su11
