#include "su11/report.hpp"

#include "su11/config.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

namespace su11 {

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json measurement_json(const RunMeasurement& m) {
    return {{"contrast_H", m.contrast_h}, {"contrast_V", m.contrast_v}, {"delta_psi", optional_number(m.delta_psi)}};
}

}  // namespace

nlohmann::json report_to_json(const AnalysisReport& r) {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["label"] = to_string(r.label);
    j["contrast_H"] = r.primary.contrast_h;
    j["contrast_V"] = r.primary.contrast_v;
    j["delta_psi"] = optional_number(r.primary.delta_psi);
    j["fidelity_estimate"] = optional_number(r.fidelity_estimate);
    j["selected_frames"] = {{"H", {{"max", r.selected_h.idx_max}, {"min", r.selected_h.idx_min}}},
                            {"V", {{"max", r.selected_v.idx_max}, {"min", r.selected_v.idx_min}}}};
    j["frames"] = r.frames;
    j["frames_with_phase"] = r.frames_with_phase;
    j["thresholds"] = {{"high_pct", r.thresholds.high_pct},
                       {"low_pct", r.thresholds.low_pct},
                       {"phase_tol_rad", r.thresholds.phase_tol}};
    j["revival"] = r.revival ? measurement_json(*r.revival) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["command"] = m.command;
    j["config_digest"] = m.config_digest;
    j["outputs"] = m.outputs;
    j["timings_s"] = m.timings_s;
    for (const auto& [k, v] : m.extra.items()) j[k] = v;
    return j;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    write_file_atomic(path, manifest_to_json(manifest).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// SVG

namespace {

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::string colour;
    std::string label;
    bool dashed = false;
};

class SvgPanel {
public:
    SvgPanel(double left, double top, double width, double height) : l_(left), t_(top), w_(width), h_(height) {}

    void add(Series s) { series_.push_back(std::move(s)); }

    void render(std::ostringstream& o, const std::string& title, const std::string& xlabel) const {
        double x0 = 1e300, x1 = -1e300, y0 = 0.0, y1 = -1e300;
        for (const auto& s : series_) {
            for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
            for (double v : s.y) y1 = std::max(y1, v), y0 = std::min(y0, v);
        }
        if (!(x1 > x0)) x1 = x0 + 1.0;
        if (!(y1 > y0)) y1 = y0 + 1.0;
        auto px = [&](double x) { return l_ + (x - x0) / (x1 - x0) * w_; };
        auto py = [&](double y) { return t_ + h_ - (y - y0) / (y1 - y0) * h_; };

        o << "<rect x='" << l_ << "' y='" << t_ << "' width='" << w_ << "' height='" << h_
          << "' fill='none' stroke='#333'/>\n";
        o << "<text x='" << l_ + w_ / 2 << "' y='" << t_ - 8 << "' text-anchor='middle' font-size='13'>" << title
          << "</text>\n";
        o << "<text x='" << l_ + w_ / 2 << "' y='" << t_ + h_ + 32 << "' text-anchor='middle' font-size='11'>"
          << xlabel << "</text>\n";
        for (int k = 0; k <= 4; ++k) {
            const double xv = x0 + (x1 - x0) * k / 4.0;
            o << "<text x='" << px(xv) << "' y='" << t_ + h_ + 14 << "' text-anchor='middle' font-size='10'>"
              << std::setprecision(5) << xv << "</text>\n";
            const double yv = y0 + (y1 - y0) * k / 4.0;
            o << "<text x='" << l_ - 4 << "' y='" << py(yv) + 3 << "' text-anchor='end' font-size='10'>"
              << std::setprecision(4) << yv << "</text>\n";
        }
        double legend_y = t_ + 14;
        for (const auto& s : series_) {
            o << "<polyline fill='none' stroke='" << s.colour << "' stroke-width='1.2'"
              << (s.dashed ? " stroke-dasharray='5,3'" : "") << " points='";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                o << std::fixed << std::setprecision(2) << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            o.unsetf(std::ios::fixed);
            o << "'/>\n";
            o << "<text x='" << l_ + w_ - 6 << "' y='" << legend_y << "' text-anchor='end' font-size='10' fill='"
              << s.colour << "'>" << s.label << "</text>\n";
            legend_y += 13;
        }
    }

private:
    double l_, t_, w_, h_;
    std::vector<Series> series_;
};

std::string svg_open(double width, double height) {
    std::ostringstream o;
    o << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height << "' viewBox='0 0 "
      << width << ' ' << height << "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
    return o.str();
}

}  // namespace

std::string spectra_svg(const FrameStack& stack, const RunAnalysis& run) {
    const auto& h = stack.header;
    const WavelengthCalibration cal(h.calibration);
    std::vector<double> lambda;
    for (std::size_t c = run.band.begin; c < run.band.end; ++c) lambda.push_back(cal.wavelength(static_cast<double>(c)));

    auto trace = [&](std::size_t frame, StripeBounds s) {
        const StripeSpectrum sp = extract_stripe_spectrum(stack.frames[frame], s, cal);
        std::vector<double> y;
        for (std::size_t c = run.band.begin; c < run.band.end; ++c) y.push_back(sp.intensity(static_cast<Eigen::Index>(c)));
        return y;
    };

    std::ostringstream o;
    o << svg_open(900, 360);
    SvgPanel left(70, 40, 360, 260), right(520, 40, 360, 260);
    const std::size_t fmax = run.selected_h.idx_max, fmin = run.selected_h.idx_min;
    left.add({lambda, trace(fmax, h.stripe_h), "#1f77b4", "H", false});
    left.add({lambda, trace(fmax, h.stripe_v), "#d62728", "V", true});
    right.add({lambda, trace(fmin, h.stripe_h), "#1f77b4", "H", false});
    right.add({lambda, trace(fmin, h.stripe_v), "#d62728", "V", true});
    left.render(o, "frame " + std::to_string(fmax) + " (H maximum at 1064 nm)", "wavelength (nm)");
    right.render(o, "frame " + std::to_string(fmin) + " (H minimum at 1064 nm)", "wavelength (nm)");
    o << "</svg>\n";
    return o.str();
}

std::string reference_series_svg(const RunAnalysis& run, double fps) {
    std::vector<double> t, ih, iv;
    for (const auto& m : run.metrics) {
        t.push_back(static_cast<double>(m.frame) / fps);
        ih.push_back(m.i_ref_h);
        iv.push_back(m.i_ref_v);
    }
    std::ostringstream o;
    o << svg_open(900, 360);
    SvgPanel panel(70, 40, 800, 260);
    panel.add({t, ih, "#1f77b4", "I_ref H", false});
    panel.add({t, iv, "#d62728", "I_ref V", true});
    panel.render(o, "intensity at 1064 nm", "time (s)");
    o << "</svg>\n";
    return o.str();
}

}  // namespace su11
