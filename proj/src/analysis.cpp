#include "su11/analysis.hpp"

#include "su11/parallel.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace su11 {

std::string_view to_string(BellLabel label) {
    switch (label) {
        case BellLabel::PhiPlus: return "PhiPlus";
        case BellLabel::PhiMinus: return "PhiMinus";
        case BellLabel::PsiPlusCandidate: return "PsiPlusCandidate";
        case BellLabel::PsiPlusConfirmed: return "PsiPlusConfirmed";
        case BellLabel::Unknown: return "Unknown";
    }
    return "Unknown";
}

BellLabel bell_label_from_string(std::string_view name) {
    for (BellLabel l : {BellLabel::PhiPlus, BellLabel::PhiMinus, BellLabel::PsiPlusCandidate,
                        BellLabel::PsiPlusConfirmed, BellLabel::Unknown})
        if (to_string(l) == name) return l;
    throw std::invalid_argument("unknown label '" + std::string(name) + "'");
}

StripeSpectrum extract_stripe_spectrum(const Frame& frame, StripeBounds stripe, const WavelengthCalibration& cal) {
    if (stripe.size() == 0) throw std::invalid_argument("extract_stripe_spectrum: empty stripe");
    if (stripe.end > frame.rows()) throw std::invalid_argument("extract_stripe_spectrum: stripe outside frame");
    StripeSpectrum out;
    out.intensity = frame.middleRows(stripe.begin, stripe.size()).cast<double>().colwise().sum().transpose();
    out.wavelength_nm.resize(frame.cols());
    for (Eigen::Index c = 0; c < frame.cols(); ++c) out.wavelength_nm(c) = cal.wavelength(static_cast<double>(c));
    return out;
}

namespace {

double stripe_reference(const Frame& frame, StripeBounds stripe, double ref_column, int halfwidth) {
    const Eigen::Index centre = static_cast<Eigen::Index>(std::lround(ref_column));
    const Eigen::Index lo = std::max<Eigen::Index>(0, centre - halfwidth);
    const Eigen::Index hi = std::min<Eigen::Index>(frame.cols() - 1, centre + halfwidth);
    if (lo > hi || stripe.size() == 0) throw std::invalid_argument("frame_metrics: reference column outside frame");
    const auto block = frame.block(stripe.begin, lo, stripe.size(), hi - lo + 1).cast<double>();
    return block.sum() / static_cast<double>(hi - lo + 1);
}

}  // namespace

FrameMetrics frame_metrics(const Frame& frame, std::size_t index, StripeBounds stripe_h, StripeBounds stripe_v,
                           double ref_column, int halfwidth) {
    return {index, stripe_reference(frame, stripe_h, ref_column, halfwidth),
            stripe_reference(frame, stripe_v, ref_column, halfwidth)};
}

ExtremalFrames select_extremal_frames(std::span<const FrameMetrics> metrics, Polarization pol) {
    if (metrics.empty()) throw std::invalid_argument("select_extremal_frames: empty stack");
    auto value = [pol](const FrameMetrics& m) { return pol == Polarization::H ? m.i_ref_h : m.i_ref_v; };
    ExtremalFrames out{metrics[0].frame, metrics[0].frame};
    double best_max = value(metrics[0]), best_min = best_max;
    for (const FrameMetrics& m : metrics.subspan(1)) {
        const double x = value(m);
        if (x > best_max || (x == best_max && m.frame < out.idx_max)) {
            best_max = x;
            out.idx_max = m.frame;
        }
        if (x < best_min || (x == best_min && m.frame < out.idx_min)) {
            best_min = x;
            out.idx_min = m.frame;
        }
    }
    return out;
}

ExtremalFrames select_extremal_frames(const FrameStack& stack, Polarization pol, const AnalysisOptions& options) {
    const WavelengthCalibration cal(stack.header.calibration, options.lambda_ref_nm);
    const double ref = cal.column(options.lambda_ref_nm);
    std::vector<FrameMetrics> m;
    m.reserve(stack.frames.size());
    for (std::size_t t = 0; t < stack.frames.size(); ++t)
        m.push_back(frame_metrics(stack.frames[t], t, stack.header.stripe_h, stack.header.stripe_v, ref,
                                  options.ref_halfwidth));
    return select_extremal_frames(m, pol);
}

double contrast(double i_max, double i_min) {
    if (!(i_max + i_min > 0.0)) throw std::domain_error("contrast: undefined for I_max + I_min = 0");
    return 100.0 * (i_max - i_min) / (i_max + i_min);
}

ColumnBand analysis_band(const WavelengthCalibration& cal, std::uint32_t cols, const SpectralModel& model,
                         double fraction) {
    const double nu0 = model.omega0 / (2.0 * std::numbers::pi);
    const double half = 0.5 * fraction * model.envelope_fwhm;
    const double lam_a = kSpeedOfLight / (nu0 - half) * 1e9;
    const double lam_b = kSpeedOfLight / (nu0 + half) * 1e9;
    const double ca = cal.column(lam_a), cb = cal.column(lam_b);
    const double lo = std::max(0.0, std::ceil(std::min(ca, cb)));
    const double hi = std::min(static_cast<double>(cols), std::floor(std::max(ca, cb)) + 1.0);
    if (!(hi > lo)) throw std::invalid_argument("analysis_band: band does not intersect the frame");
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

namespace {

constexpr std::size_t kMinBandColumns = 16;
constexpr std::size_t kLowestFringeBin = 2;

Eigen::VectorXd hann(std::size_t n) {
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i)
        w(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / static_cast<double>(n));
    return w;
}

// Zero-padded to a power of two: the samples of the windowed DTFT are the same,
// only denser, and the FFT stays fast for any band length.
std::vector<std::complex<double>> windowed_spectrum(const Eigen::VectorXd& x, const Eigen::VectorXd& window) {
    static thread_local Eigen::FFT<double> fft;
    std::vector<double> in(std::bit_ceil(static_cast<std::size_t>(x.size())), 0.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) in[i] = x(i) * window(i);
    std::vector<std::complex<double>> out;
    fft.fwd(out, in);
    return out;
}

struct Peak {
    std::size_t index;  // into the padded spectrum
    double bin;         // in cycles per trace length n
};

Peak peak_bin(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b,
              std::size_t n) {
    const std::size_t m = a.size();
    const double scale = static_cast<double>(n) / static_cast<double>(m);
    const std::size_t first = (kLowestFringeBin * m + n - 1) / n;
    Peak best{first, static_cast<double>(first) * scale};
    double best_mag = -1.0;
    for (std::size_t k = first; k < m / 2; ++k) {
        const double mag = std::abs(a[k]) + std::abs(b[k]);
        if (mag > best_mag) {
            best_mag = mag;
            best = {k, static_cast<double>(k) * scale};
        }
    }
    return best;
}

// Truncated moving average of real width `width`: the two end taps carry the
// fractional remainder, so a whole number of fringe periods averages to zero.
// The window shrinks at the edges.
Eigen::VectorXd moving_average(const Eigen::VectorXd& x, double width) {
    const Eigen::Index n = x.size();
    const double half = std::max(0.5, width / 2.0);
    const Eigen::Index full = static_cast<Eigen::Index>(std::floor(half - 0.5));
    const double frac = half - 0.5 - static_cast<double>(full);
    Eigen::VectorXd prefix(n + 1);
    prefix(0) = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) + x(i);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - full);
        const Eigen::Index hi = std::min<Eigen::Index>(n, i + full + 1);
        double sum = prefix(hi) - prefix(lo);
        double weight = static_cast<double>(hi - lo);
        if (i - full - 1 >= 0) {
            sum += frac * x(i - full - 1);
            weight += frac;
        }
        if (i + full + 1 < n) {
            sum += frac * x(i + full + 1);
            weight += frac;
        }
        out(i) = sum / weight;
    }
    return out;
}

double dtft_magnitude(const Eigen::VectorXd& x, const Eigen::VectorXd& w, double bin) {
    const double step = 2.0 * std::numbers::pi * bin / static_cast<double>(x.size());
    const std::complex<double> rot = std::polar(1.0, -step);
    std::complex<double> phasor{1.0, 0.0}, acc{0.0, 0.0};
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        acc += w(i) * x(i) * phasor;
        phasor *= rot;
    }
    return std::abs(acc);
}

// Golden-section search for the main-lobe maximum within one bin of `bin`.
double refine_peak(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& w, double bin) {
    auto score = [&](double f) { return dtft_magnitude(a, w, f) + dtft_magnitude(b, w, f); };
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = bin - 1.0, hi = bin + 1.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double s1 = score(x1), s2 = score(x2);
    for (int it = 0; it < 40; ++it) {
        if (s1 < s2) {
            lo = x1;
            x1 = x2;
            s1 = s2;
            x2 = lo + g * (hi - lo);
            s2 = score(x2);
        } else {
            hi = x2;
            x2 = x1;
            s2 = s1;
            x1 = hi - g * (hi - lo);
            s1 = score(x1);
        }
    }
    return 0.5 * (lo + hi);
}

// Weighted least squares x ~ c + a cos(k i) + b sin(k i); phase psi of a cos(k i + psi).
double fitted_phase(const Eigen::VectorXd& x, const Eigen::VectorXd& w, double bin) {
    const Eigen::Index n = x.size();
    const double k = 2.0 * std::numbers::pi * bin / static_cast<double>(n);
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sw = std::sqrt(w(i));
        design(i, 0) = sw;
        design(i, 1) = sw * std::cos(k * static_cast<double>(i));
        design(i, 2) = sw * std::sin(k * static_cast<double>(i));
        rhs(i) = sw * x(i);
    }
    const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(rhs);
    return std::atan2(-coef(2), coef(1));
}

}  // namespace

std::optional<double> relative_fringe_phase(const Eigen::VectorXd& h, const Eigen::VectorXd& v,
                                            double min_modulation) {
    if (h.size() != v.size()) throw std::invalid_argument("relative_fringe_phase: traces differ in length");
    const std::size_t n = static_cast<std::size_t>(h.size());
    if (n < kMinBandColumns) return std::nullopt;
    if (!(h.mean() > 0.0) || !(v.mean() > 0.0)) return std::nullopt;

    const Eigen::VectorXd window = hann(n);
    // Coarse fringe period from the mean-normalized traces.
    const auto coarse_h = windowed_spectrum(h / h.mean() - Eigen::VectorXd::Ones(n), window);
    const auto coarse_v = windowed_spectrum(v / v.mean() - Eigen::VectorXd::Ones(n), window);
    const Peak coarse = peak_bin(coarse_h, coarse_v, n);

    // Envelope detrending: baseline over 3 fringe periods, then once more with
    // the period refined on the detrended traces.
    double f = coarse.bin;
    Eigen::VectorXd rh, rv;
    for (int pass = 0; pass < 2; ++pass) {
        const double span = std::clamp(3.0 * static_cast<double>(n) / f, 3.0, static_cast<double>(n));
        const Eigen::VectorXd base_h = moving_average(h, span);
        const Eigen::VectorXd base_v = moving_average(v, span);
        if ((base_h.array() <= 0.0).any() || (base_v.array() <= 0.0).any()) return std::nullopt;
        rh = h.cwiseQuotient(base_h) - Eigen::VectorXd::Ones(n);
        rv = v.cwiseQuotient(base_v) - Eigen::VectorXd::Ones(n);

        const auto fh = windowed_spectrum(rh, window);
        const auto fv = windowed_spectrum(rv, window);
        const Peak peak = peak_bin(fh, fv, n);
        const double gain = window.sum() / 2.0;  // cosine of unit amplitude -> |F| = gain
        if (std::abs(fh[peak.index]) / gain < min_modulation || std::abs(fv[peak.index]) / gain < min_modulation)
            return std::nullopt;
        // The bin phase alone is biased by the negative-frequency image when the
        // band holds a non-integer number of fringes: refine the common frequency
        // on the windowed DTFT and read each phase from a weighted sinusoid fit.
        f = refine_peak(rh, rv, window, peak.bin);
    }
    // Near the ends the baseline window is truncated and carries fringe ripple;
    // fit only where it is complete, if that still spans two periods.
    const double span = std::clamp(3.0 * static_cast<double>(n) / f, 3.0, static_cast<double>(n));
    const std::size_t edge = static_cast<std::size_t>(std::ceil(span / 2.0));
    Eigen::VectorXd fit_window = window;
    if (n > 2 * edge && static_cast<double>(n - 2 * edge) >= 2.0 * static_cast<double>(n) / f) {
        fit_window.setZero();
        fit_window.segment(edge, n - 2 * edge) = hann(n - 2 * edge);
    }
    const auto ph = fitted_phase(rh, fit_window, f);
    const auto pv = fitted_phase(rv, fit_window, f);
    return wrap_phase(pv - ph);
}

std::optional<double> relative_fringe_phase(const Frame& frame, StripeBounds stripe_h, StripeBounds stripe_v,
                                            const WavelengthCalibration& cal, ColumnBand band,
                                            double min_modulation) {
    (void)cal;  // band columns are already in calibrated pixel space
    if (band.end > static_cast<std::size_t>(frame.cols()) || band.size() == 0)
        throw std::invalid_argument("relative_fringe_phase: band outside frame");
    auto trace = [&](StripeBounds s) -> Eigen::VectorXd {
        if (s.size() == 0 || s.end > frame.rows()) throw std::invalid_argument("relative_fringe_phase: bad stripe");
        return frame.block(s.begin, band.begin, s.size(), band.size()).cast<double>().colwise().sum().transpose();
    };
    return relative_fringe_phase(trace(stripe_h), trace(stripe_v), min_modulation);
}

BellLabel classify(const RunMeasurement& primary, const std::optional<RunMeasurement>& revival,
                   const Thresholds& thresholds) {
    auto high = [&](const RunMeasurement& m) {
        return m.contrast_h >= thresholds.high_pct && m.contrast_v >= thresholds.high_pct;
    };
    auto low = [&](const RunMeasurement& m) {
        return m.contrast_h <= thresholds.low_pct && m.contrast_v <= thresholds.low_pct;
    };
    if (high(primary)) {
        if (!primary.delta_psi) return BellLabel::Unknown;
        if (std::abs(wrap_phase(*primary.delta_psi)) <= thresholds.phase_tol) return BellLabel::PhiPlus;
        if (std::abs(wrap_phase(*primary.delta_psi - std::numbers::pi)) <= thresholds.phase_tol)
            return BellLabel::PhiMinus;
        return BellLabel::Unknown;
    }
    if (low(primary)) {
        if (revival && high(*revival)) return BellLabel::PsiPlusConfirmed;
        return BellLabel::PsiPlusCandidate;
    }
    return BellLabel::Unknown;
}

double fidelity_from_residual_contrast(double c_residual, double c_reference) {
    if (!(c_reference > 0.0)) throw std::domain_error("fidelity_from_residual_contrast: reference contrast is zero");
    if (c_residual < 0.0 || c_residual > c_reference || c_reference > 100.0)
        throw std::invalid_argument("fidelity_from_residual_contrast: need 0 <= residual <= reference <= 100");
    const double r = c_residual / c_reference;
    return 1.0 - r * r;
}

std::optional<double> circular_mean(std::span<const std::optional<double>> phases) {
    std::complex<double> acc{0.0, 0.0};
    std::size_t n = 0;
    for (const auto& p : phases) {
        if (!p) continue;
        acc += std::polar(1.0, *p);
        ++n;
    }
    if (n == 0 || std::abs(acc) == 0.0) return std::nullopt;
    return wrap_phase(std::arg(acc));
}

RunAnalysis analyze_run(const FrameStack& stack, const SpectralModel& model, const AnalysisOptions& options) {
    if (stack.frames.empty()) throw std::invalid_argument("analyze_run: empty stack");
    const auto& h = stack.header;
    const WavelengthCalibration cal(h.calibration, options.lambda_ref_nm);

    RunAnalysis out;
    out.ref_column = cal.column(options.lambda_ref_nm);
    if (!(out.ref_column >= 0.0 && out.ref_column <= h.cols - 1.0))
        throw std::invalid_argument("analyze_run: reference wavelength outside the frame");
    out.band = analysis_band(cal, h.cols, model, options.band_fraction);

    const std::size_t n = stack.frames.size();
    out.metrics.resize(n);
    out.frame_delta_psi.resize(n);
    parallel_for(n, [&](std::size_t t) {
        const Frame& f = stack.frames[t];
        out.metrics[t] = frame_metrics(f, t, h.stripe_h, h.stripe_v, out.ref_column, options.ref_halfwidth);
        out.frame_delta_psi[t] = relative_fringe_phase(f, h.stripe_h, h.stripe_v, cal, out.band, options.min_modulation);
    });

    out.selected_h = select_extremal_frames(out.metrics, Polarization::H);
    out.selected_v = select_extremal_frames(out.metrics, Polarization::V);
    auto safe_contrast = [](double mx, double mn) { return mx + mn > 0.0 ? contrast(mx, mn) : 0.0; };
    out.measurement.contrast_h =
        safe_contrast(out.metrics[out.selected_h.idx_max].i_ref_h, out.metrics[out.selected_h.idx_min].i_ref_h);
    out.measurement.contrast_v =
        safe_contrast(out.metrics[out.selected_v.idx_max].i_ref_v, out.metrics[out.selected_v.idx_min].i_ref_v);
    out.measurement.delta_psi = circular_mean(out.frame_delta_psi);
    return out;
}

AnalysisReport build_report(const RunAnalysis& primary, const RunAnalysis* revival, const AnalysisOptions& options) {
    AnalysisReport r;
    r.primary = primary.measurement;
    r.selected_h = primary.selected_h;
    r.selected_v = primary.selected_v;
    r.frames = primary.metrics.size();
    r.frames_with_phase = static_cast<std::size_t>(
        std::count_if(primary.frame_delta_psi.begin(), primary.frame_delta_psi.end(), [](auto& p) { return p.has_value(); }));
    if (revival) r.revival = revival->measurement;
    r.thresholds = options.thresholds;
    r.label = classify(r.primary, r.revival, options.thresholds);

    switch (r.label) {
        case BellLabel::PhiPlus: {
            const double e = *r.primary.delta_psi;
            r.fidelity_estimate = std::pow(std::cos(e / 2.0), 2);
            break;
        }
        case BellLabel::PhiMinus: {
            const double e = wrap_phase(*r.primary.delta_psi - std::numbers::pi);
            r.fidelity_estimate = std::pow(std::cos(e / 2.0), 2);
            break;
        }
        case BellLabel::PsiPlusConfirmed: {
            const double res = 0.5 * (r.primary.contrast_h + r.primary.contrast_v);
            const double ref = 0.5 * (r.revival->contrast_h + r.revival->contrast_v);
            r.fidelity_estimate = fidelity_from_residual_contrast(std::min(res, ref), ref);
            break;
        }
        default: break;
    }
    return r;
}

}  // namespace su11
