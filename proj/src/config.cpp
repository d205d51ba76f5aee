#include "su11/config.hpp"

#include "su11/errors.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace su11 {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

/// One mapping of the document; tracks consumed keys so leftovers can be
/// reported as unknown.
class Section {
public:
    Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
        if (node_ && !node_.IsMap()) throw ConfigError("section '" + name_ + "' must be a mapping", line_of(node_));
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!node_) return fallback;
        const YAML::Node v = node_[key];
        if (!v) return fallback;
        try {
            return v.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(name_ + "." + key + ": invalid value '" + (v.IsScalar() ? v.Scalar() : "") + "'",
                              line_of(v));
        }
    }

    bool has(const std::string& key) const { return node_ && node_[key]; }

    int line(const std::string& key) const { return node_ && node_[key] ? line_of(node_[key]) : line_of(node_); }

    void finish() const {
        if (!node_) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key))
                throw ConfigError("unknown key '" + name_ + "." + key + "'", line_of(kv.first));
        }
    }

private:
    YAML::Node node_;
    std::string name_;
    std::set<std::string> seen_;
};

template <typename Fn>
auto anchored(int line, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        if (e.line() > 0) throw;
        throw ConfigError(e.what(), line);
    }
}

StripeBounds stripe(Section& s, const std::string& key, StripeBounds fallback) {
    const auto v = s.get<std::vector<std::uint32_t>>(key, {fallback.begin, fallback.end});
    if (v.size() != 2) throw ConfigError("camera." + key + " must be [begin, end]", s.line(key));
    return {v[0], v[1]};
}

std::string num(double x) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    std::string s(buf.data(), end);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

RunConfig default_run_config(Preset preset) {
    RunConfig c;
    c.experiment.preset = preset;
    c.experiment.plates = table_settings(preset == Preset::Custom ? Preset::PhiPlus : preset);
    return c;
}

RunConfig parse_run_config(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.line + 1);
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) throw ConfigError("config must be a mapping of sections", line_of(root));

    for (const auto& kv : root) {
        static const std::set<std::string> sections{"experiment", "spectral",  "drift", "camera",
                                                    "calibration", "analysis", "output"};
        const auto key = kv.first.as<std::string>();
        if (!sections.count(key)) throw ConfigError("unknown section '" + key + "'", line_of(kv.first));
    }

    RunConfig rc;
    auto& ex = rc.experiment;

    Section exp(root["experiment"], "experiment");
    const auto preset_name = exp.get<std::string>("preset", "PhiPlus");
    ex.preset = anchored(exp.line("preset"), [&] { return preset_from_string(preset_name); });
    const PlateSettings table = table_settings(ex.preset == Preset::Custom ? Preset::PhiPlus : ex.preset);
    ex.plates.pump_plate_deg = exp.get("pump_plate_deg", table.pump_plate_deg);
    ex.plates.spdc_plate_deg = exp.get("spdc_plate_deg", table.spdc_plate_deg);
    const auto kind = exp.get<std::string>("spdc_plate_kind", std::string(to_string(table.spdc_kind)));
    ex.plates.spdc_kind = anchored(exp.line("spdc_plate_kind"), [&] { return spdc_plate_kind_from_string(kind); });
    ex.n_frames = exp.get("n_frames", ex.n_frames);
    exp.finish();
    if (ex.preset != Preset::Custom) {
        if (ex.plates.pump_plate_deg != table.pump_plate_deg)
            throw ConfigError("pump_plate_deg must be " + num(table.pump_plate_deg) + " for preset " + preset_name,
                              exp.line("pump_plate_deg"));
        if (ex.plates.spdc_plate_deg != table.spdc_plate_deg)
            throw ConfigError("spdc_plate_deg must be " + num(table.spdc_plate_deg) + " for preset " + preset_name,
                              exp.line("spdc_plate_deg"));
    }

    Section sp(root["spectral"], "spectral");
    auto& m = ex.spectral;
    const double centre = sp.get("center_wavelength_nm", kReferenceWavelengthNm);
    m.omega0 = angular_frequency_from_nm(centre);
    const auto shape = sp.get<std::string>("envelope", std::string(to_string(m.shape)));
    try {
        m.shape = envelope_shape_from_string(shape);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), sp.line("envelope"));
    }
    m.envelope_fwhm = sp.get("envelope_fwhm_hz", m.envelope_fwhm);
    m.tau = sp.get("tau_s", m.tau);
    m.beta = sp.get("beta_s2", m.beta);
    m.eta = sp.get("eta", m.eta);
    m.delta_bir = sp.get("delta_bir_rad", m.delta_bir);
    m.epsilon1 = sp.get("epsilon1", m.epsilon1);
    m.epsilon2 = sp.get("epsilon2", m.epsilon2);
    sp.finish();
    auto range_check = [&](bool ok, const std::string& key, const std::string& msg) {
        if (!ok) throw ConfigError("spectral." + key + ": " + msg, sp.line(key));
    };
    range_check(centre > 0, "center_wavelength_nm", "must be > 0");
    range_check(m.envelope_fwhm > 0, "envelope_fwhm_hz", "must be > 0");
    range_check(m.eta >= 0 && m.eta <= 1, "eta", "must lie in [0, 1]");
    range_check(m.epsilon1 >= 0 && m.epsilon1 <= kMaxLowGain, "epsilon1",
                "must lie in [0, 0.3] (low-gain regime)");
    range_check(m.epsilon2 >= 0 && m.epsilon2 <= kMaxLowGain, "epsilon2",
                "must lie in [0, 0.3] (low-gain regime)");

    Section dr(root["drift"], "drift");
    ex.drift.sigma_step = dr.get("sigma_step_rad", ex.drift.sigma_step);
    ex.drift.phi_init = dr.get("phi_init_rad", ex.drift.phi_init);
    ex.drift.seed = dr.get("seed", ex.drift.seed);
    ex.drift.sigma_differential = dr.get("sigma_differential_rad", ex.drift.sigma_differential);
    dr.finish();

    Section cam(root["camera"], "camera");
    auto& c = ex.camera;
    c.rows = cam.get("rows", c.rows);
    c.cols = cam.get("cols", c.cols);
    c.stripe_h = stripe(cam, "stripe_h", c.stripe_h);
    c.stripe_v = stripe(cam, "stripe_v", c.stripe_v);
    c.psf_sigma = cam.get("psf_sigma_px", c.psf_sigma);
    c.counts_per_unit = cam.get("counts_per_unit", c.counts_per_unit);
    c.read_noise = cam.get("read_noise", c.read_noise);
    c.bit_depth = static_cast<std::uint8_t>(cam.get<int>("bit_depth", c.bit_depth));
    c.fps = cam.get("fps", c.fps);
    c.noise_seed = cam.get("noise_seed", c.noise_seed);
    c.poisson = cam.get("poisson", c.poisson);
    c.exposure_phase_blur = cam.get("exposure_phase_blur_rad", c.exposure_phase_blur);
    cam.finish();
    anchored(line_of(root["camera"]), [&] {
        c.validate();
        return 0;
    });

    Section cal(root["calibration"], "calibration");
    const auto coeffs = cal.get<std::vector<double>>(
        "coefficients", {ex.calibration.coefficients().begin(), ex.calibration.coefficients().end()});
    if (coeffs.size() != 4) throw ConfigError("calibration.coefficients must hold 4 values", cal.line("coefficients"));
    const double lambda_ref = cal.get("lambda_ref_nm", kReferenceWavelengthNm);
    cal.finish();
    ex.calibration = anchored(cal.line("coefficients"), [&] {
        return WavelengthCalibration({coeffs[0], coeffs[1], coeffs[2], coeffs[3]}, lambda_ref);
    });

    Section an(root["analysis"], "analysis");
    auto& a = rc.analysis;
    a.thresholds.high_pct = an.get("contrast_high_pct", a.thresholds.high_pct);
    a.thresholds.low_pct = an.get("contrast_low_pct", a.thresholds.low_pct);
    a.thresholds.phase_tol = an.get("phase_tol_rad", a.thresholds.phase_tol);
    a.ref_halfwidth = an.get("ref_halfwidth_cols", a.ref_halfwidth);
    a.band_fraction = an.get("band_fraction", a.band_fraction);
    a.min_modulation = an.get("min_modulation", a.min_modulation);
    an.finish();
    if (!(a.thresholds.low_pct < a.thresholds.high_pct))
        throw ConfigError("analysis.contrast_low_pct must be below contrast_high_pct", an.line("contrast_low_pct"));
    if (a.ref_halfwidth < 0) throw ConfigError("analysis.ref_halfwidth_cols must be >= 0", an.line("ref_halfwidth_cols"));
    if (!(a.band_fraction > 0)) throw ConfigError("analysis.band_fraction must be > 0", an.line("band_fraction"));

    Section out(root["output"], "output");
    rc.output.stack = out.get<std::string>("stack", "");
    rc.output.report_dir = out.get<std::string>("report_dir", "");
    out.finish();

    anchored(line_of(root), [&] {
        ex.validate();
        return 0;
    });
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_run_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string emit_run_config(const RunConfig& rc) {
    const auto& ex = rc.experiment;
    const auto& m = ex.spectral;
    const auto& c = ex.camera;
    const auto& a = rc.analysis;
    const auto& k = ex.calibration.coefficients();
    std::ostringstream o;
    o << "# su11 run configuration. Every setting is listed with its value.\n"
      << "experiment:\n"
      << "  preset: " << to_string(ex.preset) << "  # PhiPlus | PhiMinus | PsiPlus | custom\n"
      << "  pump_plate_deg: " << num(ex.plates.pump_plate_deg) << "\n"
      << "  spdc_plate_deg: " << num(ex.plates.spdc_plate_deg) << "\n"
      << "  spdc_plate_kind: " << to_string(ex.plates.spdc_kind)
      << "  # rotation | half_wave | quarter_wave_double_pass\n"
      << "  n_frames: " << ex.n_frames << "\n"
      << "spectral:\n"
      << "  center_wavelength_nm: " << num(std::round(wavelength_nm_from_angular_frequency(m.omega0) * 1e6) / 1e6) << "\n"
      << "  envelope: " << to_string(m.shape) << "  # gaussian | sinc2\n"
      << "  envelope_fwhm_hz: " << num(m.envelope_fwhm) << "\n"
      << "  tau_s: " << num(m.tau) << "\n"
      << "  beta_s2: " << num(m.beta) << "\n"
      << "  eta: " << num(m.eta) << "\n"
      << "  delta_bir_rad: " << num(m.delta_bir) << "\n"
      << "  epsilon1: " << num(m.epsilon1) << "\n"
      << "  epsilon2: " << num(m.epsilon2) << "\n"
      << "drift:\n"
      << "  sigma_step_rad: " << num(ex.drift.sigma_step) << "\n"
      << "  phi_init_rad: " << num(ex.drift.phi_init) << "\n"
      << "  seed: " << ex.drift.seed << "\n"
      << "  sigma_differential_rad: " << num(ex.drift.sigma_differential) << "\n"
      << "camera:\n"
      << "  rows: " << c.rows << "\n"
      << "  cols: " << c.cols << "\n"
      << "  stripe_h: [" << c.stripe_h.begin << ", " << c.stripe_h.end << "]\n"
      << "  stripe_v: [" << c.stripe_v.begin << ", " << c.stripe_v.end << "]\n"
      << "  psf_sigma_px: " << num(c.psf_sigma) << "\n"
      << "  counts_per_unit: " << num(c.counts_per_unit) << "\n"
      << "  read_noise: " << num(c.read_noise) << "\n"
      << "  bit_depth: " << int{c.bit_depth} << "\n"
      << "  fps: " << num(c.fps) << "\n"
      << "  noise_seed: " << c.noise_seed << "\n"
      << "  poisson: " << (c.poisson ? "true" : "false") << "\n"
      << "  exposure_phase_blur_rad: " << num(c.exposure_phase_blur) << "\n"
      << "calibration:\n"
      << "  # column = c0 + c1 x + c2 x^2 + c3 x^3, x = lambda_nm - lambda_ref_nm\n"
      << "  coefficients: [" << num(k[0]) << ", " << num(k[1]) << ", " << num(k[2]) << ", " << num(k[3]) << "]\n"
      << "  lambda_ref_nm: " << num(ex.calibration.lambda_ref()) << "\n"
      << "analysis:\n"
      << "  contrast_high_pct: " << num(a.thresholds.high_pct) << "\n"
      << "  contrast_low_pct: " << num(a.thresholds.low_pct) << "\n"
      << "  phase_tol_rad: " << num(a.thresholds.phase_tol) << "\n"
      << "  ref_halfwidth_cols: " << a.ref_halfwidth << "\n"
      << "  band_fraction: " << num(a.band_fraction) << "\n"
      << "  min_modulation: " << num(a.min_modulation) << "\n"
      << "output:\n"
      << "  stack: \"" << rc.output.stack << "\"\n"
      << "  report_dir: \"" << rc.output.report_dir << "\"\n";
    return o.str();
}

nlohmann::json experiment_to_json(const ExperimentConfig& ex) {
    const auto& m = ex.spectral;
    const auto& c = ex.camera;
    nlohmann::json j;
    j["format"] = "SU11FRM1";
    j["rng"] = kRngName;
    j["preset"] = to_string(ex.preset);
    j["plates"] = {{"pump_plate_deg", ex.plates.pump_plate_deg},
                   {"spdc_plate_deg", ex.plates.spdc_plate_deg},
                   {"spdc_plate_kind", to_string(ex.plates.spdc_kind)}};
    j["n_frames"] = ex.n_frames;
    j["spectral"] = {{"omega0", m.omega0},         {"envelope_fwhm", m.envelope_fwhm},
                     {"envelope", to_string(m.shape)}, {"tau", m.tau},
                     {"beta", m.beta},             {"eta", m.eta},
                     {"delta_bir", m.delta_bir},   {"epsilon1", m.epsilon1},
                     {"epsilon2", m.epsilon2}};
    j["drift"] = {{"sigma_step", ex.drift.sigma_step},
                  {"phi_init", ex.drift.phi_init},
                  {"seed", ex.drift.seed},
                  {"sigma_differential", ex.drift.sigma_differential}};
    j["camera"] = {{"rows", c.rows},
                   {"cols", c.cols},
                   {"stripe_h", {c.stripe_h.begin, c.stripe_h.end}},
                   {"stripe_v", {c.stripe_v.begin, c.stripe_v.end}},
                   {"psf_sigma", c.psf_sigma},
                   {"counts_per_unit", c.counts_per_unit},
                   {"read_noise", c.read_noise},
                   {"bit_depth", c.bit_depth},
                   {"fps", c.fps},
                   {"noise_seed", c.noise_seed},
                   {"poisson", c.poisson},
                   {"exposure_phase_blur", c.exposure_phase_blur}};
    j["calibration"] = {{"coefficients", ex.calibration.coefficients()}, {"lambda_ref", ex.calibration.lambda_ref()}};
    return j;
}

Digest config_digest(const ExperimentConfig& config) {
    const std::string canonical = experiment_to_json(config).dump();
    Digest d{};
    unsigned int len = 0;
    if (EVP_Digest(canonical.data(), canonical.size(), d.data(), &len, EVP_sha256(), nullptr) != 1 || len != d.size())
        throw std::runtime_error("SHA-256 digest failed");
    return d;
}

std::string digest_hex(const Digest& digest) {
    std::ostringstream o;
    for (auto b : digest) o << std::hex << std::setw(2) << std::setfill('0') << int{b};
    return o.str();
}

}  // namespace su11
