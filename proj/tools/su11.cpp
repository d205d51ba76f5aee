// su11: simulate, analyze and check dual-polarization SU(1,1) Bell-state runs.
//
// Exit codes: 0 ok, 1 I/O error, 2 config error, 3 format error, 4 assertion failure.

#include "su11/acquisition.hpp"
#include "su11/config.hpp"
#include "su11/errors.hpp"
#include "su11/oracles.hpp"
#include "su11/parallel.hpp"
#include "su11/report.hpp"
#include "su11/runner.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace su11;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitAssertion = 4;

struct AssertionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

RunConfig config_or_default(const std::string& path) {
    return path.empty() ? default_run_config() : load_run_config(path);
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

void cmd_presets() {
    struct Row {
        Preset preset;
        const char* signature;
    };
    const Row rows[] = {{Preset::PhiPlus, "H and V fringes in phase"},
                        {Preset::PhiMinus, "H and V fringes pi out of phase"},
                        {Preset::PsiPlus, "fringes vanish; revive with SPDC plate at 90"}};
    for (const auto& r : rows) {
        const PlateSettings s = table_settings(r.preset);
        std::printf("%s: pump %g°, SPDC %g°  (%s)\n", std::string(to_string(r.preset)).c_str(), s.pump_plate_deg,
                    s.spdc_plate_deg, r.signature);
    }
}

void cmd_template(const std::string& preset, const std::string& out) {
    const std::string text = emit_run_config(default_run_config(preset_from_string(preset)));
    if (out.empty())
        std::cout << text;
    else
        write_file_atomic(out, text);
}

void cmd_simulate(const std::string& conf, const std::string& out_arg, const std::string& revival_out) {
    Stopwatch clock;
    const RunConfig cfg = config_or_default(conf);
    const std::string out = out_arg.empty() ? cfg.output.stack : out_arg;
    if (out.empty()) throw ConfigError("no output stack path (-o or output.stack)");

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_digest = digest_hex(config_digest(cfg.experiment));
    manifest.timings_s["load_config"] = clock.lap();

    const FrameStack stack = simulate_experiment(cfg.experiment);
    manifest.timings_s["simulate"] = clock.lap();
    write_frame_stack(stack, out);
    manifest.outputs["stack"] = out;
    bool saturated = stack.saturation_warning;

    if (!revival_out.empty()) {
        const FrameStack revival = simulate_experiment(revival_config(cfg.experiment));
        write_frame_stack(revival, revival_out);
        manifest.outputs["revival_stack"] = revival_out;
        manifest.extra["revival_config_digest"] = digest_hex(revival.header.digest);
        saturated = saturated || revival.saturation_warning;
    }
    manifest.timings_s["write"] = clock.lap();
    manifest.extra["saturation_warning"] = saturated;
    manifest.extra["frames"] = stack.header.n_frames;
    manifest.extra["threads"] = worker_count();
    if (saturated) std::cerr << "warning: more than 1% of pixels saturated in at least one frame\n";
    write_manifest(manifest, with_suffix(out, ".manifest.json"));
    std::cout << "wrote " << out << " (" << stack.header.n_frames << " frames, " << stack.header.rows << "x"
              << stack.header.cols << ")\n";
}

void cmd_analyze(const std::string& in, const std::string& conf, const std::string& out_arg,
                 const std::string& revival_in) {
    Stopwatch clock;
    const RunConfig cfg = config_or_default(conf);
    const fs::path dir = out_arg.empty() ? fs::path(cfg.output.report_dir) : fs::path(out_arg);
    if (dir.empty()) throw ConfigError("no report directory (-o or output.report_dir)");

    const FrameStack stack = read_frame_stack(in);
    std::optional<FrameStack> revival;
    if (!revival_in.empty()) revival = read_frame_stack(revival_in);
    if (stack.header.digest != config_digest(cfg.experiment))
        std::cerr << "note: stack digest differs from the config digest; analysis uses the config's spectral model\n";

    RunManifest manifest;
    manifest.command = "analyze";
    manifest.config_digest = digest_hex(config_digest(cfg.experiment));
    manifest.extra["stack_digest"] = digest_hex(stack.header.digest);
    manifest.timings_s["read"] = clock.lap();

    const StackAnalysis a = analyze_stack(stack, revival ? &*revival : nullptr, cfg);
    manifest.timings_s["analyze"] = clock.lap();

    fs::create_directories(dir);
    write_file_atomic(dir / "report.json", report_to_json(a.report).dump(2) + "\n");
    write_file_atomic(dir / "spectra.svg", spectra_svg(stack, a.primary));
    write_file_atomic(dir / "iref.svg", reference_series_svg(a.primary, stack.header.fps));
    manifest.outputs = {{"report", (dir / "report.json").string()},
                        {"spectra_plot", (dir / "spectra.svg").string()},
                        {"iref_plot", (dir / "iref.svg").string()}};
    manifest.timings_s["write"] = clock.lap();
    write_manifest(manifest, dir / "manifest.json");

    const auto& r = a.report;
    std::cout << "label " << to_string(r.label) << "  contrast H " << r.primary.contrast_h << "%  V "
              << r.primary.contrast_v << "%";
    if (r.primary.delta_psi) std::cout << "  delta_psi " << *r.primary.delta_psi << " rad";
    std::cout << "\n";
}

void cmd_roundtrip(const std::string& conf, unsigned seeds) {
    const RunConfig cfg = config_or_default(conf);
    cfg.experiment.validate();
    std::vector<RoundtripResult> results;
    for (unsigned s = 0; s < seeds; ++s) results.push_back(run_roundtrip(cfg, s));
    std::cout << format_summary(results);
    for (const auto& r : results)
        if (!r.passed()) throw AssertionFailure("round trip failed");
}

void cmd_oracle(double perturb) {
    const auto results = run_oracles({perturb});
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%s %-42s %8.3fs  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
        ok = ok && r.pass;
    }
    if (!ok) throw AssertionFailure("oracle failure");
}

void cmd_import_csv(const std::string& dir, const std::string& conf, const std::string& out) {
    const RunConfig cfg = config_or_default(conf);
    const FrameStack stack = import_csv_stack(dir, cfg);
    write_frame_stack(stack, out);
    std::cout << "wrote " << out << " (" << stack.header.n_frames << " frames)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"su11: dual-polarization SU(1,1) Bell-state simulator and analyzer"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    auto* presets = app.add_subcommand("presets", "List the Bell-state presets and their plate angles");

    std::string tpl_preset = "PhiPlus", tpl_out;
    auto* tpl = app.add_subcommand("template", "Print a config with every default spelled out");
    tpl->add_option("-p,--preset", tpl_preset, "PhiPlus | PhiMinus | PsiPlus | custom");
    tpl->add_option("-o,--output", tpl_out, "Write to a file instead of stdout");

    std::string sim_conf, sim_out, sim_revival;
    auto* sim = app.add_subcommand("simulate", "Simulate a frame stack");
    sim->add_option("-c,--config", sim_conf, "Run config (YAML)")->required();
    sim->add_option("-o,--output", sim_out, "Output stack path (default output.stack)");
    sim->add_option("--revival-output", sim_revival, "Also simulate the SPDC-90 revival run to this path");

    std::string an_in, an_conf, an_out, an_revival;
    auto* an = app.add_subcommand("analyze", "Analyze a frame stack");
    an->add_option("-i,--input", an_in, "Frame stack")->required();
    an->add_option("-c,--config", an_conf, "Run config (YAML)")->required();
    an->add_option("-o,--output", an_out, "Report directory (default output.report_dir)");
    an->add_option("--revival", an_revival, "Revival-run stack (SPDC plate at 90 deg)");

    std::string rt_conf;
    unsigned rt_seeds = 1;
    auto* rt = app.add_subcommand("roundtrip", "Simulate and classify all three presets");
    rt->add_option("-c,--config", rt_conf, "Base run config (defaults if omitted)");
    rt->add_option("--seeds", rt_seeds, "Number of seed offsets to run")->check(CLI::PositiveNumber);

    double perturb = 0.0;
    auto* orc = app.add_subcommand("oracle", "Run the algebra, spectrum and estimator oracles");
    orc->add_option("--perturb", perturb, "Perturb the spectrum model (test hook)")->group("");

    std::string csv_dir, csv_conf, csv_out;
    auto* csv = app.add_subcommand("import-csv", "Convert frame_<t>_{H,V}.csv stripe files into a frame stack");
    csv->add_option("-d,--dir", csv_dir, "Directory with the CSV files")->required();
    csv->add_option("-c,--config", csv_conf, "Run config supplying geometry and calibration")->required();
    csv->add_option("-o,--output", csv_out, "Output stack path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*presets) cmd_presets();
        if (*tpl) cmd_template(tpl_preset, tpl_out);
        if (*sim) cmd_simulate(sim_conf, sim_out, sim_revival);
        if (*an) cmd_analyze(an_in, an_conf, an_out, an_revival);
        if (*rt) cmd_roundtrip(rt_conf, rt_seeds);
        if (*orc) cmd_oracle(perturb);
        if (*csv) cmd_import_csv(csv_dir, csv_conf, csv_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const AssertionFailure& e) {
        std::cerr << "assertion failed: " << e.what() << "\n";
        return kExitAssertion;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
