#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "freqbin/bessel.hpp"
#include "freqbin/biphoton.hpp"
#include "freqbin/cli.hpp"

namespace freqbin::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kTwoPiValue = 2.0 * std::numbers::pi;

// Shortest round-trip text for every number so reruns diff cleanly.
std::string num(double v) { return fmt::format("{}", v); }
std::string num(std::uint64_t v) { return fmt::format("{}", v); }
std::string num(int v) { return fmt::format("{}", v); }

class CsvFile {
public:
    CsvFile(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
        write_row(header);
    }

    void write_row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) text_ << ',';
            text_ << fields[i];
        }
        text_ << '\n';
    }

    void save() const {
        std::ofstream out(path_, std::ios::binary | std::ios::trunc);
        out << text_.str();
        out.close();
        if (!out) throw std::runtime_error("cannot write " + path_.string());
    }

private:
    fs::path path_;
    std::ostringstream text_;
};

struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";

    std::optional<double> amplitude;
    std::optional<int> max_order;
    std::optional<std::string> d_list;
    std::optional<int> points;
    std::optional<double> a_max;
    std::optional<double> delta;
    std::optional<double> a;
    std::optional<double> b;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<int> d;
    std::optional<double> duration;
    std::optional<int> restarts;
    std::optional<std::string> amplitudes;
    bool no_simulate = false;
};

struct RunContext {
    ScenarioConfig config;
    ExperimentSpec spec;
    fs::path out_dir;
    unsigned threads = 1;
    std::vector<std::string> outputs;
    std::vector<std::string> diagnostics;

    void save(const CsvFile& file, const std::string& name) {
        file.save();
        outputs.push_back(name);
    }
    fs::path path(const std::string& name) const { return out_dir / name; }
    ScanOptions scan_options() const {
        return {config.experiment.count_budget, config.seed, threads};
    }
};

ScenarioConfig load_config(const Overrides& o) {
    if (!o.config_path) return ScenarioConfig{};
    std::ifstream in(*o.config_path);
    if (!in) throw ConfigError("cannot open config '" + *o.config_path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", *o.config_path, e.what()));
    }
    return parse_config(doc);
}

void apply_overrides(const std::string& command, const Overrides& o, ScenarioConfig& c) {
    if (o.seed) c.seed = *o.seed;
    if (command == "spectrum") {
        if (o.amplitude) c.spectrum.amplitude = *o.amplitude;
        if (o.max_order) c.spectrum.max_order = *o.max_order;
    } else if (command == "scan-amplitude") {
        if (o.d_list) c.scan_amplitude.d = parse_d_list(*o.d_list);
        if (o.points) c.scan_amplitude.points = *o.points;
        if (o.a_max) c.scan_amplitude.a_max = *o.a_max;
        if (o.delta) c.scan_amplitude.delta = *o.delta;
    } else if (command == "scan-phase") {
        if (o.d_list) c.scan_phase.d = parse_d_list(*o.d_list);
        if (o.amplitude) c.scan_phase.amplitude = *o.amplitude;
        if (o.points) c.scan_phase.points = *o.points;
    } else if (command == "visibility") {
        if (o.a) c.visibility.a = *o.a;
        if (o.b) c.visibility.b = *o.b;
        if (o.points) c.visibility.points = *o.points;
        if (o.no_simulate) c.visibility.simulate = false;
    } else if (command == "bell-optimize") {
        if (o.amplitude) c.bell.amplitude = *o.amplitude;
        if (o.restarts) c.bell.restarts = *o.restarts;
        if (o.no_simulate) c.bell.simulate = false;
    } else if (command == "bell-scan") {
        if (o.amplitudes) {
            const auto grid = parse_range(*o.amplitudes);
            const auto first = o.amplitudes->find(':');
            const auto last = o.amplitudes->rfind(':');
            c.bell.scan_start = grid.front();
            c.bell.scan_stop = std::stod(o.amplitudes->substr(first + 1, last - first - 1));
            c.bell.scan_step = std::stod(o.amplitudes->substr(last + 1));
        }
        if (o.restarts) c.bell.restarts = *o.restarts;
        if (o.no_simulate) c.bell.simulate = false;
    } else if (command == "simulate") {
        if (o.a) c.simulate.a = *o.a;
        if (o.b) c.simulate.b = *o.b;
        if (o.alpha) c.simulate.alpha = *o.alpha;
        if (o.beta) c.simulate.beta = *o.beta;
        if (o.d) c.simulate.d = *o.d;
        if (o.duration) c.simulate.duration_s = *o.duration;
    }
}

json calibration_json(const ExperimentSpec& spec) {
    const RateModel peak = rate_model(spec, ModulatorSettings::off(), ModulatorSettings::off(), 0);
    return {{"pair_rate_scale", spec.source.pair_rate_scale},
            {"gate_rate_a_hz", spec.detector_a.gate_rate_hz},
            {"gate_rate_b_hz", spec.detector_b.gate_rate_hz},
            {"filter_order", filter_order(spec.filter_a)},
            {"max_coincidence_rate_hz", peak.true_coincidence_hz},
            {"accidental_per_bin_hz", peak.accidental_per_bin_hz},
            {"snr", peak.snr()}};
}

std::vector<std::string> scan_fields(const ScanRow& r) {
    return {num(r.d),         num(r.a),       num(r.b),       num(r.delta), num(r.q_analytic),
            num(r.q_tilde),   num(r.q_sigma), num(r.n_coinc), num(r.n_acc)};
}

const std::vector<std::string> kScanHeader{"d",       "a",       "b",       "delta", "q_analytic",
                                           "q_tilde", "q_sigma", "n_coinc", "n_acc"};

void write_scan(RunContext& ctx, const std::string& name, const std::vector<ScanRow>& rows) {
    CsvFile csv(ctx.path(name), kScanHeader);
    for (const auto& r : rows) csv.write_row(scan_fields(r));
    ctx.save(csv, name);
}

std::string optional_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

// ---- subcommands ----

void cmd_spectrum(RunContext& ctx) {
    const auto& s = ctx.config.spectrum;
    const auto lines = sideband_spectrum(ModulatorSettings(s.amplitude, 0.0), s.max_order);
    CsvFile csv(ctx.path("spectrum.csv"), {"order", "intensity"});
    double total = 0.0;
    for (const auto& line : lines) {
        csv.write_row({num(line.order), num(line.intensity)});
        total += line.intensity;
    }
    ctx.save(csv, "spectrum.csv");
    ctx.diagnostics.push_back(fmt::format("spectrum: captured intensity {}", total));
}

void cmd_scan_amplitude(RunContext& ctx) {
    const auto& s = ctx.config.scan_amplitude;
    const auto grid = linspace(s.a_min, s.a_max, s.points);
    write_scan(ctx, "scan_amplitude.csv",
               scan_amplitude(ctx.spec, s.d, grid, s.delta, ctx.scan_options()));

    CsvFile curve(ctx.path("scan_amplitude_curve.csv"), {"d", "x", "q_analytic"});
    const auto fine = linspace(s.a_min, s.a_max, s.curve_points);
    for (int d : s.d) {
        for (double a : fine) {
            const double q = coincidence_probability(ModulatorSettings(a, s.delta),
                                                     ModulatorSettings(a, 0.0), d);
            curve.write_row({num(d), num(a), num(q)});
        }
    }
    ctx.save(curve, "scan_amplitude_curve.csv");
}

void cmd_scan_phase(RunContext& ctx) {
    const auto& s = ctx.config.scan_phase;
    const auto grid = linspace(0.0, kTwoPiValue, s.points);
    write_scan(ctx, "scan_phase.csv",
               scan_phase(ctx.spec, s.d, s.amplitude, grid, ctx.scan_options()));

    CsvFile curve(ctx.path("scan_phase_curve.csv"), {"d", "x", "q_analytic"});
    const auto fine = linspace(0.0, kTwoPiValue, s.curve_points);
    for (int d : s.d) {
        for (double delta : fine) {
            const double q = coincidence_probability(ModulatorSettings(s.amplitude, delta),
                                                     ModulatorSettings(s.amplitude, 0.0), d);
            curve.write_row({num(d), num(delta), num(q)});
        }
    }
    ctx.save(curve, "scan_phase_curve.csv");
}

void cmd_visibility(RunContext& ctx) {
    const auto& v = ctx.config.visibility;
    const VisibilityResult analytic = visibility(v.a, v.b);
    for (const auto& msg : analytic.diagnostics) ctx.diagnostics.push_back(msg);

    std::optional<double> raw, subtracted;
    if (v.simulate) {
        const int d0[] = {0};
        const auto grid = linspace(0.0, kTwoPiValue, v.points);
        const auto rows = scan_phase(ctx.spec, d0, v.a, v.b, grid, ctx.scan_options());
        write_scan(ctx, "visibility_scan.csv", rows);
        const VisibilityEstimate est = estimate_visibility(rows);
        raw = est.raw;
        subtracted = est.subtracted;
    }

    CsvFile csv(ctx.path("visibility.csv"),
                {"a", "b", "visibility", "q_max", "q_min", "delta_at_min", "reaches_zero",
                 "visibility_raw", "visibility_subtracted"});
    csv.write_row({num(v.a), num(v.b), num(analytic.visibility), num(analytic.q_max),
                   num(analytic.q_min), num(analytic.delta_at_min),
                   analytic.reaches_zero ? "1" : "0", optional_num(raw),
                   optional_num(subtracted)});
    ctx.save(csv, "visibility.csv");
}

Tolerances tolerances_of(const BellCommandConfig& b) {
    return {b.tolerance_a_rel, b.tolerance_alpha, b.tolerance_beta};
}

BellSimulation simulation_of(const ScenarioConfig& c) {
    return {c.seed, c.bell.term_budget, c.bell.reference_budget};
}

std::vector<std::string> simulated_fields(const std::optional<BellResult>& sim) {
    if (!sim) return {"", "", ""};
    return {num(sim->s_value), num(sim->s_sigma), optional_num(sim->significance)};
}

void cmd_bell_optimize(RunContext& ctx) {
    const auto& b = ctx.config.bell;
    OptimizedBell best = optimize_phases(b.amplitude, b.restarts, ctx.config.seed);
    best.config.tolerances = tolerances_of(b);
    const WorstCase worst = worst_case_s(best.config);

    std::optional<BellResult> sim;
    if (b.simulate) sim = s_statistic_simulated(best.config, ctx.spec, simulation_of(ctx.config));

    CsvFile csv(ctx.path("bell_optimize.csv"),
                {"amplitude", "alpha1", "alpha2", "beta1", "beta2", "s_nominal", "s_worst",
                 "q11", "q12", "q21", "q22", "s_simulated", "s_sigma", "significance"});
    const auto ph = best.config.phases();
    std::vector<std::string> row{num(b.amplitude), num(ph[0]), num(ph[1]), num(ph[2]), num(ph[3]),
                                 num(best.result.s_value), num(worst.s_worst)};
    for (double t : best.result.terms) row.push_back(num(t));
    for (auto& f : simulated_fields(sim)) row.push_back(std::move(f));
    csv.write_row(row);
    ctx.save(csv, "bell_optimize.csv");
}

void cmd_bell_scan(RunContext& ctx) {
    const auto& b = ctx.config.bell;
    const auto amplitudes =
        parse_range(fmt::format("{}:{}:{}", b.scan_start, b.scan_stop, b.scan_step));
    BellScanOptions opts;
    opts.restarts = b.restarts;
    opts.seed = ctx.config.seed;
    opts.threads = ctx.threads;
    opts.tolerances = tolerances_of(b);
    if (b.simulate) opts.simulation = simulation_of(ctx.config);
    const auto rows = bell_scan(amplitudes, ctx.spec, opts);

    CsvFile csv(ctx.path("bell_scan.csv"),
                {"amplitude", "s_nominal", "s_worst", "alpha1", "alpha2", "beta1", "beta2",
                 "s_simulated", "s_sigma", "significance"});
    for (const auto& r : rows) {
        std::vector<std::string> row{num(r.amplitude), num(r.s_nominal), num(r.s_worst)};
        for (double p : r.phases) row.push_back(num(p));
        for (auto& f : simulated_fields(r.simulated)) row.push_back(std::move(f));
        csv.write_row(row);
    }
    ctx.save(csv, "bell_scan.csv");
}

void cmd_simulate(RunContext& ctx) {
    const auto& s = ctx.config.simulate;
    const ModulatorSettings alice(s.a, s.alpha);
    const ModulatorSettings bob(s.b, s.beta);
    const double budget_duration = duration_for_budget(ctx.spec, ctx.config.experiment.count_budget);
    const double duration = s.duration_s > 0 ? s.duration_s : budget_duration;

    const TdcHistogram reference =
        simulate_run(ctx.spec, ModulatorSettings::off(), ModulatorSettings::off(), 0,
                     budget_duration, derive_seed(ctx.config.seed, 0));
    const TdcHistogram run =
        simulate_run(ctx.spec, alice, bob, s.d, duration, derive_seed(ctx.config.seed, 1));

    CsvFile hist(ctx.path("simulate.csv"), {"bin", "time_ns", "counts"});
    for (std::size_t i = 0; i < run.counts.size(); ++i) {
        const double t = (static_cast<double>(i) - run.peak_index) * run.bin_width_ns;
        hist.write_row({num(static_cast<int>(i)), num(t), num(run.counts[i])});
    }
    ctx.save(hist, "simulate.csv");

    CsvFile summary(ctx.path("simulate_summary.csv"),
                    {"d", "a", "alpha", "b", "beta", "duration_s", "q_analytic", "q_tilde",
                     "q_sigma", "n_coinc", "n_acc", "snr"});
    std::vector<std::string> row{num(s.d), num(alice.amplitude()), num(alice.rf_phase()),
                                 num(bob.amplitude()), num(bob.rf_phase()), num(duration),
                                 num(coincidence_probability(alice, bob, s.d))};
    try {
        const RunResult r = estimate_q(run, reference);
        for (auto v : {r.q_tilde, r.q_sigma}) row.push_back(num(v));
        row.push_back(num(r.n_coinc));
        row.push_back(num(r.n_acc));
        row.push_back(num(r.snr));
    } catch (const DegenerateReferenceError& e) {
        ctx.diagnostics.push_back(e.what());
        row.insert(row.end(), {"", "", "", "", ""});
    }
    summary.write_row(row);
    ctx.save(summary, "simulate_summary.csv");
}

using Handler = void (*)(RunContext&);

struct CommandEntry {
    const char* name;
    const char* help;
    Handler handler;
};

constexpr CommandEntry kCommands[] = {
    {"spectrum", "Sideband intensities |J_p(a)|^2 of one modulator", cmd_spectrum},
    {"scan-amplitude", "Q(d) against a = b at fixed phase difference", cmd_scan_amplitude},
    {"scan-phase", "Q(d) against phase difference at fixed amplitude", cmd_scan_phase},
    {"visibility", "Two-photon fringe visibility, analytic and emulated", cmd_visibility},
    {"bell-optimize", "Phases maximising S at one amplitude", cmd_bell_optimize},
    {"bell-scan", "Optimised and worst-case S against amplitude", cmd_bell_scan},
    {"simulate", "One emulated TDC histogram", cmd_simulate},
};

void write_manifest(const RunContext& ctx, const std::string& command) {
    json manifest = {{"command", command},
                     {"schema_version", kSchemaVersion},
                     {"seed", ctx.config.seed},
                     {"config_hash", config_hash(ctx.config)},
                     {"config", to_json(ctx.config)},
                     {"calibration", calibration_json(ctx.spec)},
                     {"outputs", ctx.outputs},
                     {"diagnostics", ctx.diagnostics}};
    std::ofstream out(ctx.path("manifest.json"), std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
    out.close();
    if (!out) throw std::runtime_error("cannot write manifest.json");
}

}  // namespace

int run_command(int argc, const char* const* argv) {
    CLI::App app{"Frequency-bin entanglement model and emulated experiment"};
    app.fallthrough();
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config_path, "Scenario JSON")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Base seed");
    app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();

    for (const auto& entry : kCommands) app.add_subcommand(entry.name, entry.help);

    auto* spectrum = app.get_subcommand("spectrum");
    spectrum->add_option("--amplitude", o.amplitude);
    spectrum->add_option("--max-order", o.max_order);

    auto* scan_a = app.get_subcommand("scan-amplitude");
    scan_a->add_option("--d", o.d_list, "e.g. 0..5 or 0,2,4");
    scan_a->add_option("--points", o.points);
    scan_a->add_option("--a-max", o.a_max);
    scan_a->add_option("--delta", o.delta);

    auto* scan_p = app.get_subcommand("scan-phase");
    scan_p->add_option("--d", o.d_list, "e.g. 0..5 or 0,2,4");
    scan_p->add_option("--amplitude", o.amplitude);
    scan_p->add_option("--points", o.points);

    auto* vis = app.get_subcommand("visibility");
    vis->add_option("--a", o.a);
    vis->add_option("--b", o.b);
    vis->add_option("--points", o.points);
    vis->add_flag("--no-simulate", o.no_simulate);

    auto* bopt = app.get_subcommand("bell-optimize");
    bopt->add_option("--amplitude", o.amplitude);
    bopt->add_option("--restarts", o.restarts);
    bopt->add_flag("--no-simulate", o.no_simulate);

    auto* bscan = app.get_subcommand("bell-scan");
    bscan->add_option("--amplitudes", o.amplitudes, "start:stop:step");
    bscan->add_option("--restarts", o.restarts);
    bscan->add_flag("--no-simulate", o.no_simulate);

    auto* sim = app.get_subcommand("simulate");
    sim->add_option("--a", o.a);
    sim->add_option("--b", o.b);
    sim->add_option("--alpha", o.alpha);
    sim->add_option("--beta", o.beta);
    sim->add_option("--d", o.d);
    sim->add_option("--duration", o.duration, "seconds; 0 uses the count budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kConfigFailure;
    }

    const CommandEntry* chosen = nullptr;
    for (const auto& entry : kCommands) {
        if (app.got_subcommand(entry.name)) chosen = &entry;
    }

    RunContext ctx;
    try {
        ctx.config = load_config(o);
        apply_overrides(chosen->name, o, ctx.config);
        validate(ctx.config);
        ctx.spec = build_experiment(ctx.config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigFailure;
    }

    try {
        ctx.out_dir = o.out_dir;
        fs::create_directories(ctx.out_dir);
        ctx.threads = thread_budget();
        chosen->handler(ctx);
        write_manifest(ctx, chosen->name);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    std::cout << fmt::format("{}: wrote {} file(s) to {} (seed {}, config {})\n", chosen->name,
                             ctx.outputs.size() + 1, ctx.out_dir.string(), ctx.config.seed,
                             config_hash(ctx.config));
    return kSuccess;
}

}  // namespace freqbin::cli
