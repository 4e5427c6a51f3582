#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <thread>

#include <fmt/core.h>

#include "freqbin/bessel.hpp"
#include "freqbin/cli.hpp"

namespace freqbin::cli {
namespace {

using nlohmann::json;

// Reads known keys from one JSON object and rejects everything else.
class ObjectReader {
public:
    ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
        if (!object_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        allowed_.insert(key);
        if (!object_.contains(key)) return;
        try {
            out = object_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(fmt::format("{}.{}: {}", path_, key, e.what()));
        }
    }

    const json* child(const char* key) {
        allowed_.insert(key);
        return object_.contains(key) ? &object_.at(key) : nullptr;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& item : object_.items()) {
            if (!allowed_.count(item.key())) {
                throw ConfigError(fmt::format("{}: unknown key '{}'", path_, item.key()));
            }
        }
    }

private:
    const json& object_;
    std::string path_;
    std::set<std::string, std::less<>> allowed_;
};

void read_filter(ObjectReader& parent, const char* key, FilterConfig& f) {
    const json* node = parent.child(key);
    if (!node) return;
    ObjectReader r(*node, parent.path(key));
    r.read("fwhm_hz", f.fwhm_hz);
    r.read("isolation_db", f.isolation_db);
    r.read("isolation_detuning_hz", f.isolation_detuning_hz);
    r.read("insertion_loss_db", f.insertion_loss_db);
    r.finish();
}

void read_detector(ObjectReader& parent, const char* key, DetectorConfig& d) {
    const json* node = parent.child(key);
    if (!node) return;
    ObjectReader r(*node, parent.path(key));
    r.read("efficiency", d.efficiency);
    r.read("dark_rate_per_ns", d.dark_rate_per_ns);
    r.read("gate_width_ns", d.gate_width_ns);
    r.read("gate_rate_hz", d.gate_rate_hz);
    r.finish();
}

json filter_json(const FilterConfig& f) {
    return {{"fwhm_hz", f.fwhm_hz},
            {"isolation_db", f.isolation_db},
            {"isolation_detuning_hz", f.isolation_detuning_hz},
            {"insertion_loss_db", f.insertion_loss_db}};
}

json detector_json(const DetectorConfig& d) {
    return {{"efficiency", d.efficiency},
            {"dark_rate_per_ns", d.dark_rate_per_ns},
            {"gate_width_ns", d.gate_width_ns},
            {"gate_rate_hz", d.gate_rate_hz}};
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

void require_amplitude(double a, const char* what) {
    require(std::isfinite(a) && a >= 0 && a <= kBesselMaxArgument,
            fmt::format("{} must lie in [0, {}]", what, kBesselMaxArgument));
}

}  // namespace

ScenarioConfig parse_config(const json& doc) {
    ScenarioConfig c;
    ObjectReader root(doc, "config");
    root.read("schema_version", c.schema_version);
    if (c.schema_version != kSchemaVersion) {
        throw ConfigError(fmt::format("config: unsupported schema_version {} (expected {})",
                                      c.schema_version, kSchemaVersion));
    }
    root.read("seed", c.seed);

    if (const json* node = root.child("grid")) {
        ObjectReader r(*node, "config.grid");
        r.read("center_hz", c.grid.center_hz);
        r.read("spacing_hz", c.grid.spacing_hz);
        r.read("bin_width_hz", c.grid.bin_width_hz);
        r.read("offset_hz", c.grid.offset_hz);
        r.finish();
    }
    if (const json* node = root.child("experiment")) {
        ObjectReader r(*node, "config.experiment");
        auto& e = c.experiment;
        read_filter(r, "filter", e.filter);
        read_detector(r, "detector_a", e.detector_a);
        read_detector(r, "detector_b", e.detector_b);
        r.read("modulator_loss_db", e.modulator_loss_db);
        r.read("split_probability", e.split_probability);
        r.read("source_bandwidth_hz", e.source_bandwidth_hz);
        r.read("pair_rate_scale", e.pair_rate_scale);
        r.read("calibrate", e.calibrate);
        r.read("max_coincidence_rate_hz", e.max_coincidence_rate_hz);
        r.read("target_snr", e.target_snr);
        r.read("bob_filter_offset_hz", e.bob_filter_offset_hz);
        r.read("tdc_bin_width_ns", e.tdc_bin_width_ns);
        r.read("tdc_bins", e.tdc_bins);
        r.read("tdc_peak_index", e.tdc_peak_index);
        r.read("count_budget", e.count_budget);
        r.finish();
    }
    if (const json* node = root.child("spectrum")) {
        ObjectReader r(*node, "config.spectrum");
        r.read("amplitude", c.spectrum.amplitude);
        r.read("max_order", c.spectrum.max_order);
        r.finish();
    }
    if (const json* node = root.child("scan_amplitude")) {
        ObjectReader r(*node, "config.scan_amplitude");
        auto& s = c.scan_amplitude;
        r.read("d", s.d);
        r.read("a_min", s.a_min);
        r.read("a_max", s.a_max);
        r.read("points", s.points);
        r.read("delta", s.delta);
        r.read("curve_points", s.curve_points);
        r.finish();
    }
    if (const json* node = root.child("scan_phase")) {
        ObjectReader r(*node, "config.scan_phase");
        auto& s = c.scan_phase;
        r.read("d", s.d);
        r.read("amplitude", s.amplitude);
        r.read("points", s.points);
        r.read("curve_points", s.curve_points);
        r.finish();
    }
    if (const json* node = root.child("visibility")) {
        ObjectReader r(*node, "config.visibility");
        r.read("a", c.visibility.a);
        r.read("b", c.visibility.b);
        r.read("simulate", c.visibility.simulate);
        r.read("points", c.visibility.points);
        r.finish();
    }
    if (const json* node = root.child("bell")) {
        ObjectReader r(*node, "config.bell");
        auto& b = c.bell;
        r.read("amplitude", b.amplitude);
        r.read("restarts", b.restarts);
        r.read("scan_start", b.scan_start);
        r.read("scan_stop", b.scan_stop);
        r.read("scan_step", b.scan_step);
        r.read("tolerance_a_rel", b.tolerance_a_rel);
        r.read("tolerance_alpha", b.tolerance_alpha);
        r.read("tolerance_beta", b.tolerance_beta);
        r.read("simulate", b.simulate);
        r.read("term_budget", b.term_budget);
        r.read("reference_budget", b.reference_budget);
        r.finish();
    }
    if (const json* node = root.child("simulate")) {
        ObjectReader r(*node, "config.simulate");
        auto& s = c.simulate;
        r.read("a", s.a);
        r.read("alpha", s.alpha);
        r.read("b", s.b);
        r.read("beta", s.beta);
        r.read("d", s.d);
        r.read("duration_s", s.duration_s);
        r.finish();
    }
    root.finish();
    return c;
}

json to_json(const ScenarioConfig& c) {
    const auto& e = c.experiment;
    return {
        {"schema_version", c.schema_version},
        {"seed", c.seed},
        {"grid",
         {{"center_hz", c.grid.center_hz},
          {"spacing_hz", c.grid.spacing_hz},
          {"bin_width_hz", c.grid.bin_width_hz},
          {"offset_hz", c.grid.offset_hz}}},
        {"experiment",
         {{"filter", filter_json(e.filter)},
          {"detector_a", detector_json(e.detector_a)},
          {"detector_b", detector_json(e.detector_b)},
          {"modulator_loss_db", e.modulator_loss_db},
          {"split_probability", e.split_probability},
          {"source_bandwidth_hz", e.source_bandwidth_hz},
          {"pair_rate_scale", e.pair_rate_scale},
          {"calibrate", e.calibrate},
          {"max_coincidence_rate_hz", e.max_coincidence_rate_hz},
          {"target_snr", e.target_snr},
          {"bob_filter_offset_hz", e.bob_filter_offset_hz},
          {"tdc_bin_width_ns", e.tdc_bin_width_ns},
          {"tdc_bins", e.tdc_bins},
          {"tdc_peak_index", e.tdc_peak_index},
          {"count_budget", e.count_budget}}},
        {"spectrum", {{"amplitude", c.spectrum.amplitude}, {"max_order", c.spectrum.max_order}}},
        {"scan_amplitude",
         {{"d", c.scan_amplitude.d},
          {"a_min", c.scan_amplitude.a_min},
          {"a_max", c.scan_amplitude.a_max},
          {"points", c.scan_amplitude.points},
          {"delta", c.scan_amplitude.delta},
          {"curve_points", c.scan_amplitude.curve_points}}},
        {"scan_phase",
         {{"d", c.scan_phase.d},
          {"amplitude", c.scan_phase.amplitude},
          {"points", c.scan_phase.points},
          {"curve_points", c.scan_phase.curve_points}}},
        {"visibility",
         {{"a", c.visibility.a},
          {"b", c.visibility.b},
          {"simulate", c.visibility.simulate},
          {"points", c.visibility.points}}},
        {"bell",
         {{"amplitude", c.bell.amplitude},
          {"restarts", c.bell.restarts},
          {"scan_start", c.bell.scan_start},
          {"scan_stop", c.bell.scan_stop},
          {"scan_step", c.bell.scan_step},
          {"tolerance_a_rel", c.bell.tolerance_a_rel},
          {"tolerance_alpha", c.bell.tolerance_alpha},
          {"tolerance_beta", c.bell.tolerance_beta},
          {"simulate", c.bell.simulate},
          {"term_budget", c.bell.term_budget},
          {"reference_budget", c.bell.reference_budget}}},
        {"simulate",
         {{"a", c.simulate.a},
          {"alpha", c.simulate.alpha},
          {"b", c.simulate.b},
          {"beta", c.simulate.beta},
          {"d", c.simulate.d},
          {"duration_s", c.simulate.duration_s}}},
    };
}

void validate(const ScenarioConfig& c) {
    require_amplitude(c.spectrum.amplitude, "spectrum.amplitude");
    require(c.spectrum.max_order >= 1, "spectrum.max_order must be >= 1");

    const auto& sa = c.scan_amplitude;
    require(!sa.d.empty(), "scan_amplitude.d must not be empty");
    require_amplitude(sa.a_min, "scan_amplitude.a_min");
    require_amplitude(sa.a_max, "scan_amplitude.a_max");
    require(sa.a_max >= sa.a_min, "scan_amplitude.a_max must be >= a_min");
    require(sa.points >= 1 && sa.curve_points >= 2, "scan_amplitude grids need points");

    const auto& sp = c.scan_phase;
    require(!sp.d.empty(), "scan_phase.d must not be empty");
    require_amplitude(sp.amplitude, "scan_phase.amplitude");
    require(sp.points >= 2 && sp.curve_points >= 2, "scan_phase grids need >= 2 points");

    require_amplitude(c.visibility.a, "visibility.a");
    require_amplitude(c.visibility.b, "visibility.b");
    require(c.visibility.a > 0 && c.visibility.b > 0, "visibility amplitudes must be positive");
    require(c.visibility.points >= 2, "visibility.points must be >= 2");

    const auto& b = c.bell;
    require_amplitude(b.amplitude, "bell.amplitude");
    require(b.amplitude > 0, "bell.amplitude must be positive");
    require(b.restarts >= 1, "bell.restarts must be >= 1");
    require(b.scan_step > 0 && b.scan_start > 0 && b.scan_stop >= b.scan_start,
            "bell scan needs 0 < start <= stop and step > 0");
    require_amplitude(b.scan_stop, "bell.scan_stop");
    require(b.tolerance_a_rel >= 0 && b.tolerance_alpha >= 0 && b.tolerance_beta >= 0,
            "bell tolerances must be non-negative");
    require(b.term_budget > 0 && b.reference_budget > 0, "bell budgets must be positive");

    require_amplitude(std::abs(c.simulate.a), "simulate.a");
    require_amplitude(std::abs(c.simulate.b), "simulate.b");
    require(c.simulate.duration_s >= 0, "simulate.duration_s must be >= 0");
    require(c.experiment.count_budget > 0, "experiment.count_budget must be positive");
}

ExperimentSpec build_experiment(const ScenarioConfig& c) {
    const auto& e = c.experiment;
    ExperimentSpec spec;
    try {
        spec.grid = FrequencyGrid(c.grid.center_hz, c.grid.spacing_hz, c.grid.bin_width_hz,
                                  c.grid.offset_hz);
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("grid: ") + err.what());
    }
    spec.source = SourceSpec::flat(e.source_bandwidth_hz, e.pair_rate_scale);
    auto to_filter = [](const FilterConfig& f) {
        FilterSpec s;
        s.fwhm_hz = f.fwhm_hz;
        s.isolation_db = f.isolation_db;
        s.isolation_detuning_hz = f.isolation_detuning_hz;
        s.insertion_loss_db = f.insertion_loss_db;
        return s;
    };
    auto to_detector = [](const DetectorConfig& d) {
        return DetectorSpec{d.efficiency, d.dark_rate_per_ns, d.gate_width_ns, d.gate_rate_hz};
    };
    spec.filter_a = to_filter(e.filter);
    spec.filter_b = to_filter(e.filter);
    spec.detector_a = to_detector(e.detector_a);
    spec.detector_b = to_detector(e.detector_b);
    spec.tdc = TdcSpec{e.tdc_bin_width_ns, e.tdc_bins, e.tdc_peak_index};
    spec.modulator_loss_db = e.modulator_loss_db;
    spec.split_probability = e.split_probability;
    spec.bob_filter_offset_hz = e.bob_filter_offset_hz;
    spec.validate();
    if (e.calibrate) spec = calibrate(spec, {e.max_coincidence_rate_hz, e.target_snr});
    return spec;
}

std::string config_hash(const ScenarioConfig& config) {
    const std::string text = to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::vector<int> parse_d_list(const std::string& text) {
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw ConfigError("bad d list '" + text + "'");
        return v;
    };
    std::vector<int> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const int lo = to_int(text.substr(0, dots));
        const int hi = to_int(text.substr(dots + 2));
        if (hi < lo) throw ConfigError("bad d range '" + text + "'");
        for (int d = lo; d <= hi; ++d) out.push_back(d);
        return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        out.push_back(to_int(text.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<double> parse_range(const std::string& text) {
    double start = 0, stop = 0, step = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &start, &stop, &step, &tail) != 3 ||
        !(step > 0) || stop < start) {
        throw ConfigError("bad range '" + text + "' (expected start:stop:step)");
    }
    const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(start + i * step);
    return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw std::invalid_argument("linspace: n must be >= 1");
    if (n == 1) return {lo};
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
    out.back() = hi;
    return out;
}

unsigned thread_budget() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FREQBIN_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

}  // namespace freqbin::cli
