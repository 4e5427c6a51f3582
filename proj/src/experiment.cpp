#include "freqbin/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/core.h>

#include "freqbin/parallel.hpp"

namespace freqbin {
namespace {

constexpr int kMaxFilterOrder = 8;
constexpr int kMinOffPeakBins = 50;

double db_to_transmission(double db) { return std::pow(10.0, -db / 10.0); }

double super_gaussian(double detuning_hz, double fwhm_hz, int order) {
    const double x = 2.0 * detuning_hz / fwhm_hz;
    return std::exp(-std::numbers::ln2 * std::pow(x * x, order));
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t draw_poisson(std::mt19937_64& rng, double mean) {
    if (!(mean > 0)) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(rng);
}

struct ScanPoint {
    int d;
    ModulatorSettings alice;
    ModulatorSettings bob;
};

std::vector<ScanRow> run_scan(const ExperimentSpec& spec, const std::vector<ScanPoint>& points,
                              const ScanOptions& options) {
    const double duration = duration_for_budget(spec, options.count_budget);
    const TdcHistogram reference =
        simulate_run(spec, ModulatorSettings::off(), ModulatorSettings::off(), 0, duration,
                     derive_seed(options.seed, 0));
    std::vector<ScanRow> rows(points.size());
    parallel_for(points.size(), options.threads, [&](std::size_t i) {
        const auto& pt = points[i];
        const auto run = simulate_run(spec, pt.alice, pt.bob, pt.d, duration,
                                      derive_seed(options.seed, i + 1));
        const auto est = estimate_q(run, reference);
        rows[i] = ScanRow{pt.d,
                          pt.alice.amplitude(),
                          pt.bob.amplitude(),
                          wrap_phase(pt.alice.rf_phase() - pt.bob.rf_phase()),
                          coincidence_probability(pt.alice, pt.bob, pt.d),
                          est.q_tilde,
                          est.q_sigma,
                          est.n_coinc,
                          est.n_acc};
    });
    return rows;
}

}  // namespace

void FilterSpec::validate() const {
    if (!(fwhm_hz > 0)) throw ConfigError("filter: fwhm must be positive");
    if (!(isolation_db >= 0)) throw ConfigError("filter: isolation must be non-negative");
    if (!(insertion_loss_db >= 0)) throw ConfigError("filter: insertion loss must be >= 0 dB");
    if (!(isolation_detuning_hz > 0)) throw ConfigError("filter: isolation detuning must be > 0");
}

int filter_order(const FilterSpec& spec) {
    spec.validate();
    const double limit = db_to_transmission(spec.isolation_db);
    for (int n = 1; n <= kMaxFilterOrder; ++n) {
        if (super_gaussian(spec.isolation_detuning_hz, spec.fwhm_hz, n) <= limit) return n;
    }
    throw ConfigError(fmt::format(
        "filter: no super-Gaussian order <= {} gives {} dB isolation at {} Hz with FWHM {} Hz",
        kMaxFilterOrder, spec.isolation_db, spec.isolation_detuning_hz, spec.fwhm_hz));
}

double filter_transmission(const FilterSpec& spec, double detuning_hz) {
    const int n = filter_order(spec);
    return db_to_transmission(spec.insertion_loss_db) *
           super_gaussian(detuning_hz - spec.center_detuning_hz, spec.fwhm_hz, n);
}

void DetectorSpec::validate() const {
    if (!(efficiency >= 0 && efficiency <= 1)) throw ConfigError("detector: efficiency not in [0,1]");
    if (!(dark_rate_per_ns >= 0)) throw ConfigError("detector: dark rate must be >= 0");
    if (!(gate_width_ns > 0)) throw ConfigError("detector: gate width must be positive");
    if (!(gate_rate_hz > 0)) throw ConfigError("detector: gate rate must be positive");
    if (duty_cycle() > 1.0) throw ConfigError("detector: gates overlap (duty cycle > 1)");
}

SourceSpec SourceSpec::flat(double bandwidth_hz, double pair_rate_scale) {
    if (!(bandwidth_hz > 0)) throw ConfigError("source: bandwidth must be positive");
    const double half = 0.5 * bandwidth_hz;
    return {[half](double nu) { return std::abs(nu) <= half ? 1.0 : 0.0; }, pair_rate_scale,
            bandwidth_hz};
}

double bin_pair_rate(const SourceSpec& source, const FrequencyGrid& grid) {
    const double lo = grid.offset_hz() - 0.5 * grid.bin_width_hz();
    const double hi = grid.offset_hz() + 0.5 * grid.bin_width_hz();
    const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        source.spectral_density, lo, hi, 15, 1e-12);
    return source.pair_rate_scale * integral;
}

bool slowly_varying(const SourceSpec& source, const FrequencyGrid& grid, double rel_tol,
                    int window_bins) {
    const double step = grid.spacing_hz();
    for (int k = -window_bins; k < window_bins; ++k) {
        const double f0 = source.spectral_density(grid.offset_hz() + k * step);
        const double f1 = source.spectral_density(grid.offset_hz() + (k + 1) * step);
        if (f0 < 0 || f1 < 0) return false;
        const double scale = std::max(f0, f1);
        if (scale > 0 && std::abs(f1 - f0) > rel_tol * scale) return false;
    }
    return true;
}

void TdcSpec::validate() const {
    if (!(bin_width_ns > 0)) throw ConfigError("tdc: bin width must be positive");
    if (bins - 1 < kMinOffPeakBins) {
        throw ConfigError(fmt::format("tdc: need at least {} off-peak bins", kMinOffPeakBins));
    }
    if (peak_index < 0 || peak_index >= bins) throw ConfigError("tdc: peak index out of range");
}

void ExperimentSpec::validate() const {
    filter_a.validate();
    filter_b.validate();
    filter_order(filter_a);
    filter_order(filter_b);
    detector_a.validate();
    detector_b.validate();
    tdc.validate();
    if (!source.spectral_density) throw ConfigError("source: missing spectral density");
    if (!(source.pair_rate_scale >= 0)) throw ConfigError("source: pair rate scale must be >= 0");
    if (!(modulator_loss_db >= 0)) throw ConfigError("modulator loss must be >= 0 dB");
    if (!(split_probability > 0 && split_probability <= 1)) {
        throw ConfigError("split probability must be in (0, 1]");
    }
}

ExperimentSpec ExperimentSpec::reference() { return calibrate(ExperimentSpec{}); }

RateModel rate_model(const ExperimentSpec& spec, const ModulatorSettings& alice,
                     const ModulatorSettings& bob, int d) {
    const double pair_rate = bin_pair_rate(spec.source, spec.grid);
    const double t_mod = db_to_transmission(spec.modulator_loss_db);
    const double spacing = spec.grid.spacing_hz();

    FilterSpec bob_filter = spec.filter_b;
    bob_filter.center_detuning_hz = d * spacing + spec.bob_filter_offset_hz;
    const double t_a = filter_transmission(spec.filter_a, spec.grid.offset_hz());

    // Pairs reach Bob at -offset + k * spacing with weight Q(k).
    const int reach = std::max(std::abs(d) + 4, truncation_order(alice.amplitude(), bob.amplitude()));
    const auto dist = distribution(alice, bob, reach);
    double weighted = 0.0;
    for (const auto& [k, c] : dist.amplitudes()) {
        weighted += std::norm(c) *
                    filter_transmission(bob_filter, -spec.grid.offset_hz() + k * spacing);
    }

    const auto& da = spec.detector_a;
    const auto& db = spec.detector_b;
    const double duty = std::min(da.duty_cycle(), db.duty_cycle());

    RateModel m;
    m.true_coincidence_hz = pair_rate * spec.split_probability * da.efficiency * db.efficiency *
                            t_mod * t_mod * t_a * weighted * duty;
    const double peak_a = filter_transmission(spec.filter_a, spec.filter_a.center_detuning_hz);
    const double peak_b = filter_transmission(bob_filter, bob_filter.center_detuning_hz);
    m.singles_a_per_ns = da.efficiency * t_mod * peak_a * pair_rate * 1e-9 + da.dark_rate_per_ns;
    m.singles_b_per_ns = db.efficiency * t_mod * peak_b * pair_rate * 1e-9 + db.dark_rate_per_ns;
    m.accidental_per_bin_hz =
        m.singles_a_per_ns * m.singles_b_per_ns * spec.tdc.bin_width_ns * duty * 1e9;
    return m;
}

ExperimentSpec calibrate(ExperimentSpec spec, const CalibrationTargets& targets) {
    spec.validate();
    if (!(targets.max_coincidence_rate_hz > 0 && targets.snr > 0)) {
        throw ConfigError("calibration targets must be positive");
    }
    const auto off = ModulatorSettings::off();
    // Sets both gate rates to `rate`, rescales the source to the target
    // coincidence rate, and returns the resulting spec.
    auto with_gate_rate = [&](double rate) {
        ExperimentSpec s = spec;
        s.detector_a.gate_rate_hz = rate;
        s.detector_b.gate_rate_hz = rate;
        s.source.pair_rate_scale = 1.0;
        const double unit = rate_model(s, off, off, 0).true_coincidence_hz;
        if (!(unit > 0)) throw ConfigError("calibration: source yields no coincidences");
        s.source.pair_rate_scale = targets.max_coincidence_rate_hz / unit;
        return s;
    };
    auto snr_at = [&](double rate) { return rate_model(with_gate_rate(rate), off, off, 0).snr(); };

    const double max_rate =
        1e9 / std::max(spec.detector_a.gate_width_ns, spec.detector_b.gate_width_ns);
    constexpr int kScan = 240;
    double best_rate = max_rate;
    double best_snr = -1.0;
    for (int i = 0; i <= kScan; ++i) {
        const double rate = std::exp(std::log(1e2) + (std::log(max_rate) - std::log(1e2)) * i / kScan);
        const double snr = snr_at(rate);
        if (snr > best_snr) {
            best_snr = snr;
            best_rate = rate;
        }
    }
    if (best_snr < targets.snr) {
        throw ConfigError(fmt::format("calibration: SNR target {} unreachable (best {:.2f})",
                                      targets.snr, best_snr));
    }
    if (snr_at(max_rate) >= targets.snr) return with_gate_rate(max_rate);

    std::uintmax_t iterations = 200;
    auto f = [&](double log_rate) { return snr_at(std::exp(log_rate)) - targets.snr; };
    const auto [lo, hi] = boost::math::tools::toms748_solve(
        f, std::log(best_rate), std::log(max_rate), boost::math::tools::eps_tolerance<double>(48),
        iterations);
    return with_gate_rate(std::exp(0.5 * (lo + hi)));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

TdcHistogram simulate_run(const ExperimentSpec& spec, const ModulatorSettings& alice,
                          const ModulatorSettings& bob, int d, double duration_s,
                          std::uint64_t seed) {
    if (!(duration_s > 0)) throw std::invalid_argument("simulate_run: duration must be positive");
    spec.tdc.validate();
    const RateModel rates = rate_model(spec, alice, bob, d);

    TdcHistogram hist;
    hist.bin_width_ns = spec.tdc.bin_width_ns;
    hist.peak_index = spec.tdc.peak_index;
    hist.duration_s = duration_s;
    hist.counts.assign(static_cast<std::size_t>(spec.tdc.bins), 0);

    std::mt19937_64 rng(seed);
    const std::uint64_t true_counts = draw_poisson(rng, rates.true_coincidence_hz * duration_s);
    const double background_mean = rates.accidental_per_bin_hz * duration_s;
    for (auto& c : hist.counts) c = draw_poisson(rng, background_mean);
    hist.counts[hist.peak_index] += true_counts;
    return hist;
}

RunResult estimate_q(const TdcHistogram& run, const TdcHistogram& reference) {
    if (run.bin_width_ns != reference.bin_width_ns || run.counts.size() != reference.counts.size() ||
        run.peak_index != reference.peak_index) {
        throw std::invalid_argument("estimate_q: histograms use different TDC layouts");
    }
    const auto bins = static_cast<int>(run.counts.size());
    if (run.peak_index < 0 || run.peak_index >= bins) {
        throw std::invalid_argument("estimate_q: peak index out of range");
    }
    const int off_peak = bins - 1;
    if (off_peak < kMinOffPeakBins) {
        throw std::invalid_argument("estimate_q: too few off-peak bins for a background estimate");
    }

    struct Peak {
        double total;
        double background;
    };
    auto peak_of = [&](const TdcHistogram& h) {
        double off = 0.0;
        for (int i = 0; i < bins; ++i) {
            if (i != h.peak_index) off += static_cast<double>(h.counts[i]);
        }
        return Peak{static_cast<double>(h.counts[h.peak_index]), off / off_peak};
    };
    const Peak num = peak_of(run);
    const Peak den = peak_of(reference);

    if (!(run.duration_s > 0 && reference.duration_s > 0)) {
        throw std::invalid_argument("estimate_q: histograms need positive durations");
    }
    // Rates are compared, so runs of unequal length normalise correctly.
    const double scale = reference.duration_s / run.duration_s;
    const double n = num.total - num.background;
    const double r = den.total - den.background;
    if (!(r > 0)) {
        throw DegenerateReferenceError(
            "estimate_q: reference has no coincidences above background");
    }
    const double var_n = num.total + num.background / off_peak;
    const double var_r = den.total + den.background / off_peak;

    RunResult result;
    result.n_coinc = run.counts[run.peak_index];
    result.n_acc = num.background;
    result.q_tilde = scale * n / r;
    result.q_sigma = scale * std::sqrt(var_n / (r * r) + n * n * var_r / (r * r * r * r));
    result.snr = num.background > 0 ? n / num.background
                                     : std::numeric_limits<double>::infinity();
    return result;
}

double duration_for_budget(const ExperimentSpec& spec, double count_budget) {
    if (!(count_budget > 0)) throw std::invalid_argument("count budget must be positive");
    const auto off = ModulatorSettings::off();
    const double rate = rate_model(spec, off, off, 0).true_coincidence_hz;
    if (!(rate > 0)) throw ConfigError("experiment yields no coincidences at the reference point");
    return count_budget / rate;
}

std::vector<ScanRow> scan_amplitude(const ExperimentSpec& spec, std::span<const int> d_list,
                                    std::span<const double> a_grid, double delta,
                                    const ScanOptions& options) {
    if (d_list.empty() || a_grid.empty()) throw std::invalid_argument("scan_amplitude: empty grid");
    std::vector<ScanPoint> points;
    for (int d : d_list) {
        for (double a : a_grid) points.push_back({d, ModulatorSettings(a, delta), ModulatorSettings(a, 0.0)});
    }
    return run_scan(spec, points, options);
}

std::vector<ScanRow> scan_phase(const ExperimentSpec& spec, std::span<const int> d_list,
                                double amplitude_a, double amplitude_b,
                                std::span<const double> delta_grid, const ScanOptions& options) {
    if (d_list.empty() || delta_grid.empty()) throw std::invalid_argument("scan_phase: empty grid");
    std::vector<ScanPoint> points;
    for (int d : d_list) {
        for (double delta : delta_grid) {
            points.push_back(
                {d, ModulatorSettings(amplitude_a, delta), ModulatorSettings(amplitude_b, 0.0)});
        }
    }
    return run_scan(spec, points, options);
}

std::vector<ScanRow> scan_phase(const ExperimentSpec& spec, std::span<const int> d_list,
                                double amplitude, std::span<const double> delta_grid,
                                const ScanOptions& options) {
    return scan_phase(spec, d_list, amplitude, amplitude, delta_grid, options);
}

VisibilityEstimate estimate_visibility(std::span<const ScanRow> rows) {
    if (rows.empty()) throw std::invalid_argument("estimate_visibility: no rows");
    const auto [raw_min, raw_max] = std::minmax_element(
        rows.begin(), rows.end(), [](const ScanRow& x, const ScanRow& y) { return x.n_coinc < y.n_coinc; });
    const auto [q_min, q_max] = std::minmax_element(
        rows.begin(), rows.end(), [](const ScanRow& x, const ScanRow& y) { return x.q_tilde < y.q_tilde; });
    VisibilityEstimate v;
    const double hi = static_cast<double>(raw_max->n_coinc);
    const double lo = static_cast<double>(raw_min->n_coinc);
    v.raw = hi + lo > 0 ? (hi - lo) / (hi + lo) : 0.0;
    v.subtracted = (q_max->q_tilde - q_min->q_tilde) / (q_max->q_tilde + q_min->q_tilde);
    v.delta_max = raw_max->delta;
    v.delta_min = raw_min->delta;
    return v;
}

}  // namespace freqbin
