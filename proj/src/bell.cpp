#include "freqbin/bell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/tools/minima.hpp>

#include "freqbin/biphoton.hpp"
#include "freqbin/parallel.hpp"

namespace freqbin {
namespace {

constexpr int kBrentBits = 52;
constexpr double kConvergence = 1e-13;
constexpr int kMaxIterations = 300;

double circular_distance(double x, double y) {
    const double d = wrap_phase(x - y);
    return std::min(d, kTwoPi - d);
}

// Full parameter vector: a1, a2, b1, b2, alpha1, alpha2, beta1, beta2.
using Params = std::array<double, 8>;

Params to_params(const BellConfig& c) {
    return {c.alice[0].amplitude(), c.alice[1].amplitude(), c.bob[0].amplitude(),
            c.bob[1].amplitude(),   c.alice[0].rf_phase(),  c.alice[1].rf_phase(),
            c.bob[0].rf_phase(),    c.bob[1].rf_phase()};
}

BellConfig from_params(const Params& p, const Tolerances& tol) {
    BellConfig c;
    c.alice = {ModulatorSettings(p[0], p[4]), ModulatorSettings(p[1], p[5])};
    c.bob = {ModulatorSettings(p[2], p[6]), ModulatorSettings(p[3], p[7])};
    c.tolerances = tol;
    return c;
}

double s_of(const BellConfig& c) { return s_statistic(c).s_value; }

// Minimises f(t) over [lo, hi]; returns {t, f(t)}.
template <typename F>
std::pair<double, double> line_minimum(F&& f, double lo, double hi) {
    std::uintmax_t iterations = 200;
    return boost::math::tools::brent_find_minima(f, lo, hi, kBrentBits, iterations);
}

// Powell's conjugate-direction descent on -S over (alpha2, beta1, beta2).
std::pair<std::array<double, 3>, double> maximise_from(double amplitude,
                                                       std::array<double, 3> x) {
    auto neg_s = [amplitude](const std::array<double, 3>& v) {
        return -s_of(BellConfig::equal_amplitudes(amplitude, 0.0, v[0], v[1], v[2]));
    };
    std::array<std::array<double, 3>, 3> dirs{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    double fx = neg_s(x);

    auto search = [&](const std::array<double, 3>& u) {
        auto along = [&](double t) {
            return neg_s({x[0] + t * u[0], x[1] + t * u[1], x[2] + t * u[2]});
        };
        double best_t = 0.0;
        double best_f = fx;
        for (double reach : {std::numbers::pi, 0.3}) {
            const auto [t, f] = line_minimum(along, -reach, reach);
            if (f < best_f) {
                best_f = f;
                best_t = t;
            }
        }
        for (int i = 0; i < 3; ++i) x[i] += best_t * u[i];
        const double drop = fx - best_f;
        fx = best_f;
        return drop;
    };

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        const auto start = x;
        const double f_start = fx;
        int biggest = 0;
        double biggest_drop = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double drop = search(dirs[k]);
            if (drop > biggest_drop) {
                biggest_drop = drop;
                biggest = k;
            }
        }
        if (f_start - fx < kConvergence) break;
        std::array<double, 3> moved{x[0] - start[0], x[1] - start[1], x[2] - start[2]};
        const double norm = std::sqrt(moved[0] * moved[0] + moved[1] * moved[1] + moved[2] * moved[2]);
        if (norm > 1e-12) {
            for (double& m : moved) m /= norm;
            search(moved);
            dirs[biggest] = dirs[2];
            dirs[2] = moved;
        }
    }
    for (double& v : x) v = wrap_phase(v);
    return {x, -fx};
}

}  // namespace

BellConfig BellConfig::equal_amplitudes(double amplitude, double alpha1, double alpha2,
                                        double beta1, double beta2) {
    BellConfig c;
    c.alice = {ModulatorSettings(amplitude, alpha1), ModulatorSettings(amplitude, alpha2)};
    c.bob = {ModulatorSettings(amplitude, beta1), ModulatorSettings(amplitude, beta2)};
    return c;
}

std::array<double, 4> BellConfig::phases() const {
    return {alice[0].rf_phase(), alice[1].rf_phase(), bob[0].rf_phase(), bob[1].rf_phase()};
}

double ch_term(const ModulatorSettings& alice, const ModulatorSettings& bob) {
    return coincidence_probability(alice, bob, 0);
}

RunResult ch_term_simulated(const ExperimentSpec& spec, const ModulatorSettings& alice,
                            const ModulatorSettings& bob, const TdcHistogram& reference,
                            double duration_s, std::uint64_t seed) {
    return estimate_q(simulate_run(spec, alice, bob, 0, duration_s, seed), reference);
}

BellResult s_statistic(const BellConfig& config) {
    BellResult r;
    r.terms = {ch_term(config.alice[0], config.bob[0]), ch_term(config.alice[0], config.bob[1]),
               ch_term(config.alice[1], config.bob[0]), ch_term(config.alice[1], config.bob[1])};
    r.s_value = r.terms[0] + r.terms[1] + r.terms[2] - r.terms[3];
    return r;
}

BellResult s_statistic_simulated(const BellConfig& config, const ExperimentSpec& spec,
                                 const BellSimulation& options) {
    if (!(options.term_budget > 0 && options.reference_budget > 0)) {
        throw std::invalid_argument("s_statistic_simulated: budgets must be positive");
    }
    const auto off = ModulatorSettings::off();
    const double ref_duration = duration_for_budget(spec, options.reference_budget);
    const TdcHistogram reference =
        simulate_run(spec, off, off, 0, ref_duration, derive_seed(options.seed, 0));

    const std::array<std::pair<int, int>, 4> pairs{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
    BellResult r;
    double variance = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& alice = config.alice[pairs[k].first];
        const auto& bob = config.bob[pairs[k].second];
        const double rate = rate_model(spec, alice, bob, 0).true_coincidence_hz;
        const double duration = rate > 0 ? options.term_budget / rate
                                         : ref_duration * options.term_budget / options.reference_budget;
        const auto run = ch_term_simulated(spec, alice, bob, reference, duration,
                                           derive_seed(options.seed, k + 1));
        r.terms[k] = run.q_tilde;
        r.term_sigmas[k] = run.q_sigma;
        variance += run.q_sigma * run.q_sigma;
    }
    r.s_value = r.terms[0] + r.terms[1] + r.terms[2] - r.terms[3];
    r.s_sigma = std::sqrt(variance);
    if (r.s_sigma > 0) r.significance = (r.s_value - kClassicalBound) / r.s_sigma;
    return r;
}

double violation_significance(const BellResult& result) {
    if (!(result.s_sigma > 0)) {
        throw UndefinedSignificanceError("violation_significance: S has no statistical error");
    }
    return (result.s_value - kClassicalBound) / result.s_sigma;
}

OptimizedBell optimize_phases(double amplitude, int restarts, std::uint64_t seed) {
    if (!(amplitude > 0)) throw std::invalid_argument("optimize_phases: amplitude must be > 0");
    if (restarts < 1) throw std::invalid_argument("optimize_phases: need at least one restart");
    std::array<double, 3> best_x{};
    double best_s = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < restarts; ++k) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        std::uniform_real_distribution<double> phase(0.0, kTwoPi);
        std::array<double, 3> start{};
        for (double& v : start) v = phase(rng);
        const auto [x, s] = maximise_from(amplitude, start);
        if (s > best_s) {
            best_s = s;
            best_x = x;
        }
    }
    OptimizedBell out;
    out.config = BellConfig::equal_amplitudes(amplitude, 0.0, best_x[0], best_x[1], best_x[2]);
    out.result = s_statistic(out.config);
    return out;
}

double phase_mismatch(const BellConfig& found, const BellConfig& reference) {
    auto gauged = [](std::array<double, 4> p) {
        const double shift = p[0];
        for (double& v : p) v = wrap_phase(v - shift);
        return p;
    };
    const auto target = gauged(reference.phases());
    double best = std::numeric_limits<double>::infinity();
    for (bool exchange : {false, true}) {
        for (bool negate : {false, true}) {
            auto p = found.phases();
            if (exchange) p = {p[2], p[3], p[0], p[1]};
            if (negate) {
                for (double& v : p) v = -v;
            }
            p = gauged(p);
            double worst = 0.0;
            for (int i = 1; i < 4; ++i) worst = std::max(worst, circular_distance(p[i], target[i]));
            best = std::min(best, worst);
        }
    }
    return best;
}

WorstCase worst_case_s(const BellConfig& config) {
    const Params centre = to_params(config);
    const Tolerances& tol = config.tolerances;
    if (tol.amplitude_rel < 0 || tol.alpha < 0 || tol.beta < 0) {
        throw std::invalid_argument("worst_case_s: tolerances must be non-negative");
    }
    Params half{};
    for (int i = 0; i < 4; ++i) half[i] = centre[i] * tol.amplitude_rel;
    half[4] = half[5] = tol.alpha;
    half[6] = half[7] = tol.beta;

    auto eval = [&](const Params& p) { return s_of(from_params(p, tol)); };

    WorstCase out;
    out.s_nominal = eval(centre);

    Params worst = centre;
    double worst_s = out.s_nominal;
    constexpr int kCorners = 6561;  // 3^8
    for (int code = 0; code < kCorners; ++code) {
        Params p = centre;
        int rest = code;
        for (int i = 0; i < 8; ++i) {
            p[i] += (rest % 3 - 1) * half[i];
            rest /= 3;
        }
        const double s = eval(p);
        if (s < worst_s) {
            worst_s = s;
            worst = p;
        }
    }
    out.s_corner = worst_s;

    // Box-constrained coordinate descent from the worst corner.
    for (int sweep = 0; sweep < kMaxIterations; ++sweep) {
        const double before = worst_s;
        for (int i = 0; i < 8; ++i) {
            if (half[i] <= 0) continue;
            auto along = [&](double v) {
                Params p = worst;
                p[i] = v;
                return eval(p);
            };
            const auto [v, s] = line_minimum(along, centre[i] - half[i], centre[i] + half[i]);
            if (s < worst_s) {
                worst_s = s;
                worst[i] = v;
            }
        }
        if (before - worst_s < kConvergence) break;
    }
    out.s_worst = worst_s;
    out.config = from_params(worst, tol);
    return out;
}

LhvEnumeration enumerate_lhv_bound(int weight_steps) {
    if (weight_steps < 1) throw std::invalid_argument("enumerate_lhv_bound: weight_steps < 1");
    // Strategy bits: outcome-0 indicators for A1, A2, B1, B2.
    struct Moments {
        double joint;  // P11 + P12 + P21 - P22
        double a1;
        double b1;
    };
    std::array<Moments, 16> strategies{};
    LhvEnumeration out;
    out.ch_max = -std::numeric_limits<double>::infinity();
    out.normalized_max = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < 16; ++s) {
        const double x1 = s & 1, x2 = (s >> 1) & 1, y1 = (s >> 2) & 1, y2 = (s >> 3) & 1;
        strategies[s] = {x1 * y1 + x1 * y2 + x2 * y1 - x2 * y2, x1, y1};
        out.ch_max = std::max(out.ch_max, strategies[s].joint - x1 - y1);
    }
    out.strategies = strategies.size();

    for (int i = 0; i < 16; ++i) {
        for (int j = i; j < 16; ++j) {
            for (int k = 0; k <= weight_steps; ++k) {
                const double w = static_cast<double>(k) / weight_steps;
                const auto& u = strategies[i];
                const auto& v = strategies[j];
                const double pa = w * u.a1 + (1 - w) * v.a1;
                const double pb = w * u.b1 + (1 - w) * v.b1;
                if (pa <= 0 || std::abs(pa - pb) > 1e-12) continue;
                const double joint = w * u.joint + (1 - w) * v.joint;
                out.normalized_max = std::max(out.normalized_max, joint / pa);
                ++out.mixtures;
            }
        }
    }
    return out;
}

std::vector<BellScanRow> bell_scan(std::span<const double> amplitudes, const ExperimentSpec& spec,
                                   const BellScanOptions& options) {
    std::vector<BellScanRow> rows(amplitudes.size());
    parallel_for(amplitudes.size(), options.threads, [&](std::size_t i) {
        const double a = amplitudes[i];
        auto opt = optimize_phases(a, options.restarts, derive_seed(options.seed, i));
        opt.config.tolerances = options.tolerances;
        BellScanRow row;
        row.amplitude = a;
        row.s_nominal = opt.result.s_value;
        row.s_worst = worst_case_s(opt.config).s_worst;
        row.phases = opt.config.phases();
        if (options.simulation) {
            BellSimulation sim = *options.simulation;
            sim.seed = derive_seed(sim.seed, i);
            row.simulated = s_statistic_simulated(opt.config, spec, sim);
        }
        rows[i] = row;
    });
    return rows;
}

}  // namespace freqbin
