#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "freqbin/experiment.hpp"
#include "freqbin/modulator.hpp"

namespace freqbin {

/// Largest S reachable with a maximally entangled state.
inline constexpr double kQuantumBound = 2.0 * std::numbers::sqrt2;
/// Local hidden variable bound of the normalised Clauser-Horne form.
inline constexpr double kClassicalBound = 2.0;

/// Half-widths of the perturbation box used by worst_case_s.
struct Tolerances {
    double amplitude_rel = 1e-2;
    double alpha = 5e-2;
    double beta = 10e-2;
};

/// Two settings per side: alice = {A1, A2}, bob = {B1, B2}.
struct BellConfig {
    std::array<ModulatorSettings, 2> alice;
    std::array<ModulatorSettings, 2> bob;
    Tolerances tolerances;

    /// a1 = a2 = b1 = b2 = amplitude.
    static BellConfig equal_amplitudes(double amplitude, double alpha1, double alpha2,
                                       double beta1, double beta2);

    /// {alpha1, alpha2, beta1, beta2}
    std::array<double, 4> phases() const;
};

struct BellResult {
    double s_value = 0.0;
    /// Q(00|A1B1), Q(00|A1B2), Q(00|A2B1), Q(00|A2B2)
    std::array<double, 4> terms{};
    std::array<double, 4> term_sigmas{};
    double s_sigma = 0.0;
    std::optional<double> significance;
};

class UndefinedSignificanceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// One normalised Clauser-Horne term, Q(d = 0 | a, b, alpha - beta).
double ch_term(const ModulatorSettings& alice, const ModulatorSettings& bob);

/// Measured counterpart of ch_term against a shared reference histogram.
RunResult ch_term_simulated(const ExperimentSpec& spec, const ModulatorSettings& alice,
                            const ModulatorSettings& bob, const TdcHistogram& reference,
                            double duration_s, std::uint64_t seed);

/// S = Q11 + Q12 + Q21 - Q22 from the analytic probabilities.
BellResult s_statistic(const BellConfig& config);

struct BellSimulation {
    std::uint64_t seed = 1;
    /// Expected true coincidences per term; each term's acquisition time is
    /// set from its own analytic rate.
    double term_budget = 1000.0;
    /// Expected true coincidences of the a = b = 0 normalisation run.
    double reference_budget = 4000.0;
};

/// Emulated measurement of S with statistical error (quadrature of the four
/// term errors) and significance (S - 2) / sigma.
BellResult s_statistic_simulated(const BellConfig& config, const ExperimentSpec& spec,
                                 const BellSimulation& options);

/// (S - 2) / sigma_S. Throws UndefinedSignificanceError when sigma_S is zero.
double violation_significance(const BellResult& result);

struct OptimizedBell {
    BellConfig config;
    BellResult result;
};

/// Maximises analytic S over alpha2, beta1, beta2 with alpha1 = 0 and all
/// amplitudes equal to `amplitude`. Restart k always starts from the same
/// point for a given seed, so the best S never decreases with more restarts.
OptimizedBell optimize_phases(double amplitude, int restarts = 32, std::uint64_t seed = 1);

/// Largest per-phase circular distance between two configurations after
/// factoring out a common phase shift, global phase negation, and the
/// Alice/Bob exchange. All of these leave S unchanged.
double phase_mismatch(const BellConfig& found, const BellConfig& reference);

struct WorstCase {
    double s_nominal = 0.0;
    double s_worst = 0.0;
    /// Smallest S over the 3^8 corner/centre grid alone.
    double s_corner = 0.0;
    BellConfig config;
};

/// Minimum of analytic S over the tolerance box around `config`.
WorstCase worst_case_s(const BellConfig& config);

struct LhvEnumeration {
    /// max over deterministic strategies of CH - P(0|A1) - P(0|B1); 0 for LHV.
    double ch_max = 0.0;
    /// max of the normalised S over enumerated mixtures with P(0|A1) = P(0|B1).
    double normalized_max = 0.0;
    std::size_t strategies = 0;
    std::size_t mixtures = 0;
};

/// Exhaustive check of the classical bound on the binary-outcome
/// abstraction: all 16 deterministic strategies, and all two-strategy
/// mixtures with weights k / weight_steps.
LhvEnumeration enumerate_lhv_bound(int weight_steps = 20);

struct BellScanRow {
    double amplitude = 0.0;
    double s_nominal = 0.0;
    double s_worst = 0.0;
    std::array<double, 4> phases{};
    std::optional<BellResult> simulated;
};

struct BellScanOptions {
    int restarts = 32;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    Tolerances tolerances;
    /// When set, each point is also measured with the emulated apparatus.
    std::optional<BellSimulation> simulation;
};

/// Optimised and worst-case S for each amplitude, in input order.
std::vector<BellScanRow> bell_scan(std::span<const double> amplitudes, const ExperimentSpec& spec,
                                   const BellScanOptions& options);

}  // namespace freqbin
