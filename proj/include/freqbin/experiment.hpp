#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "freqbin/biphoton.hpp"
#include "freqbin/modulator.hpp"

namespace freqbin {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateReferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Narrow-band filter (FBG behind a circulator).
struct FilterSpec {
    double center_detuning_hz = 0.0;  ///< relative to the grid center
    double fwhm_hz = 3e9;
    double isolation_db = 30.0;
    double isolation_detuning_hz = 6.25e9;
    double insertion_loss_db = 1.0;  ///< 0.2 dB grating + 0.8 dB circulator round trip

    void validate() const;
};

/// Super-Gaussian exponent n: smallest integer in 1..8 meeting the isolation
/// requirement. Throws ConfigError when none does.
int filter_order(const FilterSpec& spec);

/// T(delta) = T_peak exp(-ln2 (2 delta / fwhm)^(2n)), with delta measured
/// from the filter center and T_peak = 10^(-insertion_loss_db / 10).
double filter_transmission(const FilterSpec& spec, double detuning_hz);

/// Gated avalanche photodiode.
struct DetectorSpec {
    double efficiency = 0.15;
    double dark_rate_per_ns = 3.5e-5;
    double gate_width_ns = 2.5;
    double gate_rate_hz = 10e6;

    double duty_cycle() const { return gate_width_ns * 1e-9 * gate_rate_hz; }
    void validate() const;
};

/// Pair source: |f(nu)|^2 over detuning nu (Hz) from the grid center.
struct SourceSpec {
    std::function<double(double)> spectral_density;
    double pair_rate_scale = 1.0;
    double bandwidth_hz = 5e12;  ///< informational for custom densities

    /// Unit density over |nu| <= bandwidth / 2, zero outside.
    static SourceSpec flat(double bandwidth_hz, double pair_rate_scale = 1.0);
};

/// Pairs per second with Alice's photon in the bin at the grid offset:
/// pair_rate_scale * integral of |f|^2 over the bin.
double bin_pair_rate(const SourceSpec& source, const FrequencyGrid& grid);

/// True when |f|^2 changes by at most rel_tol between points one grid
/// spacing apart, sampled across `window_bins` spacings around the center.
bool slowly_varying(const SourceSpec& source, const FrequencyGrid& grid, double rel_tol = 1e-2,
                    int window_bins = 10);

/// Time-to-digital converter layout.
struct TdcSpec {
    double bin_width_ns = 1.0;
    int bins = 128;
    int peak_index = 64;

    void validate() const;
};

struct ExperimentSpec {
    FrequencyGrid grid = FrequencyGrid::reference();
    SourceSpec source = SourceSpec::flat(5e12);
    FilterSpec filter_a;
    FilterSpec filter_b;
    DetectorSpec detector_a;
    DetectorSpec detector_b{0.15, 8.0e-5, 2.5, 10e6};
    TdcSpec tdc;
    double modulator_loss_db = 2.5;
    double split_probability = 0.5;
    /// Systematic mis-centering of Bob's filter; zero for an ideal setup.
    double bob_filter_offset_hz = 0.0;

    void validate() const;

    /// Reference apparatus with pair_rate_scale and gate rates calibrated
    /// to a 10 Hz maximum coincidence rate and SNR = 100.
    static ExperimentSpec reference();
};

struct CalibrationTargets {
    double max_coincidence_rate_hz = 10.0;
    double snr = 100.0;
};

/// Solves for the common gate rate (on the branch where SNR falls with
/// duty cycle) and the pair-rate scale that hit the targets at a = b = 0,
/// d = 0. Throws ConfigError when the SNR target is out of reach.
ExperimentSpec calibrate(ExperimentSpec spec, const CalibrationTargets& targets = {});

/// Mean detection rates for one setting.
struct RateModel {
    double true_coincidence_hz = 0.0;  ///< lands in the peak bin
    double singles_a_per_ns = 0.0;     ///< click rate while gated
    double singles_b_per_ns = 0.0;
    double accidental_per_bin_hz = 0.0;  ///< every TDC bin, peak included

    double snr() const { return true_coincidence_hz / accidental_per_bin_hz; }
};

/// Bob's filter is tuned to d * spacing (+ the systematic offset); coincidences
/// from every order k reach it weighted by its transmission at k * spacing.
RateModel rate_model(const ExperimentSpec& spec, const ModulatorSettings& alice,
                     const ModulatorSettings& bob, int d);

struct TdcHistogram {
    double bin_width_ns = 1.0;
    std::vector<std::uint64_t> counts;
    int peak_index = 0;
    double duration_s = 0.0;
};

/// Stream seed for point `index` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Poisson draws of true coincidences (peak bin) and accidentals (every
/// bin). Bit-identical for identical inputs and seed.
TdcHistogram simulate_run(const ExperimentSpec& spec, const ModulatorSettings& alice,
                          const ModulatorSettings& bob, int d, double duration_s,
                          std::uint64_t seed);

struct RunResult {
    std::uint64_t n_coinc = 0;
    double n_acc = 0.0;
    double q_tilde = 0.0;
    double q_sigma = 0.0;
    double snr = 0.0;
};

/// Background-subtracted coincidences normalised by the a = b = 0, d = 0
/// reference, with first-order Poisson error propagation.
RunResult estimate_q(const TdcHistogram& run, const TdcHistogram& reference);

/// Acquisition time giving `count_budget` expected true coincidences at the
/// maximum-rate point (a = b = 0, d = 0).
double duration_for_budget(const ExperimentSpec& spec, double count_budget);

struct ScanRow {
    int d = 0;
    double a = 0.0;
    double b = 0.0;
    double delta = 0.0;
    double q_analytic = 0.0;
    double q_tilde = 0.0;
    double q_sigma = 0.0;
    std::uint64_t n_coinc = 0;
    double n_acc = 0.0;
};

struct ScanOptions {
    double count_budget = 1000.0;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// a = b scanned at fixed Delta. Rows are ordered by d, then grid.
std::vector<ScanRow> scan_amplitude(const ExperimentSpec& spec, std::span<const int> d_list,
                                    std::span<const double> a_grid, double delta,
                                    const ScanOptions& options = {});

/// Delta scanned at a = b = amplitude. Rows are ordered by d, then grid.
std::vector<ScanRow> scan_phase(const ExperimentSpec& spec, std::span<const int> d_list,
                                double amplitude, std::span<const double> delta_grid,
                                const ScanOptions& options = {});
/// Delta scanned with Alice at amplitude_a and Bob at amplitude_b.
std::vector<ScanRow> scan_phase(const ExperimentSpec& spec, std::span<const int> d_list,
                                double amplitude_a, double amplitude_b,
                                std::span<const double> delta_grid,
                                const ScanOptions& options = {});

struct VisibilityEstimate {
    double raw = 0.0;         ///< from peak-window counts, accidentals included
    double subtracted = 0.0;  ///< from q_tilde
    double delta_max = 0.0;
    double delta_min = 0.0;
};

/// Fringe contrast of simulated rows (one d, Delta scanned).
VisibilityEstimate estimate_visibility(std::span<const ScanRow> rows);

}  // namespace freqbin
