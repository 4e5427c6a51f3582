#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqbin/bell.hpp"
#include "freqbin/experiment.hpp"

namespace freqbin::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kSuccess = 0, kConfigFailure = 1, kRuntimeFailure = 2 };

struct GridConfig {
    double center_hz = FrequencyGrid::reference().center_hz();
    double spacing_hz = 12.5e9;
    double bin_width_hz = 3e9;
    double offset_hz = 0.0;
};

struct FilterConfig {
    double fwhm_hz = 3e9;
    double isolation_db = 30.0;
    double isolation_detuning_hz = 6.25e9;
    double insertion_loss_db = 1.0;
};

struct DetectorConfig {
    double efficiency = 0.15;
    double dark_rate_per_ns = 3.5e-5;
    double gate_width_ns = 2.5;
    double gate_rate_hz = 10e6;  ///< used only when calibration is off
};

struct ExperimentConfig {
    FilterConfig filter;
    DetectorConfig detector_a;
    DetectorConfig detector_b{0.15, 8.0e-5, 2.5, 10e6};
    double modulator_loss_db = 2.5;
    double split_probability = 0.5;
    double source_bandwidth_hz = 5e12;
    double pair_rate_scale = 1.0;  ///< used only when calibration is off
    bool calibrate = true;
    double max_coincidence_rate_hz = 10.0;
    double target_snr = 100.0;
    double bob_filter_offset_hz = 0.0;
    double tdc_bin_width_ns = 1.0;
    int tdc_bins = 128;
    int tdc_peak_index = 64;
    double count_budget = 1000.0;
};

struct SpectrumConfig {
    double amplitude = 2.74;
    int max_order = 5;
};

struct AmplitudeScanConfig {
    std::vector<int> d{0, 1, 2, 3, 4, 5};
    double a_min = 0.0;
    double a_max = 2.74;
    int points = 28;
    double delta = 0.0;
    int curve_points = 275;
};

struct PhaseScanConfig {
    std::vector<int> d{0, 1, 2, 3, 4, 5};
    double amplitude = 2.74;
    int points = 129;  ///< inclusive grid over [0, 2pi]
    int curve_points = 513;
};

struct VisibilityConfig {
    double a = 2.74;
    double b = 2.74;
    bool simulate = true;
    int points = 129;
};

struct BellCommandConfig {
    double amplitude = 1.01;
    int restarts = 32;
    double scan_start = 0.3;
    double scan_stop = 2.0;
    double scan_step = 0.05;
    double tolerance_a_rel = 1e-2;
    double tolerance_alpha = 5e-2;
    double tolerance_beta = 10e-2;
    bool simulate = true;
    double term_budget = 1000.0;
    double reference_budget = 4000.0;
};

struct SimulateConfig {
    double a = 0.0;
    double alpha = 0.0;
    double b = 0.0;
    double beta = 0.0;
    int d = 0;
    double duration_s = 0.0;  ///< 0 selects the experiment's count budget
};

struct ScenarioConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 1;
    GridConfig grid;
    ExperimentConfig experiment;
    SpectrumConfig spectrum;
    AmplitudeScanConfig scan_amplitude;
    PhaseScanConfig scan_phase;
    VisibilityConfig visibility;
    BellCommandConfig bell;
    SimulateConfig simulate;
};

/// Parses a scenario document. Missing keys take defaults; unknown keys and
/// wrong schema versions throw ConfigError.
ScenarioConfig parse_config(const nlohmann::json& doc);
/// Every field, so parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ScenarioConfig& config);

/// Range checks that do not need the experiment model.
void validate(const ScenarioConfig& config);

/// Experiment model described by the config, calibrated if requested.
ExperimentSpec build_experiment(const ScenarioConfig& config);

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

/// "0..5" or "0,2,4".
std::vector<int> parse_d_list(const std::string& text);
/// "start:stop:step", both ends inclusive.
std::vector<double> parse_range(const std::string& text);
/// n points evenly covering [lo, hi].
std::vector<double> linspace(double lo, double hi, int n);

/// Worker count: hardware concurrency capped by FREQBIN_THREADS.
unsigned thread_budget();

/// Entry point for the freqbin executable.
int run_command(int argc, const char* const* argv);

}  // namespace freqbin::cli
