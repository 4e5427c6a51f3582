#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "freqbin/modulator.hpp"

namespace freqbin {

/// Truncation tolerance on the discarded Bessel mass used by default.
inline constexpr double kDefaultTruncationTolerance = 1e-14;

/// Frequency-bin layout. Alice's bin sits at center + offset, Bob's at
/// center - offset + d * spacing.
class FrequencyGrid {
public:
    FrequencyGrid(double center_hz, double spacing_hz, double bin_width_hz,
                  double offset_hz = 0.0);

    /// 1547.73 nm carrier, 12.5 GHz spacing, 3 GHz bins.
    static FrequencyGrid reference();

    double center_hz() const noexcept { return center_hz_; }
    double spacing_hz() const noexcept { return spacing_hz_; }
    double bin_width_hz() const noexcept { return bin_width_hz_; }
    double offset_hz() const noexcept { return offset_hz_; }

    double alice_bin_hz() const noexcept { return center_hz_ + offset_hz_; }
    double bob_bin_hz(int d) const noexcept { return center_hz_ - offset_hz_ + d * spacing_hz_; }

private:
    double center_hz_;
    double spacing_hz_;
    double bin_width_hz_;
    double offset_hz_;
};

/// Smallest P >= 1 whose two-sided Bessel tail beyond P is below tol for
/// each of a, b and a + b.
int truncation_order(double a, double b, double tol = kDefaultTruncationTolerance);

/// c_d = sum_p U_p(a, alpha) U_{d-p}(b, beta). Both drives must share the RF
/// frequency.
std::complex<double> coincidence_amplitude(const ModulatorSettings& alice,
                                           const ModulatorSettings& bob, int d);

/// Q(d | a, b, Delta) = |c_d|^2.
double coincidence_probability(const ModulatorSettings& alice, const ModulatorSettings& bob,
                               int d);

/// Two same-frequency drives compose into one: a e^{i alpha} + b e^{i beta}
/// = c_eff e^{i gamma}.
struct EffectiveModulation {
    double c_eff = 0.0;
    double gamma = 0.0;
};

/// Composition for phase difference delta, expressed in the frame beta = 0.
EffectiveModulation effective_modulation(double a, double b, double delta);
/// Composition of two concrete drives; gamma is absolute.
EffectiveModulation effective_modulation(const ModulatorSettings& alice,
                                         const ModulatorSettings& bob);

class BinDistribution {
public:
    BinDistribution(ModulatorSettings alice, ModulatorSettings bob, int truncation_order,
                    std::map<int, std::complex<double>> amplitudes);

    const std::map<int, std::complex<double>>& amplitudes() const noexcept { return amplitudes_; }
    const ModulatorSettings& settings_a() const noexcept { return alice_; }
    const ModulatorSettings& settings_b() const noexcept { return bob_; }
    int truncation_order() const noexcept { return truncation_order_; }
    int max_d() const noexcept { return amplitudes_.empty() ? 0 : amplitudes_.rbegin()->first; }

    /// Zero outside the tabulated range.
    std::complex<double> amplitude(int d) const;
    double probability(int d) const;
    double total_probability() const;
    /// Orders d with Q(d) > threshold, ascending.
    std::vector<int> significant_orders(double threshold) const;

    /// Non-fatal warnings, e.g. a table too narrow to hold the full mass.
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    ModulatorSettings alice_;
    ModulatorSettings bob_;
    int truncation_order_;
    std::map<int, std::complex<double>> amplitudes_;
    std::vector<std::string> diagnostics_;
};

/// Amplitude table for |d| <= max_d.
BinDistribution distribution(const ModulatorSettings& alice, const ModulatorSettings& bob,
                             int max_d);
/// Amplitude table wide enough to hold all but kDefaultTruncationTolerance of the mass.
BinDistribution distribution(const ModulatorSettings& alice, const ModulatorSettings& bob);

struct VisibilityResult {
    double visibility = 0.0;
    double q_max = 0.0;
    double q_min = 0.0;
    double delta_at_min = 0.0;
    /// True when c_eff(Delta) reaches a zero of J_0, so q_min vanishes.
    bool reaches_zero = false;
    std::vector<std::string> diagnostics;
};

/// Fringe visibility of Q(0 | a, b, Delta) as Delta is scanned, with
/// Q_max taken at Delta = pi.
VisibilityResult visibility(double a, double b);

/// Phase differences in [0, 2pi) where Q(0 | a, b, Delta) vanishes.
std::vector<double> dark_fringe_phases(double a, double b);

}  // namespace freqbin
