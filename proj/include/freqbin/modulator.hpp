#pragma once

#include <complex>
#include <numbers>
#include <vector>

namespace freqbin {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kDefaultRfFrequencyHz = 12.5e9;
/// Largest modulation amplitude the reference apparatus could reach.
inline constexpr double kMaxAccessibleAmplitude = 2.74;

/// Reduces an angle to [0, 2pi).
double wrap_phase(double radians);

/// Optical phase amplitude pi V / V_pi for a drive of amplitude V.
double amplitude_from_voltage(double voltage, double half_wave_voltage);

/// RF drive of one electro-optic phase modulator: phi(t) = a cos(Omega t - alpha).
///
/// Stored canonically: amplitude >= 0 and rf_phase in [0, 2pi). A negative
/// amplitude is the same drive as |a| with the phase advanced by pi.
class ModulatorSettings {
public:
    ModulatorSettings() = default;
    ModulatorSettings(double amplitude, double rf_phase,
                      double rf_frequency_hz = kDefaultRfFrequencyHz);

    double amplitude() const noexcept { return amplitude_; }
    double rf_phase() const noexcept { return rf_phase_; }
    double rf_frequency_hz() const noexcept { return rf_frequency_hz_; }

    ModulatorSettings with_amplitude(double amplitude) const;
    ModulatorSettings with_phase(double rf_phase) const;

    /// Modulators are off.
    static ModulatorSettings off() { return {}; }

    friend bool operator==(const ModulatorSettings&, const ModulatorSettings&) = default;

private:
    double amplitude_ = 0.0;
    double rf_phase_ = 0.0;
    double rf_frequency_hz_ = kDefaultRfFrequencyHz;
};

/// False when the amplitude lies outside what the reference apparatus
/// could produce; such settings are still computed exactly.
bool within_accessible_range(const ModulatorSettings& settings);

struct SidebandCoefficient {
    int order = 0;
    std::complex<double> value;
};

/// U_p(a, alpha) = J_p(a) exp(i p (alpha - pi/2)): amplitude for a photon to
/// be shifted by p drive quanta.
SidebandCoefficient sideband_coefficient(const ModulatorSettings& settings, int order);

/// All U_p for |p| <= max_order, indexed by p + max_order.
std::vector<std::complex<double>> sideband_coefficients(const ModulatorSettings& settings,
                                                        int max_order);

/// Orders kept by default for amplitude a: |p| <= ceil(a) + 20.
int default_truncation(double amplitude);

struct SpectrumLine {
    int order = 0;
    double intensity = 0.0;
};

/// |U_p|^2 for p = -max_order .. max_order, in increasing order.
std::vector<SpectrumLine> sideband_spectrum(const ModulatorSettings& settings, int max_order);

}  // namespace freqbin
