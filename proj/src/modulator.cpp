#include "freqbin/modulator.hpp"

#include <cmath>
#include <stdexcept>

#include "freqbin/bessel.hpp"

namespace freqbin {

double wrap_phase(double radians) {
    if (!std::isfinite(radians)) throw std::invalid_argument("wrap_phase: non-finite phase");
    double r = std::fmod(radians, kTwoPi);
    if (r < 0) r += kTwoPi;
    // fmod of a value just below zero can round up to exactly 2pi.
    return r >= kTwoPi ? 0.0 : r;
}

double amplitude_from_voltage(double voltage, double half_wave_voltage) {
    if (!(half_wave_voltage > 0)) {
        throw std::invalid_argument("amplitude_from_voltage: V_pi must be positive");
    }
    return std::numbers::pi * voltage / half_wave_voltage;
}

ModulatorSettings::ModulatorSettings(double amplitude, double rf_phase, double rf_frequency_hz)
    : rf_frequency_hz_(rf_frequency_hz) {
    if (!std::isfinite(amplitude)) {
        throw std::invalid_argument("ModulatorSettings: non-finite amplitude");
    }
    if (!(rf_frequency_hz > 0)) {
        throw std::invalid_argument("ModulatorSettings: rf frequency must be positive");
    }
    if (amplitude < 0) {
        amplitude_ = -amplitude;
        rf_phase_ = wrap_phase(rf_phase + std::numbers::pi);
    } else {
        amplitude_ = amplitude;
        rf_phase_ = wrap_phase(rf_phase);
    }
}

ModulatorSettings ModulatorSettings::with_amplitude(double amplitude) const {
    return {amplitude, rf_phase_, rf_frequency_hz_};
}

ModulatorSettings ModulatorSettings::with_phase(double rf_phase) const {
    return {amplitude_, rf_phase, rf_frequency_hz_};
}

bool within_accessible_range(const ModulatorSettings& settings) {
    return settings.amplitude() <= kMaxAccessibleAmplitude;
}

SidebandCoefficient sideband_coefficient(const ModulatorSettings& settings, int order) {
    const double magnitude = bessel_j(order, settings.amplitude());
    const double angle = order * (settings.rf_phase() - std::numbers::pi / 2);
    return {order, std::polar(1.0, angle) * magnitude};
}

std::vector<std::complex<double>> sideband_coefficients(const ModulatorSettings& settings,
                                                        int max_order) {
    if (max_order < 0) throw std::invalid_argument("sideband_coefficients: negative order");
    const auto table = bessel_j_table(max_order, settings.amplitude());
    const double shift = settings.rf_phase() - std::numbers::pi / 2;
    std::vector<std::complex<double>> out(2 * static_cast<std::size_t>(max_order) + 1);
    for (int p = 0; p <= max_order; ++p) {
        const double jp = table[p];
        out[max_order + p] = std::polar(1.0, p * shift) * jp;
        // J_{-p} = (-1)^p J_p
        out[max_order - p] = std::polar(1.0, -p * shift) * ((p % 2) ? -jp : jp);
    }
    return out;
}

int default_truncation(double amplitude) {
    return static_cast<int>(std::ceil(std::abs(amplitude))) + 20;
}

std::vector<SpectrumLine> sideband_spectrum(const ModulatorSettings& settings, int max_order) {
    if (max_order < 1) throw std::invalid_argument("sideband_spectrum: max_order must be >= 1");
    const auto table = bessel_j_table(max_order, settings.amplitude());
    std::vector<SpectrumLine> lines;
    lines.reserve(2 * static_cast<std::size_t>(max_order) + 1);
    for (int p = -max_order; p <= max_order; ++p) {
        const double j = table[p < 0 ? -p : p];
        lines.push_back({p, j * j});
    }
    return lines;
}

}  // namespace freqbin
