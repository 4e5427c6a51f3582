#include "freqbin/biphoton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/core.h>

#include "freqbin/bessel.hpp"

namespace freqbin {
namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kReferenceWavelength = 1547.73e-9;
constexpr int kVisibilityGrid = 2048;

int order_for_tail(double x, double tol) {
    const int top = static_cast<int>(std::ceil(std::abs(x))) + 40;
    const auto table = bessel_j_table(top, x);
    // tail(P) = 2 sum_{p > P} J_p^2, accumulated from the top down.
    std::vector<double> tail(static_cast<std::size_t>(top) + 1, 0.0);
    for (int p = top - 1; p >= 0; --p) tail[p] = tail[p + 1] + 2.0 * table[p + 1] * table[p + 1];
    for (int p = 1; p < top; ++p) {
        if (tail[p] < tol) return p;
    }
    return top;
}

void require_same_frequency(const ModulatorSettings& alice, const ModulatorSettings& bob) {
    if (alice.rf_frequency_hz() != bob.rf_frequency_hz()) {
        throw std::invalid_argument("Alice and Bob must be driven at the same RF frequency");
    }
}

// Coefficient vector for |p| <= reach, indexed by p + reach.
struct CoefficientTable {
    int reach;
    std::vector<std::complex<double>> values;

    CoefficientTable(const ModulatorSettings& s, int reach_)
        : reach(reach_), values(sideband_coefficients(s, reach_)) {}

    const std::complex<double>& operator[](int p) const { return values[p + reach]; }
};

// Keeps every p with |p| <= P or |d - p| <= P.
std::complex<double> sum_amplitude(const CoefficientTable& ua, const CoefficientTable& ub, int d,
                                   int order) {
    const int lo = std::min(-order, d - order);
    const int hi = std::max(order, d + order);
    std::complex<double> sum{0.0, 0.0};
    for (int p = lo; p <= hi; ++p) sum += ua[p] * ub[d - p];
    return sum;
}

double c_eff(double a, double b, double delta) {
    return std::hypot(a - b, 2.0 * std::sqrt(a * b) * std::cos(0.5 * delta));
}

}  // namespace

FrequencyGrid::FrequencyGrid(double center_hz, double spacing_hz, double bin_width_hz,
                             double offset_hz)
    : center_hz_(center_hz),
      spacing_hz_(spacing_hz),
      bin_width_hz_(bin_width_hz),
      offset_hz_(offset_hz) {
    if (!(spacing_hz > 0)) throw std::invalid_argument("FrequencyGrid: spacing must be positive");
    if (!(bin_width_hz > 0 && bin_width_hz < spacing_hz)) {
        throw std::invalid_argument("FrequencyGrid: need 0 < bin_width < spacing");
    }
}

FrequencyGrid FrequencyGrid::reference() {
    return {kSpeedOfLight / kReferenceWavelength, kDefaultRfFrequencyHz, 3e9, 0.0};
}

int truncation_order(double a, double b, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("truncation_order: tol must be positive");
    return std::max({order_for_tail(a, tol), order_for_tail(b, tol),
                     order_for_tail(std::abs(a) + std::abs(b), tol)});
}

std::complex<double> coincidence_amplitude(const ModulatorSettings& alice,
                                           const ModulatorSettings& bob, int d) {
    require_same_frequency(alice, bob);
    const int order = truncation_order(alice.amplitude(), bob.amplitude());
    const int reach = order + std::abs(d);
    return sum_amplitude(CoefficientTable(alice, reach), CoefficientTable(bob, reach), d, order);
}

double coincidence_probability(const ModulatorSettings& alice, const ModulatorSettings& bob,
                               int d) {
    return std::norm(coincidence_amplitude(alice, bob, d));
}

EffectiveModulation effective_modulation(double a, double b, double delta) {
    if (a < 0 || b < 0) throw std::invalid_argument("effective_modulation: negative amplitude");
    return {c_eff(a, b, delta), std::atan2(a * std::sin(delta), a * std::cos(delta) + b)};
}

EffectiveModulation effective_modulation(const ModulatorSettings& alice,
                                         const ModulatorSettings& bob) {
    const double a = alice.amplitude();
    const double b = bob.amplitude();
    const double delta = alice.rf_phase() - bob.rf_phase();
    const auto relative = effective_modulation(a, b, delta);
    return {relative.c_eff, relative.gamma + bob.rf_phase()};
}

BinDistribution::BinDistribution(ModulatorSettings alice, ModulatorSettings bob,
                                 int truncation_order,
                                 std::map<int, std::complex<double>> amplitudes)
    : alice_(alice),
      bob_(bob),
      truncation_order_(truncation_order),
      amplitudes_(std::move(amplitudes)) {
    const double total = total_probability();
    if (total < 1.0 - 1e-6) {
        diagnostics_.push_back(fmt::format(
            "table |d| <= {} holds only {:.9f} of the probability; increase max_d", max_d(),
            total));
    }
}

std::complex<double> BinDistribution::amplitude(int d) const {
    const auto it = amplitudes_.find(d);
    return it == amplitudes_.end() ? std::complex<double>{} : it->second;
}

double BinDistribution::probability(int d) const { return std::norm(amplitude(d)); }

double BinDistribution::total_probability() const {
    double total = 0.0;
    for (const auto& [d, c] : amplitudes_) total += std::norm(c);
    return total;
}

std::vector<int> BinDistribution::significant_orders(double threshold) const {
    std::vector<int> orders;
    for (const auto& [d, c] : amplitudes_) {
        if (std::norm(c) > threshold) orders.push_back(d);
    }
    return orders;
}

BinDistribution distribution(const ModulatorSettings& alice, const ModulatorSettings& bob,
                             int max_d) {
    require_same_frequency(alice, bob);
    if (max_d < 1) throw std::invalid_argument("distribution: max_d must be positive");
    const int order = truncation_order(alice.amplitude(), bob.amplitude());
    const CoefficientTable ua(alice, order + max_d);
    const CoefficientTable ub(bob, order + max_d);
    std::map<int, std::complex<double>> amplitudes;
    for (int d = -max_d; d <= max_d; ++d) amplitudes.emplace(d, sum_amplitude(ua, ub, d, order));
    return {alice, bob, order, std::move(amplitudes)};
}

BinDistribution distribution(const ModulatorSettings& alice, const ModulatorSettings& bob) {
    return distribution(alice, bob, truncation_order(alice.amplitude(), bob.amplitude()));
}

VisibilityResult visibility(double a, double b) {
    if (!(a > 0 && b > 0)) throw std::invalid_argument("visibility: amplitudes must be positive");
    VisibilityResult result;
    result.q_max = coincidence_probability({a, std::numbers::pi}, {b, 0.0}, 0);

    auto field = [a, b](double delta) { return bessel_j(0, c_eff(a, b, delta)); };
    const double step = kTwoPi / kVisibilityGrid;
    int best = 0;
    double best_q = 2.0;
    std::vector<double> samples(kVisibilityGrid + 1);
    for (int i = 0; i <= kVisibilityGrid; ++i) {
        samples[i] = field(i * step);
        if (samples[i] * samples[i] < best_q) {
            best_q = samples[i] * samples[i];
            best = i;
        }
    }

    const int lo = std::max(best - 1, 0);
    const int hi = std::min(best + 1, kVisibilityGrid);
    double delta_min = best * step;
    int sign_lo = -1;
    if ((samples[lo] < 0) != (samples[best] < 0)) sign_lo = lo;
    else if ((samples[hi] < 0) != (samples[best] < 0)) sign_lo = best;

    if (sign_lo >= 0) {
        std::uintmax_t iterations = 200;
        auto tol = boost::math::tools::eps_tolerance<double>(50);
        const auto [r0, r1] = boost::math::tools::toms748_solve(
            field, sign_lo * step, (sign_lo + 1) * step, samples[sign_lo], samples[sign_lo + 1],
            tol, iterations);
        delta_min = 0.5 * (r0 + r1);
        result.reaches_zero = true;
    } else if (best_q > 0.0) {
        auto q = [&field](double delta) {
            const double f = field(delta);
            return f * f;
        };
        delta_min = boost::math::tools::brent_find_minima(q, lo * step, hi * step, 52).first;
    } else {
        result.reaches_zero = true;
    }

    result.delta_at_min = wrap_phase(delta_min);
    result.q_min = coincidence_probability({a, result.delta_at_min}, {b, 0.0}, 0);
    result.visibility = (result.q_max - result.q_min) / (result.q_max + result.q_min);
    if (a + b < kFirstZeroJ0) {
        result.diagnostics.push_back(fmt::format(
            "a + b = {:.4f} is below the first zero of J_0 ({:.4f}); the fringe never goes dark "
            "and the minimum sits at Delta = 0",
            a + b, kFirstZeroJ0));
    }
    return result;
}

std::vector<double> dark_fringe_phases(double a, double b) {
    std::vector<double> phases;
    if (a <= 0 || b <= 0) return phases;
    const double c_lo = std::abs(a - b);
    const double c_hi = a + b;
    for (int k = 1;; ++k) {
        const double zero = bessel_j0_zero(k);
        if (zero > c_hi) break;
        if (zero < c_lo) continue;
        const double cos_delta = std::clamp((zero * zero - a * a - b * b) / (2 * a * b), -1.0, 1.0);
        const double delta = std::acos(cos_delta);
        phases.push_back(delta);
        if (delta > 0 && delta < std::numbers::pi) phases.push_back(kTwoPi - delta);
    }
    std::sort(phases.begin(), phases.end());
    return phases;
}

}  // namespace freqbin
