#include "freqbin/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/roots.hpp>

namespace freqbin {
namespace {

constexpr double kRescaleThreshold = 1e200;
constexpr double kRescaleFactor = 1e-200;

void check_argument(double x) {
    if (!std::isfinite(x) || std::abs(x) > kBesselMaxArgument) {
        throw DomainError("bessel_j: |x| = " + std::to_string(std::abs(x)) +
                          " outside validated range [0, " +
                          std::to_string(kBesselMaxArgument) + "]");
    }
}

// Miller start index: well above both the requested order and the argument.
int miller_start(int max_order, double x) {
    const int base = std::max(max_order, static_cast<int>(std::ceil(x)));
    int start = base + 20 + static_cast<int>(std::sqrt(40.0 * base));
    return start + (start & 1);
}

// J_0..J_max_order for x > 0.
std::vector<double> miller_table(int max_order, double x) {
    const int start = miller_start(max_order, x);
    std::vector<double> values(static_cast<std::size_t>(start) + 2, 0.0);
    values[start] = 1e-30;
    double norm = 0.0;
    const double two_over_x = 2.0 / x;
    for (int k = start; k >= 1; --k) {
        values[k - 1] = k * two_over_x * values[k] - values[k + 1];
        if (std::abs(values[k - 1]) > kRescaleThreshold) {
            for (int j = k - 1; j <= start; ++j) values[j] *= kRescaleFactor;
            norm *= kRescaleFactor;
        }
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * values[k - 1];
    }
    norm += values[0];
    values.resize(static_cast<std::size_t>(max_order) + 1);
    for (double& v : values) v /= norm;
    return values;
}

// Leading series term; only used where x is so small that 2/x overflows.
std::vector<double> tiny_argument_table(int max_order, double x) {
    std::vector<double> values(static_cast<std::size_t>(max_order) + 1, 0.0);
    double term = 1.0;
    for (int n = 0; n <= max_order; ++n) {
        values[n] = term;
        term *= 0.5 * x / (n + 1);
        if (term == 0.0) break;
    }
    return values;
}

}  // namespace

std::vector<double> bessel_j_table(int max_order, double x) {
    check_argument(x);
    if (max_order < 0) throw std::invalid_argument("bessel_j_table: negative max_order");
    const double ax = std::abs(x);
    std::vector<double> values = ax < 1e-250 ? tiny_argument_table(max_order, ax)
                                             : miller_table(max_order, ax);
    if (x < 0) {
        for (int n = 1; n <= max_order; n += 2) values[n] = -values[n];
    }
    return values;
}

double bessel_j(int order, double x) {
    check_argument(x);
    const int n = order < 0 ? -order : order;
    double value = bessel_j_table(n, std::abs(x))[n];
    const bool flip = (n % 2 == 1) && ((order < 0) != (x < 0));
    return flip ? -value : value;
}

double bessel_tail_mass(int order, double x) {
    if (order < 0) throw std::invalid_argument("bessel_tail_mass: negative order");
    const int top = std::max(order, static_cast<int>(std::ceil(std::abs(x)))) + 40;
    const auto table = bessel_j_table(top, x);
    double tail = 0.0;
    for (int p = top; p > order; --p) tail += table[p] * table[p];
    return 2.0 * tail;
}

double bessel_j0_zero(int k) {
    if (k < 1) throw std::invalid_argument("bessel_j0_zero: k must be >= 1");
    constexpr double step = 0.05;
    int found = 0;
    double lo = step;
    double f_lo = bessel_j(0, lo);
    while (lo + step <= kBesselMaxArgument) {
        const double hi = lo + step;
        const double f_hi = bessel_j(0, hi);
        if ((f_lo < 0) != (f_hi < 0)) {
            if (++found == k) {
                std::uintmax_t iterations = 200;
                auto f = [](double t) { return bessel_j(0, t); };
                auto tol = boost::math::tools::eps_tolerance<double>(52);
                auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol,
                                                                 iterations);
                return 0.5 * (a + b);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    throw DomainError("bessel_j0_zero: zero " + std::to_string(k) +
                      " lies beyond the validated argument range");
}

}  // namespace freqbin
