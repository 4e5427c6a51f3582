#pragma once

// Reference formulas that share no code with the library.

#include <cmath>
#include <complex>
#include <stdexcept>

namespace oracle {

// Power series sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!) in long double,
// summed until terms stop changing the total. Loses digits for large x, so
// callers keep |x| <= 10.
inline double bessel_series(int order, double x) {
    const int n = std::abs(order);
    const long double half = static_cast<long double>(x) / 2;
    long double term = 1.0L;
    for (int k = 1; k <= n; ++k) term *= half / k;
    long double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= -half * half / (static_cast<long double>(k) * (k + n));
        const long double next = sum + term;
        if (next == sum && std::fabs(term) < 1e-40L) break;
        sum = next;
    }
    double value = static_cast<double>(sum);
    if (order < 0 && (n % 2)) value = -value;
    return value;
}

// Two drives at one frequency add as phasors: a e^{i alpha} + b e^{i beta}.
inline double composed_amplitude(double a, double alpha, double b, double beta) {
    return std::abs(std::polar(a, alpha) + std::polar(b, beta));
}

// |c_d| predicted by the composed single drive.
inline double amplitude_magnitude(double a, double alpha, double b, double beta, int d) {
    return std::fabs(bessel_series(d, composed_amplitude(a, alpha, b, beta)));
}

}  // namespace oracle
