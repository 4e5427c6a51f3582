#pragma once

#include <stdexcept>
#include <vector>

namespace freqbin {

/// Largest |x| for which bessel_j is validated to 1e-12 absolute.
inline constexpr double kBesselMaxArgument = 50.0;

/// First positive zero of J_0.
inline constexpr double kFirstZeroJ0 = 2.404825557695773;

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// J_order(x) for any integer order and |x| <= kBesselMaxArgument.
///
/// Evaluated by Miller's downward recurrence normalised with the sum rule
/// J_0 + 2 sum_k J_2k = 1. Negative orders and arguments are mapped through
/// J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x), so the parity
/// relations hold bit-exactly.
double bessel_j(int order, double x);

/// J_0(x) .. J_max_order(x) in one recurrence pass. Same domain as bessel_j.
std::vector<double> bessel_j_table(int max_order, double x);

/// Two-sided tail sum_{|p| > order} J_p(x)^2, computed directly from the
/// table rather than as 1 - partial sum.
double bessel_tail_mass(int order, double x);

/// k-th positive zero of J_0 (k >= 1), bracketed on a grid and refined.
double bessel_j0_zero(int k);

}  // namespace freqbin
