#pragma once

#include <cmath>
#include <stdexcept>

#include "hmax/errors.hpp"

namespace hmax {

/// Root of a monotone function on [lo, hi] by interval halving, |hi - lo| <= tol
/// at exit. The endpoints must straddle zero (either orientation).
template <class Functor>
double bisect(const Functor& f, double lo, double hi, double tol = 1e-13, int max_iter = 500) {
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo < 0.0) == (f_hi < 0.0))
        throw DomainError("bisect: interval does not bracket a root");
    for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Doubles `hi` from `start` until f(hi) has the opposite sign of f(lo).
template <class Functor>
double expand_bracket(const Functor& f, double lo, double start, double limit) {
    const bool neg = f(lo) < 0.0;
    double hi = start;
    while ((f(hi) < 0.0) == neg) {
        hi *= 2.0;
        if (hi > limit) throw DomainError("expand_bracket: no sign change below limit");
    }
    return hi;
}

}  // namespace hmax
