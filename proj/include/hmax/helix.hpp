#pragma once

// The invariant family of the symmetric recurrence and the cyclic limit
// experiments built on it.
//
// An element is stored by an anchor (k0, v0) with v0 = F(k0). To the right of
// the anchor F(x) = g^{x-k0}(v0); to the left the complement obeys
// c(x-1) = g(c(x)) with c(k0) = 1 - v0, which is G read through the duality
// g(1-y) = 1 - G(y).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hmax/budget.hpp"
#include "hmax/errors.hpp"
#include "hmax/exact_engine.hpp"
#include "hmax/maps.hpp"
#include "hmax/tail_function.hpp"

namespace hmax::helix {

inline constexpr double kWindowEps = 1e-14;

struct HelixElement {
    std::int64_t k0 = 0;
    double v0 = 0.5;

    /// Validating constructor: v0 must lie in (0, 1/2].
    static HelixElement anchored(std::int64_t k0, double v0) {
        if (!(v0 > 0.0 && v0 <= 0.5))
            throw DomainError("HelixElement: anchor value must lie in (0, 1/2], got " +
                              std::to_string(v0));
        return {k0, v0};
    }

    /// The element whose value at x = 0 is `a`, re-anchored at its median:
    /// F(k0 - 1) > 1/2 >= F(k0) = v0.
    static HelixElement from_parameter(double a) {
        if (!(a > 0.0 && a < 1.0))
            throw DomainError("HelixElement: parameter must lie in (0,1), got " + std::to_string(a));
        std::int64_t k = 0;
        double v = a;
        if (v > 0.5) {
            while (v > 0.5) {
                v = g_map(v);
                ++k;
            }
        } else {
            // move left while the value one step to the left is still <= 1/2
            while (true) {
                const double left = G_map(v);
                if (left > 0.5) break;
                v = left;
                --k;
            }
        }
        return {k, v};
    }

    HelixElement shifted(std::int64_t by) const { return {k0 + by, v0}; }
};

inline double helix_tail(const HelixElement& e, std::int64_t x) {
    if (x == e.k0) return e.v0;
    if (x > e.k0) return iterate_map(MapKind::g, e.v0, x - e.k0);
    return 1.0 - iterate_map(MapKind::g, 1.0 - e.v0, e.k0 - x);
}

/// 1 - F(x), accurate when F(x) is near 1.
inline double helix_complement(const HelixElement& e, std::int64_t x) {
    if (x >= e.k0) return 1.0 - helix_tail(e, x);
    return iterate_map(MapKind::g, 1.0 - e.v0, e.k0 - x);
}

/// Tail and complement of an element on [lo, hi], one pass outward from the anchor.
struct HelixSample {
    std::int64_t lo;
    std::vector<double> tail;
    std::vector<double> comp;
};

inline HelixSample sample_helix(const HelixElement& e, std::int64_t lo, std::int64_t hi) {
    HelixSample s{lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1)),
                  std::vector<double>(static_cast<std::size_t>(hi - lo + 1))};
    auto put = [&](std::int64_t x, double t, double c) {
        if (x < lo || x > hi) return;
        s.tail[static_cast<std::size_t>(x - lo)] = t;
        s.comp[static_cast<std::size_t>(x - lo)] = c;
    };
    double v = e.v0;
    for (std::int64_t x = e.k0; x <= hi; ++x) {
        put(x, v, 1.0 - v);
        v = g_map(v);
    }
    double c = 1.0 - e.v0;
    for (std::int64_t x = e.k0 - 1; x >= lo; --x) {
        c = g_map(c);
        put(x, 1.0 - c, c);
    }
    return s;
}

/// Range of x where the element is in (eps, 1 - eps).
inline std::pair<std::int64_t, std::int64_t> nondegenerate_range(const HelixElement& e,
                                                                 double eps = kWindowEps) {
    std::int64_t right = e.k0;
    for (double v = e.v0; v > eps; v = g_map(v)) ++right;
    std::int64_t left = e.k0;
    for (double c = 1.0 - e.v0; c > eps; c = g_map(c)) --left;
    return {left, right};
}

/// Pins the approximating element at the median: k0 = k_n, v0 = F_n(k_n).
/// The parameter a_n = G^{k_n}(F_n(k_n)) is never formed.
inline HelixElement from_median_anchor(const TailFunction& f) {
    const std::int64_t k = exact::median(f);
    const double v = f(k);
    if (!(v > 0.0 && v < 1.0))
        throw DegenerateAnchor("from_median_anchor: F(" + std::to_string(k) + ") = " +
                               std::to_string(v) + " gives a degenerate anchor");
    return {k, v};
}

/// sup_x |F(x) - H(x + shift)| over the window where either function lies in
/// (eps, 1 - eps), plus eps. Outside the window both are within eps of the
/// same value in {0, 1}, so the result bounds the supremum over all of Z.
inline double sup_distance(const TailFunction& f, const HelixElement& e, std::int64_t shift,
                           double eps = kWindowEps) {
    auto [h_lo, h_hi] = nondegenerate_range(e, eps);
    const std::int64_t lo = std::min<std::int64_t>(0, h_lo - shift) - 1;
    const std::int64_t hi = std::max<std::int64_t>(f.hi(), h_hi - shift) + 1;
    const HelixSample h = sample_helix(e, lo + shift, hi + shift);
    double sup = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x) {
        const auto i = static_cast<std::size_t>(x - lo);
        const double ht = h.tail[i];
        const double fx = f(x);
        const double d = (fx > 0.5 && ht > 0.5) ? std::abs(f.complement(x) - h.comp[i])
                                                : std::abs(fx - ht);
        sup = std::max(sup, d);
    }
    return sup + eps;
}

struct CyclicPoint {
    std::int64_t n;
    std::int64_t k_n;
    double d_n;
};

/// d_n = sup_x |F_n(x) - element anchored at the median of F_n|, one streaming pass.
inline std::vector<CyclicPoint> cyclic_distance_curve(std::span<const std::int64_t> levels,
                                                      OpBudget* budget = nullptr) {
    std::vector<CyclicPoint> out;
    if (!std::is_sorted(levels.begin(), levels.end()))
        throw DomainError("cyclic_distance_curve: levels must be ascending");
    if (!levels.empty() && levels.front() < 1)
        throw DomainError("cyclic_distance_curve: levels must be >= 1");
    exact::Evolver ev(0.5, budget);
    for (std::int64_t n : levels) {
        const TailFunction& f = ev.advance_to(n);
        const HelixElement e = from_median_anchor(f);
        out.push_back({n, e.k0, sup_distance(f, e, 0)});
    }
    return out;
}

struct LimitEntry {
    std::int64_t k;
    std::int64_t n_k;
    double value;     // F_{n_k}(k)
    double distance;  // max_x |F^a(x) - F_{n_k}(x + k - z)|
    bool tie;         // |F_n(k) - target| equal at n_k and n_k + 1
};

struct LimitPointReport {
    double a;                // requested parameter
    double a_used;           // after the 1/2-avoidance perturbation
    bool perturbed = false;
    std::int64_t z;          // F^a(z-1) > 1/2 > F^a(z)
    HelixElement element;    // F^a anchored at z
    std::vector<LimitEntry> entries;
    /// each distance is at most 1.1 times the previous one
    bool nonincreasing_with_slack = true;
};

/// For k = 1, 2, ... finds the level n_k at which F_n(k) is closest to F^a(z)
/// (F_n(k) is nondecreasing in n, so the first crossing brackets it) and
/// measures the shifted distance to F^a. Stops after `count` entries.
inline LimitPointReport find_limit_point(double a, int count, OpBudget* budget = nullptr) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("find_limit_point: a must lie in (0,1)");
    if (count < 1) throw DomainError("find_limit_point: count must be >= 1");
    LimitPointReport rep{};
    rep.a = a;
    rep.a_used = a;
    HelixElement e = HelixElement::from_parameter(a);
    // some helix value equals 1/2 exactly: nudge the parameter
    if (std::abs(e.v0 - 0.5) < 1e-15) {
        rep.a_used = a + 1e-9 < 1.0 ? a + 1e-9 : a - 1e-9;
        rep.perturbed = true;
        e = HelixElement::from_parameter(rep.a_used);
    }
    rep.element = e;
    rep.z = e.k0;
    const double target = e.v0;

    exact::Evolver ev(0.5, budget);
    TailFunction prev = ev.current();
    std::int64_t k = 1;
    while (static_cast<int>(rep.entries.size()) < count) {
        const TailFunction& cur = ev.advance();
        while (static_cast<int>(rep.entries.size()) < count && cur(k) >= target) {
            const double gap_prev = std::abs(prev(k) - target);
            const double gap_cur = std::abs(cur(k) - target);
            const bool use_prev = gap_prev <= gap_cur && prev.level() >= 1 && prev(k) > 0.0;
            const TailFunction& chosen = use_prev ? prev : cur;
            LimitEntry entry{k, chosen.level(), chosen(k),
                             sup_distance(chosen, e, rep.z - k), gap_prev == gap_cur};
            if (!rep.entries.empty() &&
                entry.distance > 1.1 * rep.entries.back().distance)
                rep.nonincreasing_with_slack = false;
            rep.entries.push_back(entry);
            ++k;
        }
        prev = cur;
    }
    return rep;
}

/// 4F(x) - (F(x) + F(x-1))^2 for an element, evaluated in complement form left of 1/2.
inline double invariance_residual(const HelixElement& e, std::int64_t x) {
    const double f = helix_tail(e, x);
    const double fl = helix_tail(e, x - 1);
    return 4.0 * f - (f + fl) * (f + fl);
}

}  // namespace hmax::helix
