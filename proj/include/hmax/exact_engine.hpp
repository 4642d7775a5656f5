#pragma once

// Exact evolution of the tail function F_n(x) = P(M'_n >= x) under
//
//   F_{n+1}(x) = [p F_n(x) + q F_n(x-1)]^2,   q = 1 - p,
//
// starting from F_0 = 1{x <= 0}, plus the statistics derived from it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "hmax/budget.hpp"
#include "hmax/errors.hpp"
#include "hmax/joint_pmf.hpp"
#include "hmax/tail_function.hpp"

namespace hmax::exact {

namespace detail {

inline void check_bias(double p, const char* who) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError(std::string(who) + ": p must lie in (0,1), got " + std::to_string(p));
}

struct Cell {
    double tail;
    double comp;
};

/// One cell of the recurrence from (F(x), F(x-1)) and their complements.
/// w + u = 1; whichever of the two is at most 1/2 decides the branch.
inline Cell recurrence_cell(double p, double q, double f_x, double f_prev, double c_x,
                            double c_prev) {
    const double w = p * f_x + q * f_prev;
    if (w <= 0.5) {
        const double t = w * w;
        return {t, 1.0 - t};
    }
    const double u = p * c_x + q * c_prev;
    const double c = u * (2.0 - u);
    return {1.0 - c, c};
}

}  // namespace detail

inline TailFunction step_tail(const TailFunction& f, double p) {
    detail::check_bias(p, "step_tail");
    const double q = 1.0 - p;
    const std::int64_t lo = f.first();
    const std::int64_t hi = f.hi() + 1;
    std::vector<double> tail;
    std::vector<double> comp;
    tail.reserve(static_cast<std::size_t>(hi - lo + 1));
    comp.reserve(static_cast<std::size_t>(hi - lo + 1));
    double last_tail = 1.0;
    double last_comp = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x) {
        auto [t, c] = detail::recurrence_cell(p, q, f(x), f(x - 1), f.complement(x),
                                              f.complement(x - 1));
        // absorb 1-ulp excursions so the result stays a valid tail
        t = std::clamp(t, 0.0, last_tail);
        c = std::clamp(c, last_comp, 1.0);
        tail.push_back(t);
        comp.push_back(c);
        last_tail = t;
        last_comp = c;
    }
    return TailFunction::from_dual(f.level() + 1, p, lo, std::move(tail), std::move(comp));
}

/// Streaming evolution from F_0; keeps only the current level.
class Evolver {
public:
    explicit Evolver(double p, OpBudget* budget = nullptr)
        : p_(p), budget_(budget), current_(TailFunction::initial(p)) {
        detail::check_bias(p, "Evolver");
    }

    const TailFunction& current() const { return current_; }
    std::int64_t level() const { return current_.level(); }

    const TailFunction& advance() {
        charge(budget_, static_cast<std::uint64_t>(current_.hi() - current_.first() + 2));
        current_ = step_tail(current_, p_);
        return current_;
    }

    const TailFunction& advance_to(std::int64_t n) {
        while (current_.level() < n) advance();
        return current_;
    }

private:
    double p_;
    OpBudget* budget_;
    TailFunction current_;
};

inline TailFunction evolve(std::int64_t n, double p, OpBudget* budget = nullptr) {
    if (n < 0) throw DomainError("evolve: negative level");
    Evolver ev(p, budget);
    return ev.advance_to(n);
}

/// k_n = inf{x : F(x) <= 1/2}; a value of exactly 1/2 qualifies.
inline std::int64_t median(const TailFunction& f) {
    for (std::int64_t x = std::max<std::int64_t>(1, f.first()); x <= f.hi(); ++x)
        if (f(x) <= 0.5) return x;
    return std::max<std::int64_t>(1, f.hi() + 1);
}

/// Delta_n = sum_x [F_{n+1}(x) - F_n(x)] = E(M'_{n+1} - M'_n).
inline double delta_n(const TailFunction& fn, const TailFunction& fnext) {
    if (fnext.level() != fn.level() + 1)
        throw DomainError("delta_n: level mismatch (" + std::to_string(fn.level()) + " -> " +
                          std::to_string(fnext.level()) + ")");
    const std::int64_t lo = std::min(fn.first(), fnext.first());
    const std::int64_t hi = std::max(fn.hi(), fnext.hi());
    double sum = 0.0;
    for (std::int64_t x = std::max<std::int64_t>(1, lo); x <= hi; ++x) {
        if (fn(x) > 0.5 && fnext(x) > 0.5)
            sum += fn.complement(x) - fnext.complement(x);
        else
            sum += fnext(x) - fn(x);
    }
    return sum;
}

/// Sum of F(x) over x >= 1, i.e. E M'_n.
inline double tail_sum(const TailFunction& f) {
    double s = 0.0;
    for (double v : f.stored_tail()) s += v;
    return s + static_cast<double>(f.first() - 1);
}

/// E M_n = n - 2 E M'_n, on the original +-1 scale.
inline double expected_max(const TailFunction& f) {
    return static_cast<double>(f.level()) - 2.0 * tail_sum(f);
}

/// The unique non-degenerate solution of F(x) = [p F(x) + q F(x-1)]^2 with
/// F(x) = 1 for x <= 0, for p > 1/2. Each cell is the smaller root
///   sqrt F(x) = 2 q F(x-1) / (1 + sqrt(1 - 4 p q F(x-1))),
/// algebraically the closed form (2p^2)^{-1}[1 - 2F(x-1)pq - sqrt(1 - 4F(x-1)pq)]
/// without its cancellation for small F(x-1).
/// The result is stored with level = x_max so that hi <= level holds.
inline TailFunction fixed_point_supercritical(double p, std::int64_t x_max) {
    detail::check_bias(p, "fixed_point_supercritical");
    if (!(p > 0.5))
        throw DomainError("fixed_point_supercritical: requires p>1/2 (no non-degenerate solution)");
    if (x_max < 1) throw DomainError("fixed_point_supercritical: x_max must be >= 1");
    const double q = 1.0 - p;
    std::vector<double> tail;
    std::vector<double> comp;
    double prev = 1.0;
    for (std::int64_t x = 1; x <= x_max; ++x) {
        const double s = 2.0 * q * prev / (1.0 + std::sqrt(1.0 - 4.0 * p * q * prev));
        const double v = s * s;
        if (v < kPruneFloor) break;
        tail.push_back(v);
        comp.push_back(1.0 - v);
        prev = v;
    }
    return TailFunction::from_dual(x_max, p, 1, std::move(tail), std::move(comp));
}

/// F(x) - [p F(x) + q F(x-1)]^2
inline double fixed_point_residual(const TailFunction& f, double p, std::int64_t x) {
    const double w = p * f(x) + (1.0 - p) * f(x - 1);
    return f(x) - w * w;
}

/// Extinction probabilities q_1..q_n of the critical Galton-Watson process with
/// offspring law (1/4, 1/2, 1/4): q_{k+1} = ((1 + q_k)/2)^2, q_0 = 0.
/// Runs the x = 1 column of the symmetric tail recurrence cell by cell, so
/// q_k equals evolve(k, 1/2)(1) exactly.
inline std::vector<double> gw_extinction_curve(std::int64_t n) {
    if (n < 1) throw DomainError("gw_extinction_curve: n must be >= 1");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    double tail = 0.0;
    double comp = 1.0;
    for (std::int64_t k = 0; k < n; ++k) {
        const auto cell = detail::recurrence_cell(0.5, 0.5, tail, 1.0, comp, 0.0);
        tail = cell.tail;
        comp = cell.comp;
        out.push_back(tail);
    }
    return out;
}

struct JointReport {
    JointPmf pmf;
    /// E[4^{-K_n}], pooled cell at k_max: an upper bound on the untruncated value.
    double e_4_pow_minus_k;
    /// E[2^{-K_n}].
    double e_2_pow_minus_k;
    /// E[q^{2 K_n}] = P(M_{n+1} - M_n = -1); equals e_4_pow_minus_k when p = 1/2.
    double e_q_pow_2k;
    /// E(M_{n+1} - M_n) = 1 - 2 E[q^{2K_n}].
    double increment_mean;
    /// 1 - 2 E[2^{-K_n}], kept for comparison.
    double increment_mean_2_pow;
};

/// Exact joint law of (M'_n, min(K_n, k_max)).
///
/// A level-(n+1) tree is two level-n subtrees hanging off edges with
/// deficiency increments B~ in {0 (prob p), 1 (prob q)}. With Y_i = M'_i + B~_i,
/// M'_{n+1} = min(Y_1, Y_2) and K_{n+1} sums K_i over the subtrees attaining it.
inline JointReport joint_evolve(std::int64_t n, double p, int k_max = 64,
                                OpBudget* budget = nullptr) {
    detail::check_bias(p, "joint_evolve");
    if (n < 0) throw DomainError("joint_evolve: negative level");
    if (k_max < 2) throw DomainError("joint_evolve: k_max must be >= 2");
    if (budget != nullptr) {
        const double estimate = static_cast<double>(n) * std::pow(static_cast<double>(n) * k_max, 2);
        if (estimate > static_cast<double>(budget->limit() - budget->used()))
            throw BudgetExceeded("joint_evolve: estimated " + std::to_string(estimate) +
                                 " operations exceed the budget");
    }
    const double q = 1.0 - p;
    const auto K = static_cast<std::size_t>(k_max);

    // rows[x][k-1]
    std::vector<std::vector<double>> rows(1, std::vector<double>(K, 0.0));
    rows[0][0] = 1.0;

    for (std::int64_t level = 0; level < n; ++level) {
        const std::size_t width = rows.size() + 1;
        std::vector<std::vector<double>> a(width, std::vector<double>(K, 0.0));
        std::vector<double> row_mass(width, 0.0);
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t k = 0; k < K; ++k) {
                double v = 0.0;
                if (x < rows.size()) v += p * rows[x][k];
                if (x >= 1) v += q * rows[x - 1][k];
                a[x][k] = v;
                row_mass[x] += v;
            }
        }
        std::vector<double> above(width, 0.0);  // P(Y > x)
        for (std::size_t x = width - 1; x-- > 0;) above[x] = above[x + 1] + row_mass[x + 1];

        std::vector<std::vector<double>> next(width, std::vector<double>(K, 0.0));
        std::uint64_t ops = 0;
        for (std::size_t x = 0; x < width; ++x) {
            if (row_mass[x] < 1e-300) continue;
            auto& out = next[x];
            for (std::size_t k = 0; k < K; ++k) out[k] += 2.0 * a[x][k] * above[x];
            for (std::size_t k1 = 0; k1 < K; ++k1) {
                if (a[x][k1] == 0.0) continue;
                for (std::size_t k2 = 0; k2 < K; ++k2) {
                    const std::size_t k = std::min(k1 + k2 + 1, K - 1);  // counts k1+1 + k2+1
                    out[k] += a[x][k1] * a[x][k2];
                }
            }
            ops += K * K;
        }
        charge(budget, ops + width * K);
        // total' = total^2 doubles any rounding deficit each level; undo it
        double total = 0.0;
        for (const auto& row : next)
            for (double v : row) total += v;
        for (auto& row : next)
            for (double& v : row) v /= total;
        while (next.size() > 1) {
            double m = 0.0;
            for (double v : next.back()) m += v;
            if (m >= 1e-300) break;
            next.pop_back();
        }
        rows = std::move(next);
    }

    JointPmf pmf(n, p, k_max, static_cast<std::int64_t>(rows.size()) - 1);
    for (std::size_t x = 0; x < rows.size(); ++x)
        for (std::size_t k = 0; k < K; ++k)
            pmf.at(static_cast<std::int64_t>(x), static_cast<int>(k + 1)) = rows[x][k];

    const double e4 = pmf.expect_power(0.25);
    const double e2 = pmf.expect_power(0.5);
    const double eq = pmf.expect_power(q * q);
    return JointReport{std::move(pmf), e4, e2, eq, 1.0 - 2.0 * eq, 1.0 - 2.0 * e2};
}

}  // namespace hmax::exact
