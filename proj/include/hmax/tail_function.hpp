#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hmax/errors.hpp"

namespace hmax {

inline constexpr double kPruneFloor = 1e-300;

/// Tail F(x) = P(M' >= x) of the normalized deficiency M' = (n - M_n)/2 on the integers.
///
/// F(x) = 1 for x <= 0 is implicit. Cells x in [first, hi] are stored twice,
/// as F(x) and as 1 - F(x); each copy is accurate in the regime where it is
/// small, which is what the tail recurrence needs to move the front correctly.
/// Cells 1 <= x < first have F(x) = 1 after rounding (complement below the
/// prune floor) and cells x > hi have F(x) below the prune floor.
class TailFunction {
public:
    TailFunction() = default;

    /// F_0: M'_0 = 0 almost surely.
    static TailFunction initial(double p) {
        check_bias(p);
        TailFunction f;
        f.level_ = 0;
        f.p_ = p;
        f.first_ = 1;
        return f;
    }

    /// Builds a tail from explicit values F(1), F(2), ... and validates every invariant.
    static TailFunction from_values(std::int64_t level, double p, std::span<const double> tail) {
        std::vector<double> comp(tail.size());
        for (std::size_t i = 0; i < tail.size(); ++i) comp[i] = 1.0 - tail[i];
        return from_dual(level, p, 1, {tail.begin(), tail.end()}, std::move(comp));
    }

    /// Builds from both representations; cells below `first` are 1.
    static TailFunction from_dual(std::int64_t level, double p, std::int64_t first,
                                  std::vector<double> tail, std::vector<double> comp) {
        if (level < 0) throw DomainError("TailFunction: negative level");
        check_bias(p);
        if (first < 1) throw DomainError("TailFunction: first stored cell must be >= 1");
        if (tail.size() != comp.size())
            throw DomainError("TailFunction: tail/complement size mismatch");
        double prev = 1.0;
        for (std::size_t i = 0; i < tail.size(); ++i) {
            const double v = tail[i];
            if (!(v >= 0.0 && v <= 1.0))
                throw DomainError("TailFunction: value outside [0,1] at x=" +
                                  std::to_string(first + static_cast<std::int64_t>(i)));
            if (!(comp[i] >= 0.0 && comp[i] <= 1.0))
                throw DomainError("TailFunction: complement outside [0,1]");
            if (v > prev)
                throw DomainError("TailFunction: values not nonincreasing at x=" +
                                  std::to_string(first + static_cast<std::int64_t>(i)));
            prev = v;
        }
        TailFunction f;
        f.level_ = level;
        f.p_ = p;
        f.first_ = first;
        f.tail_ = std::move(tail);
        f.comp_ = std::move(comp);
        f.trim();
        if (f.hi() > level)
            throw DomainError("TailFunction: hi=" + std::to_string(f.hi()) + " exceeds level " +
                              std::to_string(level));
        return f;
    }

    std::int64_t level() const { return level_; }
    double bias() const { return p_; }
    std::int64_t first() const { return first_; }
    /// Largest x with F(x) above the prune floor; 0 for F_0.
    std::int64_t hi() const { return first_ + static_cast<std::int64_t>(tail_.size()) - 1; }
    double prune_floor() const { return kPruneFloor; }

    double operator()(std::int64_t x) const {
        if (x < first_) return 1.0;
        if (x > hi()) return 0.0;
        return tail_[static_cast<std::size_t>(x - first_)];
    }

    /// 1 - F(x), accurate in relative terms when F(x) is close to 1.
    double complement(std::int64_t x) const {
        if (x < first_) return 0.0;
        if (x > hi()) return 1.0;
        return comp_[static_cast<std::size_t>(x - first_)];
    }

    std::span<const double> stored_tail() const { return tail_; }
    std::span<const double> stored_complement() const { return comp_; }

    /// CSV `x,F` for x in [1, hi], 17 significant digits.
    void write_csv(std::ostream& os) const {
        os << "x,F\n";
        char buf[64];
        for (std::int64_t x = 1; x <= hi(); ++x) {
            std::snprintf(buf, sizeof buf, "%lld,%.17g\n", static_cast<long long>(x), (*this)(x));
            os << buf;
        }
    }

private:
    static void check_bias(double p) {
        if (!(p >= 0.0 && p <= 1.0))
            throw DomainError("TailFunction: bias p=" + std::to_string(p) + " outside [0,1]");
    }

    void trim() {
        std::size_t lead = 0;
        while (lead < comp_.size() && comp_[lead] < kPruneFloor) ++lead;
        if (lead > 0) {
            tail_.erase(tail_.begin(), tail_.begin() + static_cast<std::ptrdiff_t>(lead));
            comp_.erase(comp_.begin(), comp_.begin() + static_cast<std::ptrdiff_t>(lead));
            first_ += static_cast<std::int64_t>(lead);
        }
        while (!tail_.empty() && tail_.back() < kPruneFloor) {
            tail_.pop_back();
            comp_.pop_back();
        }
    }

    std::int64_t level_ = 0;
    double p_ = 0.5;
    std::int64_t first_ = 1;
    std::vector<double> tail_;
    std::vector<double> comp_;
};

}  // namespace hmax
