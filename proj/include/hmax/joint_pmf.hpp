#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hmax/errors.hpp"

namespace hmax {

/// Truncated joint law of (M'_n, min(K_n, k_max)), where K_n counts the
/// level-n vertices attaining the maximum. The cell k = k_max pools every
/// count >= k_max.
class JointPmf {
public:
    JointPmf(std::int64_t level, double p, int k_max, std::int64_t x_max)
        : level_(level), p_(p), k_max_(k_max), x_max_(x_max),
          mass_(static_cast<std::size_t>((x_max + 1) * k_max), 0.0) {
        if (k_max < 2) throw DomainError("JointPmf: k_max must be >= 2");
        if (x_max < 0) throw DomainError("JointPmf: negative x range");
    }

    std::int64_t level() const { return level_; }
    double bias() const { return p_; }
    int k_max() const { return k_max_; }
    /// Largest x with a stored cell.
    std::int64_t x_max() const { return x_max_; }

    double operator()(std::int64_t x, int k) const {
        if (x < 0 || x > x_max_ || k < 1 || k > k_max_) return 0.0;
        return mass_[index(x, k)];
    }
    double& at(std::int64_t x, int k) {
        if (x < 0 || x > x_max_ || k < 1 || k > k_max_)
            throw DomainError("JointPmf: cell (" + std::to_string(x) + "," + std::to_string(k) +
                              ") out of range");
        return mass_[index(x, k)];
    }

    double total() const {
        double s = 0.0;
        for (double v : mass_) s += v;
        return s;
    }

    /// P(M'_n = x) for x in [0, x_max].
    std::vector<double> marginal() const {
        std::vector<double> out(static_cast<std::size_t>(x_max_ + 1), 0.0);
        for (std::int64_t x = 0; x <= x_max_; ++x)
            for (int k = 1; k <= k_max_; ++k) out[static_cast<std::size_t>(x)] += (*this)(x, k);
        return out;
    }

    /// E[base^K], pooled cell evaluated at k_max.
    double expect_power(double base) const {
        double s = 0.0;
        for (std::int64_t x = 0; x <= x_max_; ++x)
            for (int k = 1; k <= k_max_; ++k) s += (*this)(x, k) * std::pow(base, k);
        return s;
    }

private:
    std::size_t index(std::int64_t x, int k) const {
        return static_cast<std::size_t>(x * k_max_ + (k - 1));
    }

    std::int64_t level_;
    double p_;
    int k_max_;
    std::int64_t x_max_;
    std::vector<double> mass_;
};

}  // namespace hmax
