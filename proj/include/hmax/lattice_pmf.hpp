#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hmax/errors.hpp"

namespace hmax {

/// Finite-support pmf on the integers.
class LatticePmf {
public:
    LatticePmf(std::vector<std::int64_t> support, std::vector<double> probs) {
        if (support.empty()) throw DomainError("LatticePmf: empty support");
        if (support.size() != probs.size()) throw DomainError("LatticePmf: size mismatch");
        std::vector<std::size_t> order(support.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
        double total = 0.0;
        for (std::size_t i : order) {
            if (!(probs[i] > 0.0))
                throw DomainError("LatticePmf: weight at " + std::to_string(support[i]) +
                                  " is not positive");
            if (!support_.empty() && support_.back() == support[i])
                throw DomainError("LatticePmf: duplicate support point " +
                                  std::to_string(support[i]));
            support_.push_back(support[i]);
            probs_.push_back(probs[i]);
            total += probs[i];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw DomainError("LatticePmf: weights sum to " + std::to_string(total));
    }

    explicit LatticePmf(const std::map<std::int64_t, double>& weights)
        : LatticePmf(keys(weights), values(weights)) {}

    /// {0: 1-p, 1: p}
    static LatticePmf bernoulli01(double p) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("bernoulli01: p must lie in (0,1)");
        return LatticePmf({0, 1}, {1.0 - p, p});
    }

    /// {-1: 1-p, +1: p}
    static LatticePmf bernoulli_pm1(double p) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("bernoulli_pm1: p must lie in (0,1)");
        return LatticePmf({-1, 1}, {1.0 - p, p});
    }

    std::span<const std::int64_t> support() const { return support_; }
    std::span<const double> probs() const { return probs_; }
    std::size_t size() const { return support_.size(); }
    std::int64_t min() const { return support_.front(); }
    std::int64_t max() const { return support_.back(); }
    double top_probability() const { return probs_.back(); }

    /// gcd of the gaps between support points; 0 for a point mass.
    std::int64_t span() const {
        std::int64_t d = 0;
        for (std::size_t i = 1; i < support_.size(); ++i)
            d = std::gcd(d, support_[i] - support_[0]);
        return d;
    }

private:
    static std::vector<std::int64_t> keys(const std::map<std::int64_t, double>& m) {
        std::vector<std::int64_t> out;
        for (const auto& [k, v] : m) out.push_back(k);
        return out;
    }
    static std::vector<double> values(const std::map<std::int64_t, double>& m) {
        std::vector<double> out;
        for (const auto& [k, v] : m) out.push_back(v);
        return out;
    }

    std::vector<std::int64_t> support_;
    std::vector<double> probs_;
};

}  // namespace hmax
