#pragma once

#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>

#include "hmax/errors.hpp"

namespace hmax {

/// Counts elementary DP operations against a cap. Not thread-safe; one budget per computation.
class OpBudget {
public:
    static constexpr std::uint64_t kDefaultLimit = 200'000'000'000ULL;

    explicit OpBudget(std::uint64_t limit = kDefaultLimit) : limit_(limit) {}

    /// Reads HELIX_BUDGET_OPS; falls back to the default limit when unset.
    static OpBudget from_env() {
        const char* raw = std::getenv("HELIX_BUDGET_OPS");
        if (raw == nullptr || *raw == '\0') return OpBudget{};
        char* end = nullptr;
        const double value = std::strtod(raw, &end);
        if (end == raw || *end != '\0' || !(value >= 0.0))
            throw DomainError(std::string("HELIX_BUDGET_OPS is not a nonnegative number: ") + raw);
        if (value >= static_cast<double>(std::numeric_limits<std::uint64_t>::max()))
            return OpBudget{std::numeric_limits<std::uint64_t>::max()};
        return OpBudget{static_cast<std::uint64_t>(value)};
    }

    void charge(std::uint64_t ops) {
        if (ops > limit_ - used_) {
            throw BudgetExceeded("operation budget exceeded (limit " + std::to_string(limit_) +
                                 ", used " + std::to_string(used_) + ", requested " +
                                 std::to_string(ops) + ")");
        }
        used_ += ops;
    }

    /// Throws without charging if `ops` would not fit.
    void require(std::uint64_t ops) const {
        if (ops > limit_ - used_)
            throw BudgetExceeded("operation budget exceeded: estimate " + std::to_string(ops) +
                                 " exceeds remaining " + std::to_string(limit_ - used_));
    }

    std::uint64_t used() const { return used_; }
    std::uint64_t limit() const { return limit_; }

private:
    std::uint64_t limit_;
    std::uint64_t used_ = 0;
};

inline void charge(OpBudget* budget, std::uint64_t ops) {
    if (budget != nullptr) budget->charge(ops);
}

}  // namespace hmax
