#pragma once

// The mutually inverse maps g and G that generate the invariant helix of the
// symmetric tail recurrence:
//
//   g(y) = 2 - y - 2 sqrt(1 - y) = (1 - sqrt(1 - y))^2
//   G(y) = 2 sqrt(y) - y
//
// together with the duality g(1 - y) = 1 - G(y), which lets values close to 1
// be carried as complements without cancellation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "hmax/errors.hpp"

namespace hmax {

inline constexpr double kProbabilitySlack = 1e-12;

namespace detail {

inline double checked_probability(double y, const char* who) {
    if (!(y >= -kProbabilitySlack && y <= 1.0 + kProbabilitySlack))
        throw DomainError(std::string(who) + ": argument " + std::to_string(y) + " outside [0,1]");
    return std::clamp(y, 0.0, 1.0);
}

}  // namespace detail

/// g(y) = (1 - sqrt(1-y))^2, evaluated as (y / (1 + sqrt(1-y)))^2 so that
/// neither end of [0,1] cancels.
inline double g_map(double y) {
    y = detail::checked_probability(y, "g_map");
    const double r = y / (1.0 + std::sqrt(1.0 - y));
    return std::clamp(r * r, 0.0, 1.0);
}

inline double G_map(double y) {
    y = detail::checked_probability(y, "G_map");
    return std::clamp(2.0 * std::sqrt(y) - y, 0.0, 1.0);
}

enum class MapKind { g, G };

inline double iterate_map(MapKind which, double y, std::int64_t steps) {
    if (steps < 0) throw DomainError("iterate_map: negative step count");
    y = detail::checked_probability(y, "iterate_map");
    for (std::int64_t i = 0; i < steps; ++i) {
        y = which == MapKind::g ? g_map(y) : G_map(y);
        // both maps fix 0 and 1
        if (y == 0.0 || y == 1.0) break;
    }
    return y;
}

}  // namespace hmax
