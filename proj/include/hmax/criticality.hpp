#pragma once

// One-generation functionals of a branching random walk with m children per
// particle and i.i.d. displacements:
//
//   Phi(gamma) = E sum_{|x|=1} exp(gamma V(x)) = m E exp(gamma xi)
//   Psi = ln Phi,   R(gamma) = gamma Psi'(gamma) - Psi(gamma)
//
// and the tilt V -> gamma V - |x| Psi(gamma) that reduces the walk to the
// critical (boundary) case when R has a positive root.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hmax/bisection.hpp"
#include "hmax/errors.hpp"

namespace hmax::crit {

struct Tilt {
    double gamma;
    double shift_per_level;
};

class ProgenySpec {
public:
    ProgenySpec(int children, std::vector<double> displacement, std::vector<double> probs,
                std::optional<Tilt> tilt = std::nullopt)
        : m_(children), tilt_(tilt) {
        if (children < 2) throw DomainError("ProgenySpec: need at least 2 children");
        if (displacement.empty() || displacement.size() != probs.size())
            throw DomainError("ProgenySpec: displacement/probability size mismatch");
        std::vector<std::size_t> order(displacement.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return displacement[a] < displacement[b]; });
        double total = 0.0;
        for (std::size_t i : order) {
            if (!(probs[i] > 0.0) || !std::isfinite(displacement[i]))
                throw DomainError("ProgenySpec: weights must be positive and points finite");
            if (!v_.empty() && v_.back() == displacement[i])
                throw DomainError("ProgenySpec: duplicate displacement");
            v_.push_back(displacement[i]);
            p_.push_back(probs[i]);
            total += probs[i];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw DomainError("ProgenySpec: weights sum to " + std::to_string(total));
    }

    /// Binary splitting with displacements +1 (prob p) and -1 (prob 1-p).
    static ProgenySpec bernoulli_pm1(double p, int children = 2) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("bernoulli_pm1: p must lie in (0,1)");
        return ProgenySpec(children, {-1.0, 1.0}, {1.0 - p, p});
    }

    int children() const { return m_; }
    const std::vector<double>& displacement() const { return v_; }
    const std::vector<double>& probs() const { return p_; }
    const std::optional<Tilt>& tilt() const { return tilt_; }

private:
    int m_;
    std::vector<double> v_;
    std::vector<double> p_;
    std::optional<Tilt> tilt_;
};

struct Cumulants {
    double phi;    // may be +inf for large gamma; psi stays finite
    double psi;
    double dpsi;   // tilted mean of the displacement
    double d2psi;  // tilted variance
    double r;
};

inline Cumulants cumulants(const ProgenySpec& spec, double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("cumulants: gamma must be >= 0");
    const auto& v = spec.displacement();
    const auto& p = spec.probs();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) top = std::max(top, std::log(p[i]) + gamma * v[i]);
    double z = 0.0;
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        w[i] = std::exp(std::log(p[i]) + gamma * v[i] - top);
        z += w[i];
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) mean += (w[i] / z) * v[i];
    double var = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) var += (w[i] / z) * (v[i] - mean) * (v[i] - mean);
    const double psi = std::log(static_cast<double>(spec.children())) + top + std::log(z);
    return {std::exp(psi), psi, mean, var, gamma * mean - psi};
}

/// lim_{gamma -> inf} R(gamma) = -ln(m P(xi = v_max)).
inline double r_infinity(const ProgenySpec& spec) {
    return -std::log(spec.children() * spec.probs().back());
}

inline double solve_critical_gamma(const ProgenySpec& spec) {
    const double r_inf = r_infinity(spec);
    if (!(r_inf > 0.0))
        throw NoCriticalTilt("solve_critical_gamma: lim R(gamma) = " + std::to_string(r_inf) +
                             " <= 0, no critical tilt exists");
    auto r = [&](double g) { return cumulants(spec, g).r; };
    const double hi = expand_bracket(r, 0.0, 1.0, 1e6);
    return bisect(r, 0.0, hi, 1e-13);
}

/// Displacements become gamma v - Psi(gamma), which makes
/// E sum e^V = 1 and E sum V e^V = 0.
inline ProgenySpec reduce_to_critical(const ProgenySpec& spec) {
    const double gamma = solve_critical_gamma(spec);
    const double psi = cumulants(spec, gamma).psi;
    std::vector<double> tilted;
    tilted.reserve(spec.displacement().size());
    for (double v : spec.displacement()) tilted.push_back(gamma * v - psi);
    Tilt t{gamma, psi};
    if (spec.tilt()) t = {spec.tilt()->gamma * gamma, gamma * spec.tilt()->shift_per_level + psi};
    return ProgenySpec(spec.children(), std::move(tilted), spec.probs(), t);
}

/// E sum_{|x|=1} e^{V(x)} and E sum_{|x|=1} V(x) e^{V(x)}.
struct CriticalIdentities {
    double sum_exp;
    double sum_v_exp;
};

inline CriticalIdentities critical_identities(const ProgenySpec& spec) {
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t i = 0; i < spec.probs().size(); ++i) {
        const double v = spec.displacement()[i];
        const double e = spec.probs()[i] * std::exp(v);
        s0 += e;
        s1 += v * e;
    }
    const double m = spec.children();
    return {m * s0, m * s1};
}

namespace detail {

/// Is x within tol of a rational with denominator <= max_den? (continued fractions)
inline bool near_rational(double x, long long max_den = 10'000, double tol = 1e-11) {
    const double target = x;
    long long h_prev = 1, h = static_cast<long long>(std::floor(x));
    long long k_prev = 0, k = 1;
    double frac = x - std::floor(x);
    for (int iter = 0; iter < 64; ++iter) {
        if (std::abs(target - static_cast<double>(h) / static_cast<double>(k)) <=
            tol * std::max(1.0, std::abs(target)))
            return true;
        if (frac < 1e-15) return false;
        const double inv = 1.0 / frac;
        const long long a = static_cast<long long>(std::floor(inv));
        frac = inv - std::floor(inv);
        const long long h_next = a * h + h_prev;
        const long long k_next = a * k + k_prev;
        if (k_next > max_den) return false;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
    return false;
}

}  // namespace detail

/// All support points in a + dZ for some d > 0: every gap is a rational
/// multiple of the smallest one.
inline bool is_lattice(const std::vector<double>& support) {
    if (support.size() <= 2) return true;
    double base = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < support.size(); ++i)
        base = std::min(base, std::abs(support[i] - support[0]));
    for (std::size_t i = 1; i < support.size(); ++i)
        if (!detail::near_rational((support[i] - support[0]) / base)) return false;
    return true;
}

struct AidekonReport {
    bool supercritical;          // E sum 1 > 1
    bool critical_mean_shift;    // E sum e^V = 1 and E sum V e^V = 0 (1e-10)
    bool moments_finite;         // second-moment and X, X~ log-moment conditions
    bool lattice;
    bool limit_law_applicable;
    double mean_children;
    double sum_exp;
    double sum_v_exp;
    double sum_v2_exp;
    double x_log2_moment;        // E[X (ln+ X)^2], X = sum e^V  (NaN if not enumerated)
    double xtilde_log_moment;    // E[X~ ln+ X~], X~ = sum V_- e^V
};

inline AidekonReport check_aidekon(const ProgenySpec& spec) {
    AidekonReport rep{};
    const auto& v = spec.displacement();
    const auto& p = spec.probs();
    const int m = spec.children();
    rep.mean_children = m;
    rep.supercritical = m > 1;
    const auto ids = critical_identities(spec);
    rep.sum_exp = ids.sum_exp;
    rep.sum_v_exp = ids.sum_v_exp;
    rep.critical_mean_shift =
        std::abs(ids.sum_exp - 1.0) < 1e-10 && std::abs(ids.sum_v_exp) < 1e-10;
    double s2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s2 += p[i] * v[i] * v[i] * std::exp(v[i]);
    rep.sum_v2_exp = m * s2;

    // X and X~ are functions of the m children's displacements; enumerate the
    // product support when it is small enough.
    const double combos = std::pow(static_cast<double>(v.size()), m);
    if (combos <= 1e6) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
        double ex = 0.0, ext = 0.0;
        while (true) {
            double prob = 1.0, x = 0.0, xt = 0.0;
            for (std::size_t j : idx) {
                prob *= p[j];
                x += std::exp(v[j]);
                xt += std::max(0.0, -v[j]) * std::exp(v[j]);
            }
            const double lx = std::max(0.0, std::log(x));
            ex += prob * x * lx * lx;
            if (xt > 0.0) ext += prob * xt * std::max(0.0, std::log(xt));
            std::size_t pos = 0;
            while (pos < idx.size() && ++idx[pos] == v.size()) idx[pos++] = 0;
            if (pos == idx.size()) break;
        }
        rep.x_log2_moment = ex;
        rep.xtilde_log_moment = ext;
    } else {
        rep.x_log2_moment = std::numeric_limits<double>::quiet_NaN();
        rep.xtilde_log_moment = std::numeric_limits<double>::quiet_NaN();
    }
    // finite support: every moment is a finite sum
    rep.moments_finite = std::isfinite(rep.sum_v2_exp);
    rep.lattice = is_lattice(v);
    rep.limit_law_applicable =
        rep.supercritical && rep.critical_mean_shift && rep.moments_finite && !rep.lattice;
    return rep;
}

struct DriftSolution {
    double rho01;      // root of ln 2 = rho ln(rho/p) + (1-rho) ln((1-rho)/q) on (p, 1)
    double speed_pm1;  // 2 rho01 - 1: linear speed of E M_n on the +-1 scale
    double residual;   // 2 p^rho q^{1-rho} - rho^rho (1-rho)^{1-rho}
};

inline DriftSolution solve_bdrift(double p) {
    if (!(p > 0.0 && p < 0.5))
        throw DomainError("solve_bdrift: requires p<1/2, got p=" + std::to_string(p));
    const double q = 1.0 - p;
    auto xlog = [](double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); };
    auto h = [&](double rho) { return xlog(rho, p) + xlog(1.0 - rho, q) - std::log(2.0); };
    const double rho = bisect(h, p, 1.0, 1e-15);
    const double resid = 2.0 * std::pow(p, rho) * std::pow(q, 1.0 - rho) -
                         std::pow(rho, rho) * std::pow(1.0 - rho, 1.0 - rho);
    return {rho, 2.0 * rho - 1.0, resid};
}

}  // namespace hmax::crit
