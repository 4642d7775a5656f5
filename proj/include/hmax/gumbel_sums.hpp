#pragma once

// Maxima of 2^n independent copies of an n-step integer random walk S_n.
//
// With L(gamma) = ln E exp(gamma xi), gamma* solves L - gamma L' = ln(1/2),
// rho* = L'(gamma*), sigma^2 = L''(gamma*), and
//
//   P(M_n < m) ~ exp(-exp(-gamma* (m - a_n))),
//   a_n = rho* n - ln[sqrt(2 pi n) sigma (1 - e^{-gamma*})] / gamma*.
//
// The exact side never simulates: P(M_n < m) = P(S_n < m)^{2^n}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "hmax/bisection.hpp"
#include "hmax/criticality.hpp"
#include "hmax/errors.hpp"
#include "hmax/lattice_pmf.hpp"

namespace hmax::gumbel {

enum class ConditionClass {
    unbounded_top,     // omega = infinity
    top_mass_below_half,  // omega finite, P(xi = omega) < 1/2
    violated,
};

inline const char* to_string(ConditionClass c) {
    switch (c) {
        case ConditionClass::unbounded_top: return "unbounded_top";
        case ConditionClass::top_mass_below_half: return "top_mass_below_half";
        case ConditionClass::violated: return "violated";
    }
    return "?";
}

struct SumScheme {
    LatticePmf step;
    std::int64_t omega;
    ConditionClass condition;
};

/// Finite support always has omega < infinity, so the class is (ii) or violated.
inline SumScheme classify(const LatticePmf& step) {
    const auto cls = step.top_probability() < 0.5 ? ConditionClass::top_mass_below_half
                                                  : ConditionClass::violated;
    return {step, step.max(), cls};
}

struct LogCumulant {
    double l;    // L(gamma)
    double dl;   // L'(gamma)
    double d2l;  // L''(gamma)
};

inline LogCumulant log_cumulant(const LatticePmf& step, double gamma) {
    const auto s = step.support();
    const auto p = step.probs();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.size(); ++i)
        top = std::max(top, std::log(p[i]) + gamma * static_cast<double>(s[i]));
    double z = 0.0, m1 = 0.0;
    std::vector<double> w(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        w[i] = std::exp(std::log(p[i]) + gamma * static_cast<double>(s[i]) - top);
        z += w[i];
    }
    for (std::size_t i = 0; i < s.size(); ++i) m1 += w[i] / z * static_cast<double>(s[i]);
    double var = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = static_cast<double>(s[i]) - m1;
        var += w[i] / z * d * d;
    }
    return {top + std::log(z), m1, var};
}

struct GumbelHelixParams {
    double gamma_star;
    double rho_star;
    double sigma;

    double a_n(std::int64_t n) const {
        const double nn = static_cast<double>(n);
        return rho_star * nn -
               std::log(std::sqrt(2.0 * std::numbers::pi * nn) * sigma *
                        (1.0 - std::exp(-gamma_star))) /
                   gamma_star;
    }

    /// L(gamma*) - gamma* L'(gamma*) - ln(1/2) for the given step law.
    double residual(const LatticePmf& step) const {
        const auto c = log_cumulant(step, gamma_star);
        return c.l - gamma_star * c.dl - std::log(0.5);
    }
};

inline GumbelHelixParams solve_gamma_star(const SumScheme& scheme) {
    if (scheme.condition == ConditionClass::violated)
        throw NoSolution("solve_gamma_star: P(xi = omega) = " +
                         std::to_string(scheme.step.top_probability()) +
                         " >= 1/2, L - gamma L' = ln(1/2) has no solution");
    auto h = [&](double g) {
        const auto c = log_cumulant(scheme.step, g);
        return c.l - g * c.dl - std::log(0.5);
    };
    const double hi = expand_bracket(h, 0.0, 1.0, 1e6);
    const double gamma = bisect(h, 0.0, hi, 1e-14);
    const auto c = log_cumulant(scheme.step, gamma);
    return {gamma, c.dl, std::sqrt(c.d2l)};
}

struct KappaBeta {
    double kappa;  // p (1 - rho*) / (q rho*)
    double beta;   // 2 pi rho* (1 - rho*)
    double rho_star;
};

/// Constants of the Bernoulli form, with rho* from the drift equation.
inline KappaBeta bernoulli_kappa_beta(double p) {
    if (!(p > 0.0 && p < 0.5))
        throw DomainError("bernoulli_kappa_beta: requires p<1/2, got p=" + std::to_string(p));
    const double rho = crit::solve_bdrift(p).rho01;
    const double q = 1.0 - p;
    return {p * (1.0 - rho) / (q * rho), 2.0 * std::numbers::pi * rho * (1.0 - rho), rho};
}

/// exp(-exp(-gamma* (m - a))), read as P(M <= m) for the helix element F^a.
inline double helix_gumbel(double a, std::int64_t m, double gamma_star) {
    if (!(gamma_star > 0.0)) throw DomainError("helix_gumbel: gamma* must be positive");
    const double t = -gamma_star * (static_cast<double>(m) - a);
    if (t > std::log(std::numeric_limits<double>::max())) return 0.0;
    return std::exp(-std::exp(t));
}

/// Log-pmf of S_n on [n min, n max], built by repeated log-space convolution.
class SumDistribution {
public:
    static constexpr std::int64_t kMaxLevel = 1024;

    SumDistribution(const LatticePmf& step, std::int64_t n) : n_(n), lo_(n * step.min()) {
        if (n < 0 || n > kMaxLevel)
            throw DomainError("SumDistribution: n must lie in [0, " + std::to_string(kMaxLevel) + "]");
        const auto s = step.support();
        std::vector<double> logp(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) logp[i] = std::log(step.probs()[i]);
        const std::int64_t width = step.max() - step.min();
        std::vector<double> cur{0.0};  // S_0 = 0, offset = 0
        const double ninf = -std::numeric_limits<double>::infinity();
        for (std::int64_t k = 0; k < n; ++k) {
            std::vector<double> next(cur.size() + static_cast<std::size_t>(width), ninf);
            for (std::size_t j = 0; j < next.size(); ++j) {
                double top = ninf;
                for (std::size_t i = 0; i < s.size(); ++i) {
                    const auto src = static_cast<std::int64_t>(j) - (s[i] - step.min());
                    if (src < 0 || src >= static_cast<std::int64_t>(cur.size())) continue;
                    top = std::max(top, cur[static_cast<std::size_t>(src)] + logp[i]);
                }
                if (top == ninf) continue;
                double acc = 0.0;
                for (std::size_t i = 0; i < s.size(); ++i) {
                    const auto src = static_cast<std::int64_t>(j) - (s[i] - step.min());
                    if (src < 0 || src >= static_cast<std::int64_t>(cur.size())) continue;
                    acc += std::exp(cur[static_cast<std::size_t>(src)] + logp[i] - top);
                }
                next[j] = top + std::log(acc);
            }
            cur = std::move(next);
        }
        logpmf_ = std::move(cur);
    }

    std::int64_t level() const { return n_; }
    std::int64_t lo() const { return lo_; }
    std::int64_t hi() const { return lo_ + static_cast<std::int64_t>(logpmf_.size()) - 1; }

    double log_pmf(std::int64_t s) const {
        if (s < lo_ || s > hi()) return -std::numeric_limits<double>::infinity();
        return logpmf_[static_cast<std::size_t>(s - lo_)];
    }

    /// ln P(S_n >= m)
    double log_upper(std::int64_t m) const { return log_sum(std::max(m, lo_), hi()); }
    /// ln P(S_n < m)
    double log_lower(std::int64_t m) const { return log_sum(lo_, std::min(m - 1, hi())); }

private:
    // ascending-magnitude accumulation of exp(l - max)
    double log_sum(std::int64_t from, std::int64_t to) const {
        const double ninf = -std::numeric_limits<double>::infinity();
        if (from > to) return ninf;
        std::vector<double> terms;
        for (std::int64_t s = from; s <= to; ++s) {
            const double l = log_pmf(s);
            if (l != ninf) terms.push_back(l);
        }
        if (terms.empty()) return ninf;
        std::sort(terms.begin(), terms.end());
        const double top = terms.back();
        double acc = 0.0;
        for (double l : terms) acc += std::exp(l - top);
        return top + std::log(acc);
    }

    std::int64_t n_;
    std::int64_t lo_;
    std::vector<double> logpmf_;
};

struct MaxCdf {
    double log_prob;  // ln P(M_n < m)
    bool underflow;   // -infinity: the probability is 0 or below double range
};

/// ln P(M_n < m) = 2^n ln(1 - P(S_n >= m)) for an already built S_n law.
inline MaxCdf log_max_cdf(const SumDistribution& sums, std::int64_t m) {
    const double log_t = sums.log_upper(m);
    double log1m;
    if (log_t <= std::log(0.5))
        log1m = std::log1p(-std::exp(log_t));
    else
        log1m = sums.log_lower(m);
    const double out = std::ldexp(log1m, static_cast<int>(sums.level()));
    return {out, std::isinf(out)};
}

inline MaxCdf exact_max_cdf(const SumScheme& scheme, std::int64_t n, std::int64_t m) {
    return log_max_cdf(SumDistribution(scheme.step, n), m);
}

struct BoundRow {
    std::int64_t n;
    double z;                  // m - (rho* n - ln n / (2 gamma*))
    std::int64_t m;
    double exact_neglog;       // -ln P(M_n < m)
    double asymptotic_neglog;  // exp(-gamma* (m - a_n))
    double ratio;              // exact / asymptotic
    double bernoulli_neglog;   // kappa^z' / (1 - kappa), NaN unless the step is {0,1}
    double reconciliation;     // |bernoulli / asymptotic - 1|, NaN unless {0,1}
    bool underflow;
};

/// Rows for every lattice point m with z = m - rho* n + ln n/(2 gamma*) in [z_lo, z_hi].
inline std::vector<BoundRow> verify_bound(const SumScheme& scheme, std::int64_t n, double z_lo,
                                          double z_hi) {
    if (n < 1) throw DomainError("verify_bound: n must be >= 1");
    if (!(z_lo <= z_hi)) throw DomainError("verify_bound: empty interval");
    const GumbelHelixParams params = solve_gamma_star(scheme);
    const SumDistribution sums(scheme.step, n);
    const double nn = static_cast<double>(n);
    const double center = params.rho_star * nn - std::log(nn) / (2.0 * params.gamma_star);
    const double an = params.a_n(n);

    const auto support = scheme.step.support();
    const bool bern01 = support.size() == 2 && support[0] == 0 && support[1] == 1 &&
                        scheme.step.probs()[1] < 0.5;
    KappaBeta kb{};
    if (bern01) kb = bernoulli_kappa_beta(scheme.step.probs()[1]);

    // S_n lives on n*min + span*Z
    const std::int64_t span = std::max<std::int64_t>(1, scheme.step.span());
    const std::int64_t origin = sums.lo();
    auto floor_to_lattice = [&](double x) {
        const auto steps = static_cast<std::int64_t>(std::floor((x - static_cast<double>(origin)) /
                                                                static_cast<double>(span)));
        return origin + steps * span;
    };

    std::vector<BoundRow> rows;
    std::int64_t m = floor_to_lattice(center + z_lo);
    if (static_cast<double>(m) - center < z_lo) m += span;
    for (; static_cast<double>(m) - center <= z_hi; m += span) {
        BoundRow row{};
        row.n = n;
        row.m = m;
        row.z = static_cast<double>(m) - center;
        const MaxCdf cdf = log_max_cdf(sums, m);
        row.underflow = cdf.underflow;
        row.exact_neglog = -cdf.log_prob;
        row.asymptotic_neglog = std::exp(-params.gamma_star * (static_cast<double>(m) - an));
        row.ratio = row.exact_neglog / row.asymptotic_neglog;
        if (bern01) {
            const double zb = static_cast<double>(m) - kb.rho_star * nn +
                              std::log(kb.beta * nn) / (2.0 * std::abs(std::log(kb.kappa)));
            row.bernoulli_neglog = std::pow(kb.kappa, zb) / (1.0 - kb.kappa);
            row.reconciliation = std::abs(row.bernoulli_neglog / row.asymptotic_neglog - 1.0);
        } else {
            row.bernoulli_neglog = std::numeric_limits<double>::quiet_NaN();
            row.reconciliation = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(row);
    }
    return rows;
}

inline double max_ratio_deviation(const std::vector<BoundRow>& rows) {
    double dev = 0.0;
    for (const auto& r : rows) dev = std::max(dev, std::abs(r.ratio - 1.0));
    return dev;
}

}  // namespace hmax::gumbel
