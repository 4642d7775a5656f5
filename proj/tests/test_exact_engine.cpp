#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "hmax/exact_engine.hpp"
#include "hmax/maps.hpp"

using namespace hmax;

namespace {

// Law of (M_n, K_n) by enumerating every edge configuration of the depth-n
// binary tree. Edges are numbered heap-style: node v > 0 hangs off edge v-1.
std::map<std::pair<int, int>, double> brute_force_joint(int n, double p) {
    const int nodes = (1 << (n + 1)) - 1;
    const int edges = nodes - 1;
    std::map<std::pair<int, int>, double> law;
    for (std::uint32_t mask = 0; mask < (1u << edges); ++mask) {
        std::vector<int> pos(static_cast<std::size_t>(nodes), 0);
        double w = 1.0;
        for (int v = 1; v < nodes; ++v) {
            const bool up = (mask >> (v - 1)) & 1u;
            w *= up ? p : 1.0 - p;
            pos[static_cast<std::size_t>(v)] = pos[static_cast<std::size_t>((v - 1) / 2)] + (up ? 1 : -1);
        }
        int best = -1000, count = 0;
        for (int v = (1 << n) - 1; v < nodes; ++v) {
            const int x = pos[static_cast<std::size_t>(v)];
            if (x > best) {
                best = x;
                count = 1;
            } else if (x == best) {
                ++count;
            }
        }
        law[{best, count}] += w;
    }
    return law;
}

// P(M'_n >= x) from the brute-force law.
double brute_tail(const std::map<std::pair<int, int>, double>& law, int n, int x) {
    double s = 0.0;
    for (const auto& [key, w] : law)
        if ((n - key.first) / 2 >= x) s += w;
    return s;
}

// Plain F-space iteration of the recurrence, no complement tracking.
std::vector<double> naive_tail(int n, double p, int width) {
    std::vector<double> f(static_cast<std::size_t>(width + 1), 0.0);
    f[0] = 1.0;
    for (int k = 0; k < n; ++k) {
        std::vector<double> g(f.size(), 0.0);
        g[0] = 1.0;
        for (std::size_t x = 1; x < f.size(); ++x) {
            const double w = p * f[x] + (1.0 - p) * f[x - 1];
            g[x] = w * w;
        }
        f = g;
    }
    return f;
}

}  // namespace

TEST(StepTail, HandValuesSymmetric) {
    const auto f1 = exact::step_tail(TailFunction::initial(0.5), 0.5);
    EXPECT_EQ(f1.level(), 1);
    EXPECT_EQ(f1(1), 0.25);
    EXPECT_EQ(f1(2), 0.0);
    const auto f2 = exact::step_tail(f1, 0.5);
    EXPECT_EQ(f2(1), 25.0 / 64.0);
    EXPECT_EQ(f2(2), 1.0 / 64.0);
    EXPECT_EQ(f2.hi(), 2);
}

TEST(StepTail, HandValueSupercritical) {
    const auto f1 = exact::step_tail(TailFunction::initial(0.6), 0.6);
    EXPECT_NEAR(f1(1), 0.16, 1e-16);
}

TEST(StepTail, RejectsDegenerateBias) {
    EXPECT_THROW(exact::step_tail(TailFunction::initial(0.5), 0.0), DomainError);
    EXPECT_THROW(exact::step_tail(TailFunction::initial(0.5), 1.0), DomainError);
    EXPECT_THROW(exact::evolve(-1, 0.5), DomainError);
}

TEST(Evolve, ZeroStepsIsInitial) {
    const auto f = exact::evolve(0, 0.5);
    EXPECT_EQ(f.level(), 0);
    EXPECT_EQ(f(1), 0.0);
    EXPECT_EQ(f(0), 1.0);
}

TEST(Evolve, MatchesBruteForceEnumeration) {
    for (double p : {0.3, 0.5, 0.6}) {
        for (int n = 1; n <= 3; ++n) {
            const auto law = brute_force_joint(n, p);
            const auto f = exact::evolve(n, p);
            for (int x = 1; x <= n + 1; ++x)
                EXPECT_NEAR(f(x), brute_tail(law, n, x), 1e-13) << "p=" << p << " n=" << n << " x=" << x;
        }
    }
}

TEST(Evolve, MatchesNaiveIterationSymmetric) {
    const int n = 200;
    const auto naive = naive_tail(n, 0.5, 80);
    const auto f = exact::evolve(n, 0.5);
    for (int x = 1; x <= 80; ++x) EXPECT_NEAR(f(x), naive[static_cast<std::size_t>(x)], 1e-12) << x;
}

TEST(Evolve, DualSpaceKeepsMovingForSubcriticalBias) {
    // the naive iteration stalls because 1 - F rounds to zero; the dual form does not
    exact::Evolver ev(0.3);
    const double m1 = exact::expected_max(ev.advance_to(500));
    const double m2 = exact::expected_max(ev.advance_to(1000));
    EXPECT_GT((m2 - m1) / 500.0, 0.7);
    EXPECT_LT((m2 - m1) / 500.0, 0.76);
}

TEST(Evolve, MonotoneInLevelForBiasAtLeastHalf) {
    for (double p : {0.5, 0.6, 0.8}) {
        exact::Evolver ev(p);
        TailFunction prev = ev.current();
        for (int n = 1; n <= 300; ++n) {
            const TailFunction& cur = ev.advance();
            for (std::int64_t x = 1; x <= cur.hi(); ++x) ASSERT_GE(cur(x), prev(x)) << p << " " << n << " " << x;
            prev = cur;
        }
    }
}

TEST(Evolve, SymmetricTailTendsToOne) {
    EXPECT_GT(exact::evolve(10000, 0.5)(1), 0.999);
}

TEST(Evolve, PruneFloorBoundsTheWindow) {
    const auto f = exact::evolve(100, 0.5);
    EXPECT_GE(f(f.hi()), f.prune_floor());
    EXPECT_LT(f.hi(), 100);
}

TEST(Median, SmallCases) {
    EXPECT_EQ(exact::median(exact::evolve(0, 0.5)), 1);
    EXPECT_EQ(exact::median(exact::evolve(1, 0.5)), 1);
    EXPECT_EQ(exact::median(exact::evolve(2, 0.5)), 1);
    const std::vector<double> half{0.5};
    EXPECT_EQ(exact::median(TailFunction::from_values(1, 0.5, half)), 1);
}

TEST(DeltaN, HandValuesAndLevelCheck) {
    const auto f0 = exact::evolve(0, 0.5);
    const auto f1 = exact::evolve(1, 0.5);
    const auto f2 = exact::evolve(2, 0.5);
    EXPECT_DOUBLE_EQ(exact::delta_n(f0, f1), 0.25);
    EXPECT_DOUBLE_EQ(exact::delta_n(f1, f2), 0.15625);
    EXPECT_THROW(exact::delta_n(f0, f2), DomainError);
}

TEST(DeltaN, DecreasesAlongLevels) {
    exact::Evolver ev(0.5);
    const auto a = ev.advance_to(100);
    const auto a1 = exact::step_tail(a, 0.5);
    const auto b = ev.advance_to(1000);
    const auto b1 = exact::step_tail(b, 0.5);
    const double d100 = exact::delta_n(a, a1);
    const double d1000 = exact::delta_n(b, b1);
    EXPECT_GT(d100, 0.0);
    EXPECT_LT(d1000, d100);
}

TEST(ExpectedMax, HandValues) {
    EXPECT_EQ(exact::expected_max(exact::evolve(0, 0.5)), 0.0);
    EXPECT_DOUBLE_EQ(exact::expected_max(exact::evolve(1, 0.5)), 0.5);
    EXPECT_DOUBLE_EQ(exact::expected_max(exact::evolve(2, 0.5)), 1.1875);
}

TEST(ExpectedMax, IncrementIdentity) {
    for (double p : {0.3, 0.5, 0.7}) {
        exact::Evolver ev(p);
        TailFunction prev = ev.current();
        for (int n = 0; n < 200; ++n) {
            const TailFunction& cur = ev.advance();
            const double lhs = exact::expected_max(cur) - exact::expected_max(prev);
            EXPECT_NEAR(lhs, 1.0 - 2.0 * exact::delta_n(prev, cur), 1e-10) << p << " " << n;
            prev = cur;
        }
    }
}

TEST(Inequalities, FnBetweenMaps) {
    exact::Evolver ev(0.5);
    for (std::int64_t n : {1, 2, 5, 10, 100, 1000, 5000}) {
        const auto& f = ev.advance_to(n);
        for (std::int64_t x = 1; x <= f.hi(); ++x) {
            // F(x) <= g(F(x-1)); near 1 compare complements through g(1-y) = 1 - G(y)
            if (f(x - 1) > 0.5)
                EXPECT_GE(f.complement(x), G_map(f.complement(x - 1)) * (1.0 - 1e-13)) << n << " " << x;
            else
                EXPECT_LE(f(x), g_map(f(x - 1)) * (1.0 + 1e-13)) << n << " " << x;
            EXPECT_LE(G_map(f(x)), f(x - 1) + 1e-15) << n << " " << x;
        }
    }
}

TEST(FixedPoint, SupercriticalValues) {
    const auto f = exact::fixed_point_supercritical(0.6, 50);
    EXPECT_NEAR(f(1), 4.0 / 9.0, 1e-15);
    // one step of s = (q + p s)^2 style closed form from F(1) = 4/9, computed independently
    const double p = 0.6, q = 0.4, prev = 4.0 / 9.0;
    const double closed = (1.0 - 2.0 * prev * p * q - std::sqrt(1.0 - 4.0 * prev * p * q)) / (2.0 * p * p);
    EXPECT_NEAR(f(2), closed, 1e-15);
    EXPECT_NEAR(f(2), 0.04094289892587526, 1e-15);
    for (std::int64_t x = 1; x <= 50; ++x) {
        EXPECT_LT(std::abs(exact::fixed_point_residual(f, 0.6, x)), 1e-12) << x;
        if (x > 1 && f(x) > 0.0) {
            EXPECT_LT(f(x), f(x - 1));
        }
    }
}

TEST(FixedPoint, RejectsSubcriticalAndSymmetric) {
    EXPECT_THROW(exact::fixed_point_supercritical(0.5, 10), DomainError);
    EXPECT_THROW(exact::fixed_point_supercritical(0.3, 10), DomainError);
    EXPECT_THROW(exact::fixed_point_supercritical(0.7, 0), DomainError);
}

TEST(FixedPoint, EvolutionConvergesToIt) {
    exact::Evolver ev(0.6);
    double prev = 0.0;
    for (int n = 0; n < 100000; ++n) {
        const double v = ev.advance()(1);
        if (v - prev < 1e-12) break;
        prev = v;
    }
    EXPECT_NEAR(ev.current()(1), 4.0 / 9.0, 1e-10);
}

TEST(GaltonWatson, ScalarCurve) {
    const auto q = exact::gw_extinction_curve(3);
    EXPECT_EQ(q[0], 0.25);
    EXPECT_EQ(q[1], 25.0 / 64.0);
    // q_{k+1} = ((1+q_k)/2)^2
    EXPECT_NEAR(q[2], std::pow((1.0 + 25.0 / 64.0) / 2.0, 2), 1e-16);
    EXPECT_THROW(exact::gw_extinction_curve(0), DomainError);
}

TEST(GaltonWatson, BitExactAgainstTailColumn) {
    const auto q = exact::gw_extinction_curve(1000);
    exact::Evolver ev(0.5);
    for (std::size_t k = 0; k < q.size(); ++k) ASSERT_EQ(ev.advance()(1), q[k]) << k;
}

TEST(GaltonWatson, NaiveScalarOracle) {
    const auto q = exact::gw_extinction_curve(10000);
    double s = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        s = std::pow((1.0 + s) / 2.0, 2);
        ASSERT_NEAR(q[k], s, 1e-12) << k;
    }
}

TEST(Joint, LevelOneLaw) {
    const auto rep = exact::joint_evolve(1, 0.5);
    EXPECT_EQ(rep.pmf(0, 1), 0.5);
    EXPECT_EQ(rep.pmf(0, 2), 0.25);
    EXPECT_EQ(rep.pmf(1, 2), 0.25);
    EXPECT_EQ(rep.pmf(1, 1), 0.0);
    EXPECT_DOUBLE_EQ(rep.e_4_pow_minus_k, 0.15625);
    EXPECT_DOUBLE_EQ(rep.increment_mean, 0.6875);
    const double em2 = exact::expected_max(exact::evolve(2, 0.5));
    const double em1 = exact::expected_max(exact::evolve(1, 0.5));
    EXPECT_DOUBLE_EQ(rep.increment_mean, em2 - em1);
}

TEST(Joint, MatchesBruteForceEnumeration) {
    for (double p : {0.3, 0.5, 0.7}) {
        for (int n = 1; n <= 3; ++n) {
            const auto law = brute_force_joint(n, p);
            const auto rep = exact::joint_evolve(n, p, 16);
            for (const auto& [key, w] : law) {
                const int x = (n - key.first) / 2;
                EXPECT_NEAR(rep.pmf(x, key.second), w, 1e-13) << p << " " << n << " " << x << " " << key.second;
            }
            EXPECT_NEAR(rep.pmf.total(), 1.0, 1e-12);
        }
    }
}

TEST(Joint, MarginalMatchesEvolveAndMassConserved) {
    for (double p : {0.4, 0.5, 0.6}) {
        const int n = 40;
        const auto rep = exact::joint_evolve(n, p, 64);
        const auto f = exact::evolve(n, p);
        const auto marg = rep.pmf.marginal();
        double tail = 0.0;
        for (std::int64_t x = static_cast<std::int64_t>(marg.size()) - 1; x >= 1; --x) {
            tail += marg[static_cast<std::size_t>(x)];
            EXPECT_NEAR(tail, f(x), 1e-12) << p << " " << x;
        }
        EXPECT_NEAR(rep.pmf.total(), 1.0, 1e-12);
    }
}

TEST(Joint, IncrementMeanMatchesExactDifference) {
    for (double p : {0.3, 0.5, 0.7}) {
        for (int n : {1, 5, 20}) {
            const auto rep = exact::joint_evolve(n, p, 64);
            const double diff =
                exact::expected_max(exact::evolve(n + 1, p)) - exact::expected_max(exact::evolve(n, p));
            EXPECT_NEAR(rep.increment_mean, diff, 1e-10) << p << " " << n;
        }
    }
}

TEST(Joint, BudgetAndArguments) {
    OpBudget tiny(1000);
    EXPECT_THROW(exact::joint_evolve(50, 0.5, 64, &tiny), BudgetExceeded);
    EXPECT_THROW(exact::joint_evolve(3, 0.5, 1), DomainError);
}

TEST(Budget, EvolveChargesPerCell) {
    OpBudget b(50);
    EXPECT_THROW(exact::evolve(100, 0.5, &b), BudgetExceeded);
}
