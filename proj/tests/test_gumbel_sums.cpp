#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hmax/criticality.hpp"
#include "hmax/gumbel_sums.hpp"

using namespace hmax;
using gumbel::ConditionClass;

namespace {

// ln P(M_n < m) for {0,1} steps straight from the binomial sum, no log-space tricks.
double binomial_max_cdf(int n, double p, int m) {
    double upper = 0.0;
    for (int k = m; k <= n; ++k)
        upper += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                          k * std::log(p) + (n - k) * std::log1p(-p));
    return std::ldexp(std::log1p(-upper), n);
}

}  // namespace

TEST(Classify, ConditionClasses) {
    const auto a = gumbel::classify(LatticePmf({0, 1}, {0.7, 0.3}));
    EXPECT_EQ(a.condition, ConditionClass::top_mass_below_half);
    EXPECT_EQ(a.omega, 1);
    EXPECT_EQ(gumbel::classify(LatticePmf({-1, 1}, {0.4, 0.6})).condition, ConditionClass::violated);
    EXPECT_EQ(gumbel::classify(LatticePmf({-1, 1}, {0.5, 0.5})).condition, ConditionClass::violated);
    EXPECT_STREQ(gumbel::to_string(ConditionClass::top_mass_below_half), "top_mass_below_half");
}

TEST(GammaStar, BernoulliFrozenValues) {
    const auto params = gumbel::solve_gamma_star(gumbel::classify(LatticePmf::bernoulli01(0.3)));
    EXPECT_NEAR(params.gamma_star, 2.7026692878404956, 1e-11);
    EXPECT_NEAR(params.rho_star, 0.8647565374790017, 1e-11);
    EXPECT_NEAR(params.sigma * params.sigma, 0.11695266836632962, 1e-11);
    EXPECT_LT(std::abs(params.residual(LatticePmf::bernoulli01(0.3))), 1e-10);
    // closed form e^{gamma*} = rho q / (p (1 - rho)) with rho from the drift root
    const double rho = crit::solve_bdrift(0.3).rho01;
    EXPECT_NEAR(std::exp(params.gamma_star), rho * 0.7 / (0.3 * (1.0 - rho)), 1e-9);
}

TEST(GammaStar, ResidualOnGrid) {
    for (double p = 0.05; p < 0.46; p += 0.05) {
        const auto step = LatticePmf::bernoulli01(p);
        const auto params = gumbel::solve_gamma_star(gumbel::classify(step));
        EXPECT_LT(std::abs(params.residual(step)), 1e-10) << p;
        EXPECT_GT(params.sigma, 0.0);
    }
    const LatticePmf three({-2, 0, 3}, {0.5, 0.3, 0.2});
    const auto params = gumbel::solve_gamma_star(gumbel::classify(three));
    EXPECT_LT(std::abs(params.residual(three)), 1e-10);
}

TEST(GammaStar, NoSolutionWhenViolated) {
    EXPECT_THROW(gumbel::solve_gamma_star(gumbel::classify(LatticePmf({-1, 1}, {0.5, 0.5}))), NoSolution);
    EXPECT_THROW(gumbel::solve_gamma_star(gumbel::classify(LatticePmf({1}, {1.0}))), NoSolution);
}

TEST(LogCumulant, ClosedFormBernoulli) {
    const double p = 0.3, g = 1.7;
    const auto c = gumbel::log_cumulant(LatticePmf::bernoulli01(p), g);
    const double mgf = 1.0 - p + p * std::exp(g);
    const double mean = p * std::exp(g) / mgf;
    EXPECT_NEAR(c.l, std::log(mgf), 1e-14);
    EXPECT_NEAR(c.dl, mean, 1e-14);
    EXPECT_NEAR(c.d2l, mean * (1.0 - mean), 1e-14);
}

TEST(KappaBeta, IdentitiesAcrossGrid) {
    const auto kb = gumbel::bernoulli_kappa_beta(0.3);
    EXPECT_NEAR(kb.kappa, 0.06702636109180976, 1e-12);
    EXPECT_NEAR(kb.beta, 0.7348352875147691, 1e-12);
    for (double p : {0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45}) {
        const auto kbp = gumbel::bernoulli_kappa_beta(p);
        const auto params = gumbel::solve_gamma_star(gumbel::classify(LatticePmf::bernoulli01(p)));
        EXPECT_GT(kbp.kappa, 0.0);
        EXPECT_LT(kbp.kappa, 1.0);
        EXPECT_NEAR(kbp.kappa, std::exp(-params.gamma_star), 1e-9) << p;
        EXPECT_NEAR(kbp.beta, 2.0 * std::numbers::pi * params.sigma * params.sigma, 1e-9) << p;
    }
    EXPECT_THROW(gumbel::bernoulli_kappa_beta(0.5), DomainError);
}

TEST(KappaBeta, PlusMinusOneTiltIsHalf) {
    for (double p : {0.1, 0.2, 0.3, 0.4}) {
        const double g = crit::solve_critical_gamma(crit::ProgenySpec::bernoulli_pm1(p));
        EXPECT_NEAR(std::exp(-2.0 * g), gumbel::bernoulli_kappa_beta(p).kappa, 1e-9) << p;
    }
}

TEST(HelixGumbel, ValuesLimitsPeriodicity) {
    EXPECT_NEAR(gumbel::helix_gumbel(0.0, 0, 2.5), std::exp(-1.0), 1e-16);
    EXPECT_NEAR(gumbel::helix_gumbel(0.0, 60, 2.5), 1.0, 1e-15);
    EXPECT_EQ(gumbel::helix_gumbel(0.0, -60, 2.5), 0.0);
    for (double a : {0.25, 0.5, 0.75, 0.125})
        for (std::int64_t m = -3; m <= 3; ++m)
            EXPECT_EQ(gumbel::helix_gumbel(a + 1.0, m + 1, 2.7), gumbel::helix_gumbel(a, m, 2.7));
    for (double a : {0.1, 0.3})
        EXPECT_NEAR(gumbel::helix_gumbel(a + 1.0, 2, 2.7), gumbel::helix_gumbel(a, 1, 2.7), 1e-14);
    EXPECT_THROW(gumbel::helix_gumbel(0.0, 0, 0.0), DomainError);
}

TEST(ExactMaxCdf, HandValues) {
    const auto scheme = gumbel::classify(LatticePmf({0, 1}, {0.7, 0.3}));
    EXPECT_NEAR(gumbel::exact_max_cdf(scheme, 1, 1).log_prob, std::log(0.49), 1e-15);
    EXPECT_NEAR(gumbel::exact_max_cdf(scheme, 2, 2).log_prob, 4.0 * std::log(0.91), 1e-15);
    EXPECT_EQ(gumbel::exact_max_cdf(scheme, 2, 3).log_prob, 0.0);
}

TEST(ExactMaxCdf, DegenerateStep) {
    const auto scheme = gumbel::classify(LatticePmf({1}, {1.0}));
    EXPECT_EQ(scheme.condition, ConditionClass::violated);
    const auto below = gumbel::exact_max_cdf(scheme, 5, 5);
    EXPECT_TRUE(below.underflow);
    EXPECT_TRUE(std::isinf(below.log_prob));
    EXPECT_EQ(gumbel::exact_max_cdf(scheme, 5, 6).log_prob, 0.0);
}

TEST(ExactMaxCdf, MonotoneInM) {
    const auto scheme = gumbel::classify(LatticePmf::bernoulli01(0.3));
    const gumbel::SumDistribution sums(scheme.step, 40);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::int64_t m = 0; m <= 41; ++m) {
        const double v = gumbel::log_max_cdf(sums, m).log_prob;
        EXPECT_GE(v, prev);
        EXPECT_LE(v, 0.0);
        prev = v;
    }
}

TEST(ExactMaxCdf, AgreesWithDirectBinomial) {
    const auto scheme = gumbel::classify(LatticePmf::bernoulli01(0.3));
    for (int m : {14, 17, 20, 23})
        EXPECT_NEAR(gumbel::exact_max_cdf(scheme, 30, m).log_prob / binomial_max_cdf(30, 0.3, m), 1.0, 1e-10) << m;
}

TEST(ExactMaxCdf, HighPrecisionReference) {
    // -ln P(M_n < m) from a 400-digit evaluation of the binomial tail
    const auto scheme = gumbel::classify(LatticePmf::bernoulli01(0.3));
    const std::vector<std::pair<std::int64_t, double>> n128{
        {107, 1437.4835032661586}, {108, 119.1842200655773}, {109, 9.3259464655288546},
        {110, 0.68702586788415418}, {111, 0.047521356110455574}, {112, 0.0030770271068780646}};
    for (const auto& [m, ref] : n128)
        EXPECT_NEAR(-gumbel::exact_max_cdf(scheme, 128, m).log_prob / ref, 1.0, 1e-11) << m;
    EXPECT_NEAR(-gumbel::exact_max_cdf(scheme, 512, 440).log_prob / 87.694736808841071, 1.0, 1e-11);
    EXPECT_NEAR(-gumbel::exact_max_cdf(scheme, 512, 445).log_prob / 0.00012403127674581531, 1.0, 1e-11);
}

TEST(ExactMaxCdf, LevelLimit) {
    const auto scheme = gumbel::classify(LatticePmf::bernoulli01(0.3));
    EXPECT_THROW(gumbel::exact_max_cdf(scheme, 1025, 3), DomainError);
}

TEST(VerifyBound, RatiosAtLevel128) {
    const auto rows = gumbel::verify_bound(gumbel::classify(LatticePmf::bernoulli01(0.3)), 128, -3.0, 3.0);
    const std::vector<double> expected{0.6087, 0.7529, 0.8790, 0.9661, 0.9970, 0.9631};
    ASSERT_EQ(rows.size(), expected.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_NEAR(rows[i].ratio, expected[i], 5e-5) << i;
        EXPECT_EQ(rows[i].m, 107 + static_cast<std::int64_t>(i));
        EXPECT_GE(rows[i].z, -3.0);
        EXPECT_LE(rows[i].z, 3.0);
        EXPECT_LT(rows[i].reconciliation, 1e-6);
    }
}

TEST(VerifyBound, DeviationShrinksWithLevel) {
    const auto scheme = gumbel::classify(LatticePmf::bernoulli01(0.3));
    double prev = 1e9;
    for (std::int64_t n : {128, 256, 512}) {
        const double dev = gumbel::max_ratio_deviation(gumbel::verify_bound(scheme, n, -3.0, 3.0));
        EXPECT_LT(dev, prev) << n;
        prev = dev;
    }
    EXPECT_LT(prev, 0.25);
}

TEST(VerifyBound, LevelTwoFiftySixBand) {
    const auto rows = gumbel::verify_bound(gumbel::classify(LatticePmf::bernoulli01(0.3)), 256, -3.0, 3.0);
    for (const auto& r : rows) {
        EXPECT_GE(r.ratio, 0.8);
        EXPECT_LE(r.ratio, 1.25);
    }
}

TEST(VerifyBound, NonBernoulliStepHasNoBernoulliColumn) {
    const auto rows = gumbel::verify_bound(gumbel::classify(LatticePmf({-1, 0, 2}, {0.4, 0.4, 0.2})), 64, -1.0, 1.0);
    ASSERT_FALSE(rows.empty());
    for (const auto& r : rows) {
        EXPECT_TRUE(std::isnan(r.bernoulli_neglog));
        EXPECT_GT(r.ratio, 0.0);
    }
    EXPECT_THROW(gumbel::verify_bound(gumbel::classify(LatticePmf::bernoulli01(0.3)), 64, 1.0, -1.0), DomainError);
}
