#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cgv/analytics.hpp"
#include "oracles.hpp"

using namespace cgv;

namespace {

AgentSpec gated(double p, double tau, BetaBelief prior = {1, 1}, double p_crit = 0.5) {
    return {p, prior, {p_crit, tau, false}};
}

AgentSpec forced(double p) { return {p, {1, 1}, {0.5, 0.5, true}}; }

// Golden values: binomial survival functions from an independent statistics
// package (P(Bin(19, p) >= 10)).
constexpr double kQ75 = 0.9910967206960777;
constexpr double kQ35 = 0.0874736003701736;

}  // namespace

TEST(PublishProbability, ForcedBranch) {
    for (double p : {0.0, 0.35, 0.75, 1.0}) {
        const auto c = publish_probability(forced(p), 20);
        EXPECT_EQ(c.q, 1.0);
        EXPECT_EQ(c.c, 2 * p - 1);
        EXPECT_EQ(c.k_star, 0);
    }
}

TEST(PublishProbability, GateNeverOpens) {
    // Best case Beta(5, 1) has confidence 1 - 0.5^5 = 0.96875.
    const auto c = publish_probability(gated(0.9, 0.97), 5);
    EXPECT_EQ(c.q, 0.0);
    EXPECT_EQ(c.c, 0.0);
    EXPECT_FALSE(c.k_star.has_value());
}

TEST(PublishProbability, MatchesDirectSummation) {
    const auto agent = gated(0.75, 0.5);
    const auto c = publish_probability(agent, 20);
    EXPECT_NEAR(c.q, oracle::naive_publish_probability(agent, 20), 1e-12);
    EXPECT_NEAR(c.q, kQ75, 1e-12);
    EXPECT_NEAR(publish_probability(gated(0.35, 0.5), 20).q, kQ35, 1e-12);
    EXPECT_EQ(c.k_star, 10);
    EXPECT_NEAR(c.c, 0.5 * c.q, 1e-15);
}

TEST(PublishProbability, LogSpaceAgreesWithNaiveSumProperty) {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> up(0.0, 1.0);
    std::uniform_real_distribution<double> ut(0.0, 0.99);
    std::uniform_int_distribution<int> uT(2, 25);
    std::uniform_int_distribution<int> uprior(1, 6);
    for (int trial = 0; trial < 500; ++trial) {
        const auto agent = gated(up(gen), ut(gen), BetaBelief(uprior(gen), uprior(gen)), 0.05 + 0.9 * up(gen));
        const int T = uT(gen);
        ASSERT_NEAR(publish_probability(agent, T).q, oracle::naive_publish_probability(agent, T), 1e-12);
    }
}

TEST(PublishProbability, ThresholdConsistency) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> up(0.0, 1.0);
    std::uniform_real_distribution<double> uprior(0.05, 9.0);
    std::uniform_int_distribution<int> uT(2, 60);
    for (int trial = 0; trial < 400; ++trial) {
        const auto agent = gated(up(gen), 0.99 * up(gen), BetaBelief(uprior(gen), uprior(gen)), 0.05 + 0.9 * up(gen));
        const int T = uT(gen);
        const int n = T - 1;
        const auto c = publish_probability(agent, T);

        std::optional<int> linear;
        for (int k = 0; k <= n && !linear; ++k) {
            if (gate_after_successes(agent, T, k)) linear = k;
        }
        ASSERT_EQ(c.k_star, linear);
        if (c.k_star) {
            ASSERT_NEAR(c.q, oracle::binomial_upper_tail(n, agent.p, *c.k_star), 1e-12);
        } else {
            ASSERT_EQ(c.q, 0.0);
        }
        ASSERT_NEAR(c.c, (2 * agent.p - 1) * c.q, 1e-15);
    }
}

TEST(PublishProbability, LongHorizonDoesNotUnderflow) {
    // Thousands of log-gamma terms: accuracy degrades gracefully, nothing underflows.
    const auto c = publish_probability(gated(0.75, 0.5), 3000);
    EXPECT_NEAR(c.q, 1.0, 1e-9);
    const auto w = publish_probability(gated(0.35, 0.5), 3000);
    EXPECT_GE(w.q, 0.0);
    EXPECT_LT(w.q, 1e-50);
}

TEST(BoundReport, CoinFlippersAreVacuous) {
    const Population pop({forced(0.5), gated(0.5, 0.3), forced(0.5)}, 10);
    const auto r = bound_report(pop);
    EXPECT_EQ(r.expected_margin, 0.0);
    EXPECT_EQ(r.success_lower_bound, 0.0);
    EXPECT_EQ(r.hallucination_upper_bound, 1.0);
}

TEST(BoundReport, SingleForcedPerfectAgent) {
    const Population pop({forced(1.0)}, 2);
    const auto r = bound_report(pop);
    EXPECT_EQ(r.expected_margin, 1.0);
    EXPECT_EQ(r.variance_budget, 5.0);
    EXPECT_NEAR(r.success_lower_bound, 1.0 - std::exp(-0.1), 1e-15);
}

TEST(BoundReport, HeterogeneousGoldens) {
    const double margins[] = {2.346531401184934, 11.73265700592467, 23.46531401184934, 117.32657005924669};
    const double lbs[] = {0.03736301866863758, 0.17336705643726336, 0.3166779766168054, 0.8510203015013277};
    const int ns[] = {10, 50, 100, 500};
    for (int i = 0; i < 4; ++i) {
        const auto r = bound_report(build_scenario(ScenarioKind::Heterogeneous, ns[i], 20, 0.5, 0.5));
        EXPECT_NEAR(r.expected_margin, margins[i], 1e-10);
        EXPECT_NEAR(r.variance_budget, 7.23 * ns[i], 1e-10);
        EXPECT_NEAR(r.success_lower_bound, lbs[i], 1e-12);
    }
}

TEST(BoundReport, GatedPoolDominatesNeverAbstain) {
    const auto gated_r = bound_report(build_scenario(ScenarioKind::Heterogeneous, 50, 20, 0.5, 0.5));
    const auto never_r = bound_report(build_scenario(ScenarioKind::NeverAbstain, 50, 20, 0.5, 0.5));
    EXPECT_GT(gated_r.success_lower_bound, never_r.success_lower_bound);
    EXPECT_NEAR(never_r.success_lower_bound, 0.03398715389368942, 1e-12);
}

TEST(BoundReport, SuccessAndHallucinationShareTheExponent) {
    for (int n : {2, 10, 50, 200}) {
        for (auto kind : kAllScenarios) {
            const auto r = bound_report(build_scenario(kind, n, 20, 0.5, 0.5));
            ASSERT_GT(r.expected_margin, 0.0);
            EXPECT_NEAR(r.success_lower_bound + r.hallucination_upper_bound, 1.0, 0x1p-52);
            EXPECT_GE(r.variance_budget, 4.0 * n);
            EXPECT_EQ(bound_report(build_scenario(kind, n, 20, 0.5, 0.5), GroundTruth::OmegaDagger)
                          .hallucination_upper_bound,
                      r.hallucination_upper_bound);
        }
    }
}

TEST(BoundReport, NegativeMarginIsVacuous) {
    const auto r = bound_report(Population({forced(0.0), forced(0.1)}, 5));
    EXPECT_LT(r.expected_margin, 0.0);
    EXPECT_EQ(r.success_lower_bound, 0.0);
    EXPECT_EQ(r.hallucination_upper_bound, 1.0);
}

TEST(BoundReport, IndependentOfAgentOrder) {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> up(0.0, 1.0);
    std::vector<AgentSpec> agents;
    for (int i = 0; i < 60; ++i) {
        agents.push_back(i % 3 == 0 ? forced(up(gen)) : gated(up(gen), 0.9 * up(gen), {1.0 + i % 4, 2.0}));
    }
    const auto base = bound_report(Population(agents, 15));
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(agents.begin(), agents.end(), gen);
        const auto r = bound_report(Population(agents, 15));
        EXPECT_EQ(r.expected_margin, base.expected_margin);
        EXPECT_EQ(r.variance_budget, base.variance_budget);
        EXPECT_EQ(r.success_lower_bound, base.success_lower_bound);
    }
}

TEST(BoundReport, VarianceBudgetIsExactSumRoundedOnce) {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> up(0.0, 1.0);
    std::uniform_int_distribution<int> ut(2, 500);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<AgentSpec> agents;
        for (int i = 0; i < 1 + trial % 37; ++i) agents.push_back(forced(up(gen)));
        const Population pop(agents, ut(gen));
        ASSERT_EQ(bound_report(pop).variance_budget, oracle::exact_variance_budget(pop)) << trial;
    }
}

TEST(ExactSum, CorrectlyRounded) {
    using detail::exact_sum;
    EXPECT_EQ(exact_sum({}), 0.0);
    EXPECT_EQ(exact_sum({1e16, 1.0, -1e16}), 1.0);
    // exact binary residue of the four decimal literals (Python math.fsum)
    EXPECT_EQ(exact_sum({0.1, 0.2, 0.3, -0.6}), 2.7755575615628914e-17);
    EXPECT_EQ(exact_sum({-0.6, 0.3, 0.1, 0.2}), 2.7755575615628914e-17);
    // halfway between 1 and its successor, nudged up by a far smaller term
    const double half_ulp = std::ldexp(1.0, -53);
    EXPECT_EQ(exact_sum({1.0, half_ulp}), 1.0);
    EXPECT_EQ(exact_sum({1.0, half_ulp, std::ldexp(1.0, -120)}), std::nextafter(1.0, 2.0));
    EXPECT_EQ(exact_sum({std::ldexp(1.0, -120), half_ulp, 1.0}), std::nextafter(1.0, 2.0));
}

TEST(BoundReport, RaisingCompetenceOfForcedAgentRaisesMargin) {
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> up(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<AgentSpec> agents;
        for (int i = 0; i < 8; ++i) agents.push_back(i % 2 ? forced(up(gen)) : gated(up(gen), 0.5));
        const auto before = bound_report(Population(agents, 12)).expected_margin;
        auto& target = agents[1];
        target.p = std::min(1.0, target.p + 0.3 * up(gen));
        EXPECT_GE(bound_report(Population(agents, 12)).expected_margin, before);
    }
}

TEST(BoundReport, HomogeneousForcedPoolBoundGrowsWithN) {
    for (double p : {0.51, 0.55, 0.7, 0.95}) {
        double prev = 0.0;
        for (int n = 1; n <= 400; ++n) {
            const auto lb = bound_report(Population(std::vector<AgentSpec>(n, forced(p)), 20)).success_lower_bound;
            ASSERT_GE(lb, prev) << p << " " << n;
            prev = lb;
        }
    }
}

TEST(MinPublishOverCompetent, Cases) {
    EXPECT_EQ(min_publish_over_competent(build_scenario(ScenarioKind::NeverAbstain, 10, 20, 0.5, 0.5)), 1.0);
    EXPECT_EQ(min_publish_over_competent(Population({gated(0.9, 0.97), gated(0.2, 0.1)}, 5)), 0.0);
    const auto het = build_scenario(ScenarioKind::Heterogeneous, 50, 20, 0.5, 0.5);
    EXPECT_EQ(min_publish_over_competent(het), publish_probability(gated(0.75, 0.5), 20).q);
    EXPECT_THROW((void)min_publish_over_competent(Population({gated(0.3, 0.5)}, 5)), AssumptionViolation);
}

TEST(ConvergenceBound, ClosedForm) {
    const auto pop = build_scenario(ScenarioKind::Heterogeneous, 50, 20, 0.5, 0.5);
    const double q = min_publish_over_competent(pop);
    EXPECT_NEAR(convergence_bound(pop, q, 0.05), 1 - std::exp(-2 * 0.05 * 0.05 * q * q * 50 / 23.0), 1e-15);
    EXPECT_NEAR(convergence_bound(pop, q, 0.05), 0.010620081738656584, 1e-12);
}

TEST(ConvergenceBound, VanishesWithMargin) {
    const auto pop = build_scenario(ScenarioKind::Heterogeneous, 50, 20, 0.5, 0.5);
    const double q = min_publish_over_competent(pop);
    double prev = 1.0;
    for (double dp : {0.05, 1e-2, 1e-4, 1e-8}) {
        const double b = convergence_bound(pop, q, dp);
        EXPECT_LT(b, prev);
        prev = b;
    }
    EXPECT_LT(prev, 1e-15);
}

TEST(ConvergenceBound, IncreasesInNTowardOne) {
    double prev = 0.0;
    for (int n = 2; n <= 65536; n *= 2) {
        const auto pop = build_scenario(ScenarioKind::NeverAbstain, n, 20, 0.5, 0.5);
        const double b = convergence_bound(pop, 1.0, 0.05);
        ASSERT_GT(b, prev);
        prev = b;
    }
    EXPECT_GT(prev, 0.999);
}

TEST(ConvergenceBound, NeverExceedsTheoremBound) {
    for (int n : {10, 50, 100, 500}) {
        const auto pop = build_scenario(ScenarioKind::Heterogeneous, n, 20, 0.5, 0.5);
        const auto r = bound_report(pop);
        EXPECT_LE(convergence_bound(pop, min_publish_over_competent(pop), 0.05), r.success_lower_bound) << n;
        ASSERT_TRUE(r.convergence_lower_bound.has_value());
        EXPECT_LE(*r.convergence_lower_bound, r.success_lower_bound);
    }
}

TEST(ConvergenceBound, PremiseViolations) {
    const auto pop = build_scenario(ScenarioKind::Heterogeneous, 10, 20, 0.5, 0.5);
    const double q = min_publish_over_competent(pop);
    try {
        (void)convergence_bound(pop, q, 0.1);
        FAIL() << "expected a margin violation";
    } catch (const AssumptionViolation& e) {
        EXPECT_EQ(e.premise(), AssumptionViolation::Premise::MarginAboveHalf);
    }
    try {
        (void)convergence_bound(pop, std::min(1.0, q + 1e-3), 0.05);
        FAIL() << "expected a gate violation";
    } catch (const AssumptionViolation& e) {
        EXPECT_EQ(e.premise(), AssumptionViolation::Premise::NondegenerateGate);
    }
    EXPECT_THROW((void)convergence_bound(pop, q, 0.0), AssumptionViolation);
    EXPECT_THROW((void)convergence_bound(pop, 0.0, 0.05), AssumptionViolation);
}

TEST(BoundReport, ConvergencePremisesReported) {
    const auto r = bound_report(build_scenario(ScenarioKind::Heterogeneous, 10, 20, 0.5, 0.5));
    EXPECT_TRUE(r.convergence_assumptions_met());
    EXPECT_NEAR(r.delta_p, 0.05, 1e-15);
    const auto bad = bound_report(Population({gated(0.3, 0.5), gated(0.4, 0.5)}, 5));
    EXPECT_FALSE(bad.convergence_assumptions_met());
    EXPECT_FALSE(bad.convergence_lower_bound.has_value());
    EXPECT_FALSE(bad.q_min_competent.has_value());
}
