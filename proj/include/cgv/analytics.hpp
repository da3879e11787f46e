#pragma once
// Closed-form quantities for confidence-gated majority voting:
// per-agent publish probabilities, the expected vote margin, the
// Azuma-Hoeffding success lower bound and hallucination upper bound, and the
// large-N convergence bound.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgv/belief.hpp"
#include "cgv/error.hpp"
#include "cgv/population.hpp"
#include "cgv/specialfn.hpp"

namespace cgv {

enum class GroundTruth { OmegaStar, OmegaDagger };

struct AgentContribution {
    double q = 0.0;                // P(agent publishes at round T)
    double c = 0.0;                // (2p - 1) q
    std::optional<int> k_star;     // fewest learning successes that open the gate
};

struct BoundReport {
    std::vector<AgentContribution> contributions;  // in population order
    double expected_margin = 0.0;                   // sum of c_i
    double variance_budget = 0.0;                   // sum of (T-1)(2p_i-1)^2 + 4
    double success_lower_bound = 0.0;
    double hallucination_upper_bound = 1.0;

    // Convergence-bound premises evaluated on this population.
    double delta_p = 0.0;                   // mean_p - 1/2
    std::optional<double> q_min_competent;  // NONE when no agent has p >= 1/2
    bool delta_p_positive = false;
    bool q_min_positive = false;
    std::optional<double> convergence_lower_bound;

    [[nodiscard]] bool convergence_assumptions_met() const { return delta_p_positive && q_min_positive; }
};

namespace detail {

// ln of the Binomial(n, p) mass at k, with 0 * log 0 = 0.
inline double log_binomial_weight(int n, int k, double p) {
    double lw = specialfn::log_binomial(n, k);
    if (k > 0) lw += static_cast<double>(k) * std::log(p);
    if (n - k > 0) lw += static_cast<double>(n - k) * std::log1p(-p);
    return lw;
}

inline double log_sum_exp(const std::vector<double>& logs) {
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(logs.begin(), logs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double l : logs) s += std::exp(l - m);
    return m + std::log(s);
}

// Sum that does not depend on the order of `terms`.
// Correctly rounded sum of doubles (Shewchuk's exact partials, with a final
// round-half-even fix-up). The result is independent of term order.
inline double exact_sum(const std::vector<double>& terms) {
    std::vector<double> partials;
    for (double x : terms) {
        std::size_t i = 0;
        for (double y : partials) {
            if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[i++] = lo;
            x = hi;
        }
        partials.resize(i);
        partials.push_back(x);
    }
    if (partials.empty()) return 0.0;

    std::size_t n = partials.size() - 1;
    double hi = partials[n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials[--n];
        hi = x + y;
        lo = y - (hi - x);
        if (lo != 0.0) break;
    }
    // the remaining partials can only matter for a halfway case
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

// Appends (T-1)(2p-1)^2 + 4 to `parts` as doubles whose exact sum is the
// exact value of the term. Built from error-free sums and products, so the
// rounding happens once, in exact_sum.
inline void push_variance_parts(double p, int horizon_T, std::vector<double>& parts) {
    auto two_prod = [](double a, double b, std::vector<double>& out) {
        const double hi = a * b;
        out.push_back(hi);
        out.push_back(std::fma(a, b, -hi));
    };
    // 2p - 1 = m_hi + m_lo exactly (2p is exact, then a two-sum)
    const double two_p = 2.0 * p;
    const double m_hi = two_p - 1.0;
    const double b_virtual = m_hi - two_p;
    const double m_lo = (two_p - (m_hi - b_virtual)) + (-1.0 - b_virtual);
    std::vector<double> square;
    two_prod(m_hi, m_hi, square);
    two_prod(2.0 * m_hi, m_lo, square);
    two_prod(m_lo, m_lo, square);
    const double t = static_cast<double>(horizon_T - 1);
    for (double v : square) two_prod(t, v, parts);
    parts.push_back(4.0);
}

}  // namespace detail

/// Whether the gate is open after k successes out of T-1 learning rounds.
[[nodiscard]] inline bool gate_after_successes(const AgentSpec& agent, int horizon_T, int k,
                                               const specialfn::SpecialFnConfig& cfg = {}) {
    const int n = horizon_T - 1;
    return gate(agent.prior.after(k, n - k), agent.gate, cfg);
}

/// Probability that the agent publishes at round T, and its expected margin
/// contribution. Sums binomial weights of the success counts that open the
/// gate (in log space); k_star is located separately by bisection.
[[nodiscard]] inline AgentContribution publish_probability(const AgentSpec& agent, int horizon_T,
                                                           const specialfn::SpecialFnConfig& cfg = {}) {
    if (horizon_T < 2) throw DomainError("publish_probability: horizon_T must be >= 2");
    agent.validate();
    const double margin = 2.0 * agent.p - 1.0;
    if (agent.gate.force_publish) return {1.0, margin, 0};

    const int n = horizon_T - 1;
    std::vector<double> open_logs;
    open_logs.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        if (gate_after_successes(agent, horizon_T, k, cfg)) {
            open_logs.push_back(detail::log_binomial_weight(n, k, agent.p));
        }
    }
    const double q = std::clamp(std::exp(detail::log_sum_exp(open_logs)), 0.0, 1.0);

    // Confidence is non-decreasing in k, so the open set is {k_star, ..., n}.
    std::optional<int> k_star;
    if (gate_after_successes(agent, horizon_T, n, cfg)) {
        int lo = 0;
        int hi = n;
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            if (gate_after_successes(agent, horizon_T, mid, cfg)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        k_star = lo;
    }
    return {q, margin * q, k_star};
}

/// Smallest publish probability among agents with p >= 1/2.
[[nodiscard]] inline double min_publish_over_competent(const Population& pop,
                                                       const specialfn::SpecialFnConfig& cfg = {}) {
    std::optional<double> q_min;
    for (const auto& a : pop.agents()) {
        if (a.p < 0.5) continue;
        const double q = publish_probability(a, pop.horizon_T(), cfg).q;
        q_min = q_min ? std::min(*q_min, q) : q;
    }
    if (!q_min) {
        throw AssumptionViolation(AssumptionViolation::Premise::CompetentAgentsExist,
                                  "min_publish_over_competent: population has no agent with p >= 0.5");
    }
    return *q_min;
}

/// Absolute slack allowed when checking mean_p >= 1/2 + delta_p, so a caller
/// passing delta_p = mean_p - 1/2 is not rejected over rounding.
inline constexpr double kDeltaPSlack = 1e-12;

/// 1 - exp(-2 delta_p^2 q_min^2 N / (T + 3)), after checking both premises
/// against the population.
[[nodiscard]] inline double convergence_bound(const Population& pop, double q_min, double delta_p,
                                              const specialfn::SpecialFnConfig& cfg = {}) {
    if (!(delta_p > 0.0) || !std::isfinite(delta_p)) {
        throw AssumptionViolation(AssumptionViolation::Premise::MarginAboveHalf,
                                  "convergence_bound: delta_p must be positive, got " + std::to_string(delta_p));
    }
    if (!(q_min > 0.0 && q_min <= 1.0)) {
        throw AssumptionViolation(AssumptionViolation::Premise::NondegenerateGate,
                                  "convergence_bound: q_min must lie in (0, 1], got " + std::to_string(q_min));
    }
    const double mean_p = pop.mean_p();
    if (mean_p < 0.5 + delta_p - kDeltaPSlack) {
        throw AssumptionViolation(AssumptionViolation::Premise::MarginAboveHalf,
                                  "convergence_bound: mean reliability " + std::to_string(mean_p) +
                                      " is below 0.5 + delta_p = " + std::to_string(0.5 + delta_p));
    }
    const double observed_q_min = min_publish_over_competent(pop, cfg);
    if (observed_q_min < q_min) {
        throw AssumptionViolation(AssumptionViolation::Premise::NondegenerateGate,
                                  "convergence_bound: a competent agent publishes with probability " +
                                      std::to_string(observed_q_min) + " < q_min = " + std::to_string(q_min));
    }
    const double n = static_cast<double>(pop.size());
    const double rate = 2.0 * delta_p * delta_p * q_min * q_min / static_cast<double>(pop.horizon_T() + 3);
    return -std::expm1(-rate * n);
}

/// Success lower bound and hallucination upper bound for the gated majority.
///
/// Publish probabilities depend only on p_i, so the same contributions serve
/// both ground-truth conditions; `condition` is accepted for symmetry with
/// the simulator. A non-positive expected margin makes both bounds vacuous
/// (0 and 1 respectively).
[[nodiscard]] inline BoundReport bound_report(const Population& pop, GroundTruth condition = GroundTruth::OmegaStar,
                                              const specialfn::SpecialFnConfig& cfg = {}) {
    (void)condition;
    BoundReport r;
    const int T = pop.horizon_T();
    r.contributions.reserve(pop.size());
    std::vector<double> cs;
    std::vector<double> vs;
    cs.reserve(pop.size());
    vs.reserve(13 * pop.size());
    for (const auto& a : pop.agents()) {
        r.contributions.push_back(publish_probability(a, T, cfg));
        cs.push_back(r.contributions.back().c);
        detail::push_variance_parts(a.p, T, vs);
    }
    // Both sums are correctly rounded, so neither depends on agent order; the
    // variance budget is the exact sum over agents rounded once.
    r.expected_margin = detail::exact_sum(cs);
    r.variance_budget = detail::exact_sum(vs);

    if (r.expected_margin > 0.0) {
        const double exponent = r.expected_margin * r.expected_margin / (2.0 * r.variance_budget);
        r.success_lower_bound = std::clamp(-std::expm1(-exponent), 0.0, 1.0);
        r.hallucination_upper_bound = std::clamp(std::exp(-exponent), 0.0, 1.0);
    } else {
        r.success_lower_bound = 0.0;
        r.hallucination_upper_bound = 1.0;
    }

    r.delta_p = pop.mean_p() - 0.5;
    r.delta_p_positive = r.delta_p > 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (pop.agents()[i].p < 0.5) continue;
        const double q = r.contributions[i].q;
        r.q_min_competent = r.q_min_competent ? std::min(*r.q_min_competent, q) : q;
    }
    r.q_min_positive = r.q_min_competent.has_value() && *r.q_min_competent > 0.0;
    if (r.convergence_assumptions_met()) {
        r.convergence_lower_bound = convergence_bound(pop, *r.q_min_competent, r.delta_p, cfg);
    }
    return r;
}

}  // namespace cgv
