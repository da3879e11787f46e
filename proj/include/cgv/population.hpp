#pragma once
// Agent specifications and the four experimental scenario pools.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgv/belief.hpp"
#include "cgv/error.hpp"

namespace cgv {

struct AgentSpec {
    double p = 0.5;             // true reliability
    BetaBelief prior{1.0, 1.0};  // initial pseudo-counts
    GateParams gate{};

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DomainError("AgentSpec.p must lie in [0, 1], got " + std::to_string(p));
        }
        gate.validate();
    }

    friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

/// Ordered agents plus the horizon T (T-1 learning rounds and one decision round).
class Population {
public:
    Population(std::vector<AgentSpec> agents, int horizon_T)
        : agents_(std::move(agents)), horizon_T_(horizon_T) {
        if (agents_.empty()) throw DomainError("Population: at least one agent required");
        if (horizon_T_ < 2) {
            throw DomainError("Population: horizon_T must be >= 2, got " + std::to_string(horizon_T_));
        }
        for (const auto& a : agents_) a.validate();
    }

    [[nodiscard]] const std::vector<AgentSpec>& agents() const noexcept { return agents_; }
    [[nodiscard]] std::size_t size() const noexcept { return agents_.size(); }
    [[nodiscard]] int horizon_T() const noexcept { return horizon_T_; }
    [[nodiscard]] int learning_rounds() const noexcept { return horizon_T_ - 1; }

    /// Average reliability (1/N) sum p_i.
    [[nodiscard]] double mean_p() const {
        long double sum = 0.0L;
        for (const auto& a : agents_) sum += a.p;
        return static_cast<double>(sum / static_cast<long double>(agents_.size()));
    }

    friend bool operator==(const Population&, const Population&) = default;

private:
    std::vector<AgentSpec> agents_;
    int horizon_T_;
};

/// Prior with mean 1 - p and strength kappa, clipped below at epsilon.
[[nodiscard]] inline BetaBelief contrary_prior(double p, double kappa, double epsilon) {
    if (!std::isfinite(kappa) || kappa <= 0.0) {
        throw DomainError("contrary_prior: kappa must be positive, got " + std::to_string(kappa));
    }
    if (!std::isfinite(epsilon) || epsilon <= 0.0) {
        throw DomainError("contrary_prior: epsilon must be positive, got " + std::to_string(epsilon));
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("contrary_prior: p must lie in [0, 1], got " + std::to_string(p));
    }
    return {std::max(kappa * (1.0 - p), epsilon), std::max(kappa * p, epsilon)};
}

enum class ScenarioKind {
    Homogeneous,    // identical competence, uniform priors, gated
    Heterogeneous,  // two competence halves, uniform priors, gated
    NeverAbstain,   // two competence halves, forced publication
    Contrary,       // two competence halves, competence-inverse priors, gated
};

inline constexpr ScenarioKind kAllScenarios[] = {ScenarioKind::Homogeneous, ScenarioKind::Heterogeneous,
                                                 ScenarioKind::NeverAbstain, ScenarioKind::Contrary};

[[nodiscard]] constexpr std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Homogeneous: return "homogeneous";
        case ScenarioKind::Heterogeneous: return "heterogeneous";
        case ScenarioKind::NeverAbstain: return "never_abstain";
        case ScenarioKind::Contrary: return "contrary";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<ScenarioKind> parse_scenario(std::string_view tag) {
    for (auto kind : kAllScenarios) {
        if (to_string(kind) == tag) return kind;
    }
    return std::nullopt;
}

struct ScenarioParams {
    double p_homogeneous = 0.55;
    double p_low = 0.35;
    double p_high = 0.75;
    double kappa = 8.0;
    double epsilon = 1e-6;
};

/// Builds one of the four pools. Heterogeneous kinds put the low-competence
/// half first and need an even agent count.
[[nodiscard]] inline Population build_scenario(ScenarioKind kind, int n_agents, int horizon_T, double tau,
                                               double p_critical, const ScenarioParams& sp = {}) {
    if (n_agents <= 0) {
        throw std::invalid_argument("build_scenario: n_agents must be positive, got " + std::to_string(n_agents));
    }
    if (kind != ScenarioKind::Homogeneous && n_agents % 2 != 0) {
        throw std::invalid_argument("build_scenario: " + std::string(to_string(kind)) +
                                    " requires an even number of agents, got " + std::to_string(n_agents));
    }
    const GateParams gated{p_critical, tau, false};
    const GateParams forced{p_critical, tau, true};
    const BetaBelief uniform{1.0, 1.0};

    std::vector<AgentSpec> agents;
    agents.reserve(static_cast<std::size_t>(n_agents));
    if (kind == ScenarioKind::Homogeneous) {
        for (int i = 0; i < n_agents; ++i) agents.push_back({sp.p_homogeneous, uniform, gated});
        return {std::move(agents), horizon_T};
    }

    for (int i = 0; i < n_agents; ++i) {
        const double p = i < n_agents / 2 ? sp.p_low : sp.p_high;
        switch (kind) {
            case ScenarioKind::Heterogeneous: agents.push_back({p, uniform, gated}); break;
            case ScenarioKind::NeverAbstain: agents.push_back({p, uniform, forced}); break;
            case ScenarioKind::Contrary:
                agents.push_back({p, contrary_prior(p, sp.kappa, sp.epsilon), gated});
                break;
            case ScenarioKind::Homogeneous: break;
        }
    }
    return {std::move(agents), horizon_T};
}

}  // namespace cgv
