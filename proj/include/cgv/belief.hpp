#pragma once
// Agent-side belief state: Beta pseudo-counts over the agent's own
// reliability, the confidence measure and the publish/abstain gate.

#include <cmath>
#include <string>

#include "cgv/error.hpp"
#include "cgv/specialfn.hpp"

namespace cgv {

/// Beta(alpha, beta) posterior over an agent's reliability. Immutable value;
/// updates return a new belief.
class BetaBelief {
public:
    BetaBelief(double alpha, double beta) : alpha_(alpha), beta_(beta) {
        if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha <= 0.0 || beta <= 0.0) {
            throw DomainError("BetaBelief: pseudo-counts must be positive and finite, got (" +
                              std::to_string(alpha) + ", " + std::to_string(beta) + ")");
        }
    }

    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }

    /// Belief after `successes` correct and `failures` incorrect outcomes.
    [[nodiscard]] BetaBelief after(long successes, long failures) const {
        return {alpha_ + static_cast<double>(successes), beta_ + static_cast<double>(failures)};
    }

    friend bool operator==(const BetaBelief&, const BetaBelief&) = default;

private:
    double alpha_;
    double beta_;
};

struct GateParams {
    double p_critical = 0.5;
    double tau_abstain = 0.5;
    bool force_publish = false;

    void validate() const {
        if (!(p_critical > 0.0 && p_critical < 1.0)) {
            throw DomainError("GateParams.p_critical must lie in (0, 1), got " + std::to_string(p_critical));
        }
        if (!(tau_abstain >= 0.0 && tau_abstain < 1.0)) {
            throw DomainError("GateParams.tau_abstain must lie in [0, 1), got " + std::to_string(tau_abstain));
        }
    }

    friend bool operator==(const GateParams&, const GateParams&) = default;
};

/// Feedback update: a correct outcome increments alpha, an incorrect one beta.
[[nodiscard]] inline BetaBelief update(const BetaBelief& belief, bool correct) {
    return correct ? belief.after(1, 0) : belief.after(0, 1);
}

/// P(reliability > p_critical) under the belief, i.e. 1 - I_{p_critical}(alpha, beta).
[[nodiscard]] inline double confidence(const BetaBelief& belief, double p_critical,
                                       const specialfn::SpecialFnConfig& cfg = {}) {
    if (!(p_critical > 0.0 && p_critical < 1.0)) {
        throw DomainError("confidence: p_critical must lie in (0, 1), got " + std::to_string(p_critical));
    }
    return 1.0 - specialfn::reg_inc_beta(p_critical, belief.alpha(), belief.beta(), cfg);
}

/// Publish decision. Confidence equal to the threshold abstains.
[[nodiscard]] inline bool gate(const BetaBelief& belief, const GateParams& params,
                               const specialfn::SpecialFnConfig& cfg = {}) {
    params.validate();
    if (params.force_publish) return true;
    return confidence(belief, params.p_critical, cfg) > params.tau_abstain;
}

}  // namespace cgv
