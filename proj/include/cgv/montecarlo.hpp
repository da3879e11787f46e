#pragma once
// Monte Carlo simulation of the sequential learn-then-vote process.
//
// One run: every agent starts from its prior, observes T-1 Bernoulli(p_i)
// correctness outcomes (round-major, agent-minor draw order), applies its
// gate to the post-learning belief, and, if it publishes, casts a final vote
// that lands on the true alternative with probability p_i. A run counts as a
// win when the net vote for omega* is strictly positive.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "cgv/analytics.hpp"
#include "cgv/belief.hpp"
#include "cgv/population.hpp"
#include "cgv/rng.hpp"
#include "cgv/specialfn.hpp"

namespace cgv {

struct SimConfig {
    long runs = 2000;
    std::uint64_t seed = 0;
    GroundTruth ground_truth = GroundTruth::OmegaStar;
    unsigned threads = 1;  // 0 selects std::thread::hardware_concurrency()

    void validate() const {
        if (runs < 1) throw DomainError("SimConfig.runs must be >= 1, got " + std::to_string(runs));
    }
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

struct SimResult {
    long runs = 0;
    long wins = 0;     // runs with net vote for omega* > 0
    long against = 0;  // runs with net vote for omega* < 0
    double empirical_success = 0.0;
    std::vector<double> publish_rate_per_agent;
    Interval wilson_ci95;
    std::uint64_t seed = 0;
};

/// Wilson score interval for `successes` out of `trials` at confidence z.
[[nodiscard]] inline Interval wilson_interval(long successes, long trials, double z = 1.959963984540054) {
    if (trials <= 0 || successes < 0 || successes > trials) {
        throw DomainError("wilson_interval: require 0 <= successes <= trials, trials > 0");
    }
    const double n = static_cast<double>(trials);
    const double ph = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (ph + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n));
    return {std::clamp(std::min(center - half, ph), 0.0, 1.0), std::clamp(std::max(center + half, ph), 0.0, 1.0)};
}

namespace detail {

// open[i][k]: gate of agent i after k successes in T-1 learning rounds.
inline std::vector<std::vector<char>> gate_tables(const Population& pop, const specialfn::SpecialFnConfig& cfg) {
    const int T = pop.horizon_T();
    std::vector<std::vector<char>> open;
    open.reserve(pop.size());
    for (const auto& a : pop.agents()) {
        std::vector<char> row(static_cast<std::size_t>(T));
        for (int k = 0; k < T; ++k) row[static_cast<std::size_t>(k)] = gate_after_successes(a, T, k, cfg) ? 1 : 0;
        open.push_back(std::move(row));
    }
    return open;
}

struct RunTally {
    long wins = 0;
    long against = 0;
    std::vector<long> published;
};

inline void simulate_range(const Population& pop, const std::vector<std::vector<char>>& open,
                           const SimConfig& cfg, long first, long last, RunTally& tally) {
    const std::size_t n_agents = pop.size();
    const int rounds = pop.learning_rounds();
    const int correct_side = cfg.ground_truth == GroundTruth::OmegaStar ? 1 : -1;
    std::vector<int> successes(n_agents);

    for (long r = first; r < last; ++r) {
        auto gen = rng::run_stream(cfg.seed, static_cast<std::uint64_t>(r));
        std::fill(successes.begin(), successes.end(), 0);
        for (int t = 0; t < rounds; ++t) {
            for (std::size_t i = 0; i < n_agents; ++i) {
                successes[i] += gen.bernoulli(pop.agents()[i].p) ? 1 : 0;
            }
        }
        long net = 0;
        for (std::size_t i = 0; i < n_agents; ++i) {
            if (!open[i][static_cast<std::size_t>(successes[i])]) continue;
            ++tally.published[i];
            net += gen.bernoulli(pop.agents()[i].p) ? correct_side : -correct_side;
        }
        if (net > 0) ++tally.wins;
        if (net < 0) ++tally.against;
    }
}

}  // namespace detail

/// Runs cfg.runs independent replications. Bitwise reproducible for a fixed
/// (pop, cfg.seed) regardless of cfg.threads.
[[nodiscard]] inline SimResult simulate(const Population& pop, const SimConfig& cfg,
                                        const specialfn::SpecialFnConfig& sf = {}) {
    cfg.validate();
    const auto open = detail::gate_tables(pop, sf);

    unsigned threads = cfg.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : cfg.threads;
    threads = static_cast<unsigned>(std::min<long>(threads, cfg.runs));

    std::vector<detail::RunTally> tallies(threads);
    for (auto& t : tallies) t.published.assign(pop.size(), 0);

    const long chunk = cfg.runs / threads;
    const long extra = cfg.runs % threads;
    auto bounds = [&](unsigned w) {
        const long first = static_cast<long>(w) * chunk + std::min<long>(w, extra);
        return std::pair{first, first + chunk + (static_cast<long>(w) < extra ? 1 : 0)};
    };

    if (threads == 1) {
        detail::simulate_range(pop, open, cfg, 0, cfg.runs, tallies[0]);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            const auto [first, last] = bounds(w);
            workers.emplace_back(
                [&, w, first = first, last = last] { detail::simulate_range(pop, open, cfg, first, last, tallies[w]); });
        }
        for (auto& th : workers) th.join();
    }

    SimResult res;
    res.runs = cfg.runs;
    res.seed = cfg.seed;
    std::vector<long> published(pop.size(), 0);
    for (const auto& t : tallies) {
        res.wins += t.wins;
        res.against += t.against;
        for (std::size_t i = 0; i < pop.size(); ++i) published[i] += t.published[i];
    }
    res.empirical_success = static_cast<double>(res.wins) / static_cast<double>(res.runs);
    res.publish_rate_per_agent.reserve(pop.size());
    for (long c : published) res.publish_rate_per_agent.push_back(static_cast<double>(c) / static_cast<double>(res.runs));
    res.wilson_ci95 = wilson_interval(res.wins, res.runs);
    return res;
}

/// Fraction of runs in which the invalid alternative wins the gated vote.
[[nodiscard]] inline double hallucination_rate(const Population& pop, const SimConfig& cfg,
                                               const specialfn::SpecialFnConfig& sf = {}) {
    if (cfg.ground_truth != GroundTruth::OmegaDagger) {
        throw std::invalid_argument("hallucination_rate: SimConfig.ground_truth must be omega_dagger");
    }
    return simulate(pop, cfg, sf).empirical_success;
}

struct TracePoint {
    int t = 0;               // 1..T
    double confidence = 0.0;  // confidence held at the start of round t
    bool would_publish = false;
};

struct AgentTrace {
    std::size_t agent = 0;
    std::vector<TracePoint> points;  // T entries
    std::vector<bool> outcomes;      // T-1 learning outcomes (true = correct)
};

/// Confidence path of every agent over one simulated run. Draws follow the
/// same stream and order as run 0 of simulate() under the same seed.
[[nodiscard]] inline std::vector<AgentTrace> trace_confidence(const Population& pop, std::uint64_t seed,
                                                              const specialfn::SpecialFnConfig& sf = {}) {
    const int T = pop.horizon_T();
    auto gen = rng::run_stream(seed, 0);

    std::vector<AgentTrace> traces(pop.size());
    std::vector<BetaBelief> beliefs;
    beliefs.reserve(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        traces[i].agent = i;
        traces[i].points.reserve(static_cast<std::size_t>(T));
        beliefs.push_back(pop.agents()[i].prior);
    }
    auto record = [&](int t) {
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const auto& g = pop.agents()[i].gate;
            traces[i].points.push_back({t, confidence(beliefs[i], g.p_critical, sf), gate(beliefs[i], g, sf)});
        }
    };
    for (int t = 1; t < T; ++t) {
        record(t);
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const bool correct = gen.bernoulli(pop.agents()[i].p);
            traces[i].outcomes.push_back(correct);
            beliefs[i] = update(beliefs[i], correct);
        }
    }
    record(T);
    return traces;
}

/// As above with the population's horizon replaced by `horizon_T`.
[[nodiscard]] inline std::vector<AgentTrace> trace_confidence(const Population& pop, std::uint64_t seed, int horizon_T,
                                                              const specialfn::SpecialFnConfig& sf = {}) {
    return trace_confidence(Population(pop.agents(), horizon_T), seed, sf);
}

}  // namespace cgv
