// cgv: bound, simulate, sweep and trace experiments for confidence-gated
// majority voting.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical convergence error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cgv/error.hpp"
#include "cgv/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;

struct Overrides {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<long> runs;
    std::optional<std::string> out;
    std::optional<std::string> scenario;
    std::optional<std::string> sweep;
    std::optional<int> n_agents;
    std::optional<int> horizon_T;
    std::optional<double> tau;
    std::optional<double> p_critical;
    std::optional<double> kappa;
    std::optional<double> epsilon;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON experiment configuration");
    cmd->add_option("--seed", o.seed, "master RNG seed");
    cmd->add_option("--runs", o.runs, "Monte Carlo replications per grid point");
    cmd->add_option("--out", o.out, "output CSV path (default: stdout)");
    cmd->add_option("--scenario", o.scenario, "comma-separated scenarios: homogeneous,heterogeneous,never_abstain,contrary");
    cmd->add_option("--sweep", o.sweep, "sweep axis and grid, e.g. N=10,20,30 or tau=0.1,0.5");
    cmd->add_option("--N", o.n_agents, "number of agents (when not swept)");
    cmd->add_option("--T", o.horizon_T, "horizon T (when not swept)");
    cmd->add_option("--tau", o.tau, "abstention threshold (when not swept)");
    cmd->add_option("--p-critical", o.p_critical, "critical reliability level");
    cmd->add_option("--kappa", o.kappa, "contrary-prior strength");
    cmd->add_option("--epsilon", o.epsilon, "contrary-prior clip");
    cmd->add_option("--threads", o.threads, "worker threads for simulation (0 = all cores)");
}

cgv::experiment::ExperimentConfig resolve(const Overrides& o) {
    using namespace cgv::experiment;
    ExperimentConfig cfg = o.config ? load_config(*o.config) : ExperimentConfig{};
    if (o.seed) cfg.seed = *o.seed;
    if (o.runs) cfg.runs = *o.runs;
    if (o.out) cfg.out = *o.out;
    if (o.scenario) apply_scenario_flag(cfg, *o.scenario);
    if (o.sweep) apply_sweep_flag(cfg, *o.sweep);
    if (o.n_agents) cfg.n_agents = *o.n_agents;
    if (o.horizon_T) cfg.horizon_T = *o.horizon_T;
    if (o.tau) cfg.tau = *o.tau;
    if (o.p_critical) cfg.p_critical = *o.p_critical;
    if (o.kappa) cfg.kappa = *o.kappa;
    if (o.epsilon) cfg.epsilon = *o.epsilon;
    if (o.threads) cfg.threads = *o.threads;
    cfg.validate();
    return cfg;
}

template <class Fn>
void emit(const cgv::experiment::ExperimentConfig& cfg, Fn&& write) {
    if (cfg.out.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw cgv::ConfigError("cannot open output file '" + cfg.out + "'");
    write(f);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence-gated majority voting: analytic bounds and Monte Carlo experiments"};
    app.require_subcommand(1);

    Overrides bound_o, sim_o, sweep_o, trace_o;
    auto* bound = app.add_subcommand("bound", "analytic bound table per scenario and grid point");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo success and hallucination rates next to the bounds");
    auto* sweep = app.add_subcommand("sweep", "bound and simulation combined in one table");
    auto* trace = app.add_subcommand("trace", "per-agent confidence trajectories for one simulated run");
    add_common(bound, bound_o);
    add_common(simulate, sim_o);
    add_common(sweep, sweep_o);
    add_common(trace, trace_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    using namespace cgv::experiment;
    try {
        if (bound->parsed()) {
            const auto cfg = resolve(bound_o);
            const auto rows = run_bounds(cfg);
            emit(cfg, [&](std::ostream& os) { write_bound_csv(os, cfg, rows); });
        } else if (simulate->parsed()) {
            const auto cfg = resolve(sim_o);
            const auto rows = run_simulations(cfg);
            emit(cfg, [&](std::ostream& os) { write_simulate_csv(os, cfg, rows); });
        } else if (sweep->parsed()) {
            const auto cfg = resolve(sweep_o);
            const auto rows = run_simulations(cfg);
            emit(cfg, [&](std::ostream& os) { write_sweep_csv(os, cfg, rows); });
        } else if (trace->parsed()) {
            const auto cfg = resolve(trace_o);
            emit(cfg, [&](std::ostream& os) { write_trace_csv(os, cfg); });
        }
    } catch (const cgv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cgv::ConvergenceError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
