#pragma once
// Experiment driver: configuration, parameter sweeps over N / T / tau, and
// CSV emission of bound, simulation and trace tables.
//
// Configuration files are JSON objects:
//
//   {
//     "schema_version": 1,
//     "scenarios": ["heterogeneous", "never_abstain"],
//     "sweep": {"axis": "N", "values": [10, 20, 30]},
//     "N": 50, "T": 20, "tau": 0.5, "p_critical": 0.5,
//     "kappa": 8, "epsilon": 1e-6,
//     "runs": 2000, "seed": 1, "threads": 1,
//     "out": "results.csv"
//   }
//
// Every key is optional; missing keys take the defaults below. The swept
// parameter's fixed value is ignored.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cgv/analytics.hpp"
#include "cgv/error.hpp"
#include "cgv/montecarlo.hpp"
#include "cgv/population.hpp"

namespace cgv::experiment {

inline constexpr int kSchemaVersion = 1;

enum class SweepAxis { N, T, Tau };

[[nodiscard]] constexpr std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::N: return "N";
        case SweepAxis::T: return "T";
        case SweepAxis::Tau: return "tau";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<SweepAxis> parse_axis(std::string_view s) {
    if (s == "N") return SweepAxis::N;
    if (s == "T") return SweepAxis::T;
    if (s == "tau") return SweepAxis::Tau;
    return std::nullopt;
}

/// N grid for the agent-count sweep: 10, 20, ..., 100.
[[nodiscard]] inline std::vector<double> default_n_grid() {
    std::vector<double> g;
    for (int n = 10; n <= 100; n += 10) g.push_back(n);
    return g;
}

/// tau grid: 0.00, 0.05, ..., 0.95 followed by a high-confidence tail where
/// the p = 0.75 agents can no longer certify themselves.
[[nodiscard]] inline std::vector<double> default_tau_grid() {
    std::vector<double> g;
    for (int i = 0; i < 20; ++i) g.push_back(i / 20.0);
    for (double t : {0.99, 0.995, 0.999, 0.9995, 0.9999}) g.push_back(t);
    return g;
}

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::vector<ScenarioKind> scenarios{std::begin(kAllScenarios), std::end(kAllScenarios)};
    SweepAxis axis = SweepAxis::N;
    std::vector<double> grid = default_n_grid();

    int n_agents = 50;
    int horizon_T = 20;
    double tau = 0.5;
    double p_critical = 0.5;
    double kappa = 8.0;
    double epsilon = 1e-6;
    long runs = 2000;
    std::uint64_t seed = 1;

    unsigned threads = 1;  // does not affect results
    std::string out;       // empty writes to stdout

    void validate() const;
};

/// One (scenario, grid value) combination with all parameters resolved.
struct GridPoint {
    ScenarioKind scenario;
    double axis_value;
    int n_agents;
    int horizon_T;
    double tau;
    double p_critical;
};

namespace detail {

inline bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string fmt_opt(const std::optional<T>& v) {
    return v ? fmt(static_cast<double>(*v)) : std::string{};
}

inline void check_n(double n, const std::vector<ScenarioKind>& scenarios, const std::string& where) {
    if (!is_integral(n) || n < 1 || n > 1e7) throw ConfigError(where + ": N must be a positive integer");
    const bool needs_even = std::any_of(scenarios.begin(), scenarios.end(),
                                        [](ScenarioKind k) { return k != ScenarioKind::Homogeneous; });
    if (needs_even && static_cast<long>(n) % 2 != 0) {
        throw ConfigError(where + ": N must be even for heterogeneous scenarios, got " + fmt(n));
    }
}

inline void check_t(double t, const std::string& where) {
    if (!is_integral(t) || t < 2 || t > 1e6) throw ConfigError(where + ": T must be an integer >= 2");
}

inline void check_tau(double tau, const std::string& where) {
    if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError(where + ": tau must lie in [0, 1), got " + fmt(tau));
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
    if (schema_version != kSchemaVersion) {
        throw ConfigError("schema_version: unsupported value " + std::to_string(schema_version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }
    if (scenarios.empty()) throw ConfigError("scenarios: at least one scenario required");
    if (grid.empty()) throw ConfigError("sweep.values: grid must be nonempty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep.values: grid must be strictly increasing");
    }
    for (double v : grid) {
        switch (axis) {
            case SweepAxis::N: detail::check_n(v, scenarios, "sweep.values"); break;
            case SweepAxis::T: detail::check_t(v, "sweep.values"); break;
            case SweepAxis::Tau: detail::check_tau(v, "sweep.values"); break;
        }
    }
    if (axis != SweepAxis::N) detail::check_n(n_agents, scenarios, "N");
    if (axis != SweepAxis::T) detail::check_t(horizon_T, "T");
    if (axis != SweepAxis::Tau) detail::check_tau(tau, "tau");
    if (!(p_critical > 0.0 && p_critical < 1.0)) throw ConfigError("p_critical: must lie in (0, 1)");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa: must be positive");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon: must be positive");
    if (runs < 1) throw ConfigError("runs: must be >= 1");
}

namespace detail {

inline std::size_t line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

template <class T>
T get_field(const nlohmann::json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace detail

/// Parses a JSON configuration document. Errors name the offending field or
/// the line of a syntax error.
[[nodiscard]] inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config syntax error at line " + std::to_string(detail::line_of(text, e.byte)) + ": " +
                          e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top-level value must be an object");

    static const char* const known[] = {"schema_version", "scenarios", "sweep", "N",    "T",       "tau", "p_critical",
                                        "kappa",          "epsilon",   "runs",  "seed", "threads", "out"};
    for (const auto& item : j.items()) {
        if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return item.key() == k; })) {
            throw ConfigError("field '" + item.key() + "': unknown key");
        }
    }

    ExperimentConfig cfg;
    if (!j.contains("schema_version")) throw ConfigError("field 'schema_version': required");
    cfg.schema_version = detail::get_field<int>(j, "schema_version");

    if (j.contains("scenarios")) {
        cfg.scenarios.clear();
        for (const auto& tag : detail::get_field<std::vector<std::string>>(j, "scenarios")) {
            auto kind = parse_scenario(tag);
            if (!kind) throw ConfigError("field 'scenarios': unknown scenario '" + tag + "'");
            cfg.scenarios.push_back(*kind);
        }
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        if (!s.is_object()) throw ConfigError("field 'sweep': expected an object with 'axis' and 'values'");
        const auto axis_tag = detail::get_field<std::string>(s, "axis");
        auto axis = parse_axis(axis_tag);
        if (!axis) throw ConfigError("field 'sweep.axis': expected one of N, T, tau; got '" + axis_tag + "'");
        cfg.axis = *axis;
        cfg.grid = detail::get_field<std::vector<double>>(s, "values");
    }
    if (j.contains("N")) cfg.n_agents = detail::get_field<int>(j, "N");
    if (j.contains("T")) cfg.horizon_T = detail::get_field<int>(j, "T");
    if (j.contains("tau")) cfg.tau = detail::get_field<double>(j, "tau");
    if (j.contains("p_critical")) cfg.p_critical = detail::get_field<double>(j, "p_critical");
    if (j.contains("kappa")) cfg.kappa = detail::get_field<double>(j, "kappa");
    if (j.contains("epsilon")) cfg.epsilon = detail::get_field<double>(j, "epsilon");
    if (j.contains("runs")) cfg.runs = detail::get_field<long>(j, "runs");
    if (j.contains("seed")) cfg.seed = detail::get_field<std::uint64_t>(j, "seed");
    if (j.contains("threads")) cfg.threads = detail::get_field<unsigned>(j, "threads");
    if (j.contains("out")) cfg.out = detail::get_field<std::string>(j, "out");
    return cfg;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Parses "axis=v1,v2,...".
inline void apply_sweep_flag(ExperimentConfig& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep: expected <axis>=<v1,v2,...>, got '" + spec + "'");
    auto axis = parse_axis(spec.substr(0, eq));
    if (!axis) throw ConfigError("--sweep: unknown axis '" + spec.substr(0, eq) + "'");
    std::vector<double> grid;
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--sweep: not a number: '" + item + "'");
        }
    }
    cfg.axis = *axis;
    cfg.grid = std::move(grid);
}

/// Parses "tag1,tag2,...".
inline void apply_scenario_flag(ExperimentConfig& cfg, const std::string& spec) {
    std::vector<ScenarioKind> kinds;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto kind = parse_scenario(item);
        if (!kind) throw ConfigError("--scenario: unknown scenario '" + item + "'");
        kinds.push_back(*kind);
    }
    cfg.scenarios = std::move(kinds);
}

/// Resolved configuration as JSON, excluding settings that do not affect
/// results (threads, output path).
[[nodiscard]] inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = cfg.schema_version;
    auto& sc = j["scenarios"] = nlohmann::json::array();
    for (auto k : cfg.scenarios) sc.push_back(std::string(to_string(k)));
    j["sweep"] = {{"axis", std::string(to_string(cfg.axis))}, {"values", cfg.grid}};
    j["N"] = cfg.n_agents;
    j["T"] = cfg.horizon_T;
    j["tau"] = cfg.tau;
    j["p_critical"] = cfg.p_critical;
    j["kappa"] = cfg.kappa;
    j["epsilon"] = cfg.epsilon;
    j["runs"] = cfg.runs;
    j["seed"] = cfg.seed;
    return j;
}

/// Grid points ordered by (scenario position in the config, grid value).
[[nodiscard]] inline std::vector<GridPoint> grid_points(const ExperimentConfig& cfg) {
    std::vector<GridPoint> pts;
    for (auto kind : cfg.scenarios) {
        for (double v : cfg.grid) {
            GridPoint g{kind, v, cfg.n_agents, cfg.horizon_T, cfg.tau, cfg.p_critical};
            switch (cfg.axis) {
                case SweepAxis::N: g.n_agents = static_cast<int>(v); break;
                case SweepAxis::T: g.horizon_T = static_cast<int>(v); break;
                case SweepAxis::Tau: g.tau = v; break;
            }
            pts.push_back(g);
        }
    }
    return pts;
}

[[nodiscard]] inline Population build_population(const ExperimentConfig& cfg, const GridPoint& g) {
    ScenarioParams sp;
    sp.kappa = cfg.kappa;
    sp.epsilon = cfg.epsilon;
    try {
        return build_scenario(g.scenario, g.n_agents, g.horizon_T, g.tau, g.p_critical, sp);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

struct BoundRow {
    GridPoint point;
    BoundReport report;
    double q_min = 0.0;
    double q_max = 0.0;
};

struct SimRow {
    GridPoint point;
    BoundReport report;
    SimResult success;        // ground truth omega*
    SimResult hallucination;  // ground truth omega_dagger
};

[[nodiscard]] inline std::vector<BoundRow> run_bounds(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<BoundRow> rows;
    for (const auto& g : grid_points(cfg)) {
        const auto pop = build_population(cfg, g);
        BoundRow row{g, bound_report(pop), 1.0, 0.0};
        for (const auto& c : row.report.contributions) {
            row.q_min = std::min(row.q_min, c.q);
            row.q_max = std::max(row.q_max, c.q);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

[[nodiscard]] inline std::vector<SimRow> run_simulations(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<SimRow> rows;
    for (const auto& g : grid_points(cfg)) {
        const auto pop = build_population(cfg, g);
        SimConfig star{cfg.runs, cfg.seed, GroundTruth::OmegaStar, cfg.threads};
        SimConfig dagger{cfg.runs, cfg.seed, GroundTruth::OmegaDagger, cfg.threads};
        rows.push_back({g, bound_report(pop), simulate(pop, star), simulate(pop, dagger)});
    }
    return rows;
}

namespace detail {

inline void write_preamble(std::ostream& os, std::string_view command, const ExperimentConfig& cfg) {
    os << "# cgv " << command << "\n";
    os << "# config: " << to_json(cfg).dump() << "\n";
}

inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

inline std::vector<std::string> point_cells(const ExperimentConfig& cfg, const GridPoint& g) {
    return {std::string(to_string(g.scenario)), std::string(to_string(cfg.axis)), fmt(g.axis_value),
            std::to_string(g.n_agents),         std::to_string(g.horizon_T),      fmt(g.tau),
            fmt(g.p_critical)};
}

}  // namespace detail

inline void write_bound_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<BoundRow>& rows) {
    detail::write_preamble(os, "bound", cfg);
    os << "scenario,axis,axis_value,N,T,tau,p_critical,expected_margin,variance_budget,lb_success,"
          "ub_hallucination,q_min,q_max,delta_p,q_min_competent,lb_convergence,convergence_ok\n";
    for (const auto& r : rows) {
        auto cells = detail::point_cells(cfg, r.point);
        const auto& b = r.report;
        for (auto s : {detail::fmt(b.expected_margin), detail::fmt(b.variance_budget),
                       detail::fmt(b.success_lower_bound), detail::fmt(b.hallucination_upper_bound),
                       detail::fmt(r.q_min), detail::fmt(r.q_max), detail::fmt(b.delta_p),
                       detail::fmt_opt(b.q_min_competent), detail::fmt_opt(b.convergence_lower_bound),
                       std::string(b.convergence_assumptions_met() ? "1" : "0")}) {
            cells.push_back(std::move(s));
        }
        detail::write_row(os, cells);
    }
}

inline void write_simulate_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<SimRow>& rows) {
    detail::write_preamble(os, "simulate", cfg);
    os << "scenario,axis,axis_value,N,T,tau,p_critical,lb_success,emp_success,ci_lo,ci_hi,"
          "ub_hallucination,emp_hallucination,runs,seed\n";
    for (const auto& r : rows) {
        auto cells = detail::point_cells(cfg, r.point);
        for (auto s : {detail::fmt(r.report.success_lower_bound), detail::fmt(r.success.empirical_success),
                       detail::fmt(r.success.wilson_ci95.lo), detail::fmt(r.success.wilson_ci95.hi),
                       detail::fmt(r.report.hallucination_upper_bound),
                       detail::fmt(r.hallucination.empirical_success), std::to_string(r.success.runs),
                       std::to_string(r.success.seed)}) {
            cells.push_back(std::move(s));
        }
        detail::write_row(os, cells);
    }
}

inline void write_sweep_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<SimRow>& rows) {
    detail::write_preamble(os, "sweep", cfg);
    os << "scenario,axis,axis_value,N,T,tau,p_critical,expected_margin,variance_budget,lb_success,"
          "ub_hallucination,emp_success,ci_lo,ci_hi,runs,seed\n";
    for (const auto& r : rows) {
        auto cells = detail::point_cells(cfg, r.point);
        const auto& b = r.report;
        for (auto s : {detail::fmt(b.expected_margin), detail::fmt(b.variance_budget),
                       detail::fmt(b.success_lower_bound), detail::fmt(b.hallucination_upper_bound),
                       detail::fmt(r.success.empirical_success), detail::fmt(r.success.wilson_ci95.lo),
                       detail::fmt(r.success.wilson_ci95.hi), std::to_string(r.success.runs),
                       std::to_string(r.success.seed)}) {
            cells.push_back(std::move(s));
        }
        detail::write_row(os, cells);
    }
}

/// Single-run confidence trajectories. The config must name exactly one
/// scenario and at most one grid value.
inline void write_trace_csv(std::ostream& os, const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenarios.size() != 1) throw ConfigError("trace: exactly one scenario required");
    if (cfg.grid.size() != 1) throw ConfigError("trace: exactly one grid value required");
    const auto g = grid_points(cfg).front();
    const auto pop = build_population(cfg, g);
    detail::write_preamble(os, "trace", cfg);
    os << "agent_id,t,confidence,would_publish\n";
    for (const auto& tr : trace_confidence(pop, cfg.seed)) {
        for (const auto& pt : tr.points) {
            os << tr.agent << ',' << pt.t << ',' << detail::fmt(pt.confidence) << ',' << (pt.would_publish ? 1 : 0)
               << '\n';
        }
    }
}

}  // namespace cgv::experiment
