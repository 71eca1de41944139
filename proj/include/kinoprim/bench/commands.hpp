// Subcommand bodies shared by the CLI and the tests: database build, planning
// runs over seeds, lattice oracle, and the lookup-versus-solve timing study.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kinoprim/bench/config.hpp"
#include "kinoprim/collision.hpp"
#include "kinoprim/database.hpp"
#include "kinoprim/oracle.hpp"
#include "kinoprim/planner.hpp"
#include "kinoprim/serialization.hpp"

namespace kinoprim::bench {

// ── CSV emission ────────────────────────────────────────────────────────────

[[nodiscard]] inline std::string log_csv(const std::vector<LogRow>& log) {
    std::string out = "iter,n_nodes,best_cost,elapsed_ms\n";
    for (const auto& r : log)
        out += std::to_string(r.iter) + ',' + std::to_string(r.n_nodes) + ',' + format_double(r.best_cost) + ',' +
               format_double(r.elapsed_ms) + '\n';
    return out;
}

[[nodiscard]] inline std::string tree_csv(const Tree& tree) {
    std::string out = "node_id,parent_id,cost_to_come,x,y,theta,v\n";
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const auto& n = tree.node(static_cast<std::int32_t>(i));
        out += std::to_string(i) + ',' + std::to_string(n.parent) + ',' + format_double(n.cost);
        for (double x : n.state.values) out += ',' + format_double(x);
        out += '\n';
    }
    return out;
}

/// `t,x,y,theta,v,w,a`; the final sample repeats the last control.
[[nodiscard]] inline std::string trajectory_csv(const std::optional<Trajectory>& z) {
    std::string out = "t,x,y,theta,v,w,a\n";
    if (!z) return out;
    const std::size_t m = z->control_dim;
    for (std::size_t i = 0; i < z->size(); ++i) {
        out += format_double(z->times[i]);
        for (double x : z->state(i)) out += ',' + format_double(x);
        const std::size_t ci = z->controls.empty() ? 0 : std::min(i, z->size() - 2);
        for (std::size_t j = 0; j < m; ++j)
            out += ',' + format_double(z->controls.empty() ? 0.0 : z->controls[ci * m + j]);
        out += '\n';
    }
    return out;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    kinoprim::detail::write_file(p, text);
}

// ── build-db ────────────────────────────────────────────────────────────────

struct BuildOutcome {
    PrimitiveDatabase db;
    BuildReport report;
};

[[nodiscard]] inline std::string build_report_csv(const BuildReport& r) {
    std::vector<double> t = r.solve_ms;
    std::sort(t.begin(), t.end());
    const double median = t.empty() ? 0.0 : t[t.size() / 2];
    return "attempted,feasible,infeasible,wall_seconds,median_solve_ms\n" + std::to_string(r.attempted) + ',' +
           std::to_string(r.feasible) + ',' + std::to_string(r.infeasible) + ',' + format_double(r.wall_seconds) +
           ',' + format_double(median) + '\n';
}

[[nodiscard]] inline std::string histogram_csv(const BuildReport& r, std::size_t bins) {
    std::string out = "bin_start_ms,count\n";
    for (const auto& [lo, n] : r.histogram(bins)) out += format_double(lo) + ',' + std::to_string(n) + '\n';
    return out;
}

/// Writes the database (and its infeasible sidecar) to cfg.database and the
/// build report next to the other outputs.
inline BuildOutcome cmd_build_db(const ExperimentConfig& cfg) {
    if (cfg.database.empty()) detail::config_error("database", "is required by build-db");
    BuildOutcome o;
    o.db = build_database(cfg.grid, cfg.dynamics, cfg.cost, cfg.build_options(), &o.report);
    if (cfg.database.has_parent_path()) std::filesystem::create_directories(cfg.database.parent_path());
    serialize(o.db, cfg.database);
    write_text(cfg.out / "build_report.csv", build_report_csv(o.report));
    write_text(cfg.out / "solve_histogram.csv", histogram_csv(o.report, cfg.histogram_bins));
    return o;
}

// ── plan ────────────────────────────────────────────────────────────────────

struct SeedRun {
    std::uint64_t seed = 0;
    PlanResult result;
    std::optional<Trajectory> solution;
};

struct PlanOutcome {
    std::vector<SeedRun> runs;
    std::vector<LogRow> aggregate;  // per logged iteration, averaged over seeds
};

/// The configured map, inflated when requested.
[[nodiscard]] inline OccupancyGrid load_config_map(const ExperimentConfig& cfg) {
    require_file(cfg.map, "map");
    OccupancyGrid map = load_map(cfg.map);
    return cfg.inflate_cells > 0 ? inflate(map, cfg.inflate_cells) : map;
}

[[nodiscard]] inline PlanningRegion region_of(const ExperimentConfig& cfg, const OccupancyGrid& map) {
    return cfg.region ? *cfg.region : PlanningRegion::covering(map);
}

/// Mean of each log column over seeds at the requested iterations; every
/// iteration when `at` is empty.
[[nodiscard]] inline std::vector<LogRow> aggregate_logs(const std::vector<SeedRun>& runs,
                                                        std::vector<std::size_t> at) {
    if (runs.empty()) return {};
    const std::size_t last = runs.front().result.log.back().iter;
    if (at.empty())
        for (std::size_t i = 0; i <= last; ++i) at.push_back(i);
    std::vector<LogRow> out;
    for (std::size_t it : at) {
        if (it > last) continue;
        LogRow r;
        r.iter = it;
        r.best_cost = 0.0;
        double nodes = 0.0;
        for (const auto& run : runs) {
            const auto& row = run.result.log[it];
            r.best_cost += row.best_cost;
            nodes += static_cast<double>(row.n_nodes);
            r.elapsed_ms += row.elapsed_ms;
        }
        const double k = static_cast<double>(runs.size());
        r.best_cost /= k;
        r.elapsed_ms /= k;
        r.n_nodes = static_cast<std::size_t>(nodes / k + 0.5);
        out.push_back(r);
    }
    return out;
}

[[nodiscard]] inline std::string aggregate_csv(const std::vector<LogRow>& rows) {
    std::string out = "iter,mean_best_cost,mean_n_nodes,mean_elapsed_ms\n";
    for (const auto& r : rows)
        out += std::to_string(r.iter) + ',' + format_double(r.best_cost) + ',' + std::to_string(r.n_nodes) + ',' +
               format_double(r.elapsed_ms) + '\n';
    return out;
}

/// Plans from an already loaded database and map. Seeds run as independent jobs.
inline PlanOutcome run_plans(const ExperimentConfig& cfg, const PrimitiveDatabase& db, const OccupancyGrid& map) {
    PlanOutcome o;
    o.runs.resize(cfg.seeds.size());
    const PlanningRegion region = region_of(cfg, map);
    kinoprim::detail::parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t i) {
        auto& run = o.runs[i];
        run.seed = cfg.seeds[i];
        const PlannerConfig pc = cfg.planner(run.seed);
        run.result = plan(cfg.start, map, db, region, pc);
        run.solution = best_trajectory(run.result.tree, pc.goal, db);
    });
    o.aggregate = aggregate_logs(o.runs, cfg.log_iterations);
    return o;
}

inline PlanOutcome cmd_plan(const ExperimentConfig& cfg) {
    require_file(cfg.database, "database");
    const PrimitiveDatabase db = deserialize(cfg.database);
    const OccupancyGrid map = load_config_map(cfg);
    PlanOutcome o = run_plans(cfg, db, map);
    for (const auto& run : o.runs) {
        const std::string tag = "seed" + std::to_string(run.seed);
        write_text(cfg.out / ("log_" + tag + ".csv"), log_csv(run.result.log));
        write_text(cfg.out / ("tree_" + tag + ".csv"), tree_csv(run.result.tree));
        write_text(cfg.out / ("trajectory_" + tag + ".csv"), trajectory_csv(run.solution));
    }
    write_text(cfg.out / "aggregate.csv", aggregate_csv(o.aggregate));
    return o;
}

// ── oracle ──────────────────────────────────────────────────────────────────

struct OracleOutcome {
    LatticeGraph graph;
    std::optional<ResolutionOptimum> optimum;
    std::optional<Theorem1Bound> bound;
};

[[nodiscard]] inline std::string oracle_csv(const OracleOutcome& o) {
    std::string out = "c_star_delta,k,n_nodes,n_edges,theorem1_bound\n";
    if (o.optimum)
        out += format_double(o.optimum->cost) + ',' + std::to_string(o.optimum->k()) + ',';
    else
        out += ",,";
    out += std::to_string(o.graph.size()) + ',' + std::to_string(o.graph.edge_count()) + ',';
    if (o.bound) out += format_double(o.bound->expected_iterations);
    out += '\n';
    return out;
}

inline OracleOutcome run_oracle(const ExperimentConfig& cfg, const PrimitiveDatabase& db, const OccupancyGrid& map) {
    OracleOutcome o;
    o.graph = build_lattice(cfg.start, map, db, region_of(cfg, map), LatticeOptions{cfg.node_cap});
    o.optimum = shortest_path(o.graph, cfg.goal);
    if (o.optimum) o.bound = theorem1_bound(o.graph, *o.optimum);
    return o;
}

inline OracleOutcome cmd_oracle(const ExperimentConfig& cfg) {
    require_file(cfg.database, "database");
    const PrimitiveDatabase db = deserialize(cfg.database);
    const OccupancyGrid map = load_config_map(cfg);
    OracleOutcome o = run_oracle(cfg, db, map);
    write_text(cfg.out / "oracle.csv", oracle_csv(o));
    if (cfg.dump_optimum) {
        std::optional<Trajectory> z;
        if (o.optimum) z = optimum_trajectory(o.graph, *o.optimum, db);
        write_text(cfg.out / "optimum_trajectory.csv", trajectory_csv(z));
    }
    return o;
}

// ── timing ──────────────────────────────────────────────────────────────────

struct TimingSummary {
    std::size_t samples = 0;
    double lookup_median_ms = 0, lookup_min_ms = 0, lookup_max_ms = 0;
    double solve_median_ms = 0, solve_min_ms = 0, solve_max_ms = 0;

    [[nodiscard]] double ratio() const noexcept { return solve_median_ms / lookup_median_ms; }
};

namespace detail {

inline void summarize(std::vector<double> t, double& median, double& lo, double& hi) {
    std::sort(t.begin(), t.end());
    const std::size_t n = t.size();
    median = n % 2 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
    lo = t.front();
    hi = t.back();
}

}  // namespace detail

/// Times find_trajectory and solve_tpbvp on the same randomly drawn stored
/// pairs, each placed at a random grid offset.
[[nodiscard]] inline std::optional<TimingSummary> measure_timing(const PrimitiveDatabase& db, std::size_t samples,
                                                                 std::uint64_t seed) {
    if (samples == 0) return std::nullopt;
    const auto keys = db.answered_keys();
    if (keys.empty()) throw Error(ErrorCode::EmptyDatabase, "database holds no primitive to time");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, keys.size() - 1);
    std::uniform_int_distribution<int> shift(-50, 50);
    std::vector<double> lookup_ms, solve_ms;
    double sink = 0.0;
    using clock = std::chrono::steady_clock;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto k = keys[pick(rng)];
        auto [a, b] = key_states(db.grid(), k);
        const Position off{shift(rng) * db.grid().position_step, shift(rng) * db.grid().position_step};
        const State qa = translate_state(a, off), qb = translate_state(b, off);

        auto t0 = clock::now();
        const auto found = db.find_trajectory(qa, qb);
        auto t1 = clock::now();
        sink += found.cost;
        lookup_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

        t0 = clock::now();
        const auto solved = solve_tpbvp(qa, qb, db.dynamics(), db.cost_model(), db.solver_options());
        t1 = clock::now();
        sink += solved.feasible ? 1.0 : 0.0;
        solve_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    if (sink < 0) return std::nullopt;  // keeps the timed calls observable
    TimingSummary s;
    s.samples = samples;
    detail::summarize(lookup_ms, s.lookup_median_ms, s.lookup_min_ms, s.lookup_max_ms);
    detail::summarize(solve_ms, s.solve_median_ms, s.solve_min_ms, s.solve_max_ms);
    return s;
}

[[nodiscard]] inline std::string timing_csv(const std::optional<TimingSummary>& s) {
    std::string out =
        "samples,lookup_median_ms,lookup_min_ms,lookup_max_ms,solve_median_ms,solve_min_ms,solve_max_ms,ratio\n";
    if (!s) return out;
    out += std::to_string(s->samples);
    for (double x : {s->lookup_median_ms, s->lookup_min_ms, s->lookup_max_ms, s->solve_median_ms, s->solve_min_ms,
                     s->solve_max_ms, s->ratio()})
        out += ',' + format_double(x);
    out += '\n';
    return out;
}

inline std::optional<TimingSummary> cmd_timing(const ExperimentConfig& cfg) {
    require_file(cfg.database, "database");
    const PrimitiveDatabase db = deserialize(cfg.database);
    auto s = measure_timing(db, cfg.timing_samples, cfg.timing_seed);
    write_text(cfg.out / "timing.csv", timing_csv(s));
    return s;
}

}  // namespace kinoprim::bench
