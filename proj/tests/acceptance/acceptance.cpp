// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "kinoprim/bench/commands.hpp"
#include "support.hpp"

using namespace kptest;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream why;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) why << what;
        ok = ok && cond;
    }
};

struct PlanRuns {
    LatticeGraph graph;
    ResolutionOptimum optimum;
    std::size_t iterations = 0;
    std::vector<PlanResult> results;
};

PlannerConfig planner_config(std::size_t iterations, std::uint64_t seed) {
    PlannerConfig c;
    c.iterations = iterations;
    c.seed = seed;
    c.goal = fixture_goal("small_wall");
    return c;
}

/// The shared runs behind the planner criteria: 50 seeds on the wall fixture,
/// each run to 20 k |Q_free| iterations.
const PlanRuns& wall_runs() {
    static const PlanRuns runs = [] {
        PlanRuns r;
        const auto map = fixture_map("small_wall");
        r.graph = build_lattice(fixture_start(), map, coarse_db(), fixture_region());
        r.optimum = *shortest_path(r.graph, fixture_goal("small_wall"));
        r.iterations = static_cast<std::size_t>(20 * theorem1_bound(r.graph, r.optimum).expected_iterations);
        for (std::uint64_t seed = 0; seed < 50; ++seed)
            r.results.push_back(plan(fixture_start(), map, coarse_db(), fixture_region(), planner_config(r.iterations, seed)));
        return r;
    }();
    return runs;
}

bool reaches(double cost, double optimum) { return std::abs(cost - optimum) <= 1e-9 * optimum; }

Check oracle_equivalence() {
    Check c;
    const auto& r = wall_runs();
    c.why << "lattice " << r.graph.size() << " nodes, c* " << format_double(r.optimum.cost) << ", N " << r.iterations;
    c.expect(r.graph.size() <= 500, "; lattice too large");
    for (std::size_t s = 0; s < 10; ++s)
        c.expect(reaches(r.results[s].best_cost(), r.optimum.cost),
                 "; seed " + std::to_string(s) + " ended at " + format_double(r.results[s].best_cost()));
    return c;
}

Check expected_iterations() {
    Check c;
    const auto& r = wall_runs();
    const double bound = theorem1_bound(r.graph, r.optimum).expected_iterations;
    double total = 0;
    for (const auto& res : r.results) {
        std::size_t first = r.iterations + 1;
        for (const auto& row : res.log)
            if (reaches(row.best_cost, r.optimum.cost)) {
                first = row.iter;
                break;
            }
        total += static_cast<double>(first);
    }
    const double mean = total / static_cast<double>(r.results.size());
    c.why << "mean first hit " << format_double(mean) << " over " << r.results.size() << " seeds, bound "
          << format_double(bound);
    c.expect(mean <= bound, "");
    return c;
}

bool monotone(const std::vector<LogRow>& log) {
    for (std::size_t i = 1; i < log.size(); ++i)
        if (log[i].best_cost > log[i - 1].best_cost) return false;
    return true;
}

Check anytime_monotonicity() {
    Check c;
    std::size_t logs = 0;
    for (const auto& res : wall_runs().results) {
        c.expect(monotone(res.log), "; a wall log increases");
        ++logs;
    }
    // Threshold mode and the other maps, through the bench command.
    const auto dir = scratch_dir("acceptance_logs");
    for (const char* m : {"small_open", "small_slalom"})
        for (const char* mode : {"bounding-box", "threshold"}) {
            std::ostringstream cfg;
            cfg << "position_step = 1\nposition_extents = -1, 1, -1, 1\norientations = 0, pi/2, pi, 3*pi/2\n"
                << "velocities = 1\ndatabase = " << coarse_db_path().string() << "\nmap = "
                << (kDataDir / "maps" / (std::string(m) + ".txt")).string() << "\nregion = 0, 6, 0, 6\n"
                << "start = 0, 0, 0, 1\ngoal_x = 5.5, 6.5\ngoal_y = "
                << (std::string(m) == "small_slalom" ? "-0.5, 0.5" : "5.5, 6.5") << "\niterations = 2000\n"
                << "seeds = 0..4\nnear_mode = " << mode << "\nout = " << dir.string() << "\n";
            for (const auto& run : bench::cmd_plan(bench::parse_config(cfg.str())).runs) {
                c.expect(monotone(run.result.log), std::string("; ") + m + " " + mode + " log increases");
                ++logs;
            }
        }
    c.why << logs << " logs checked";
    return c;
}

bool trajectory_in_bounds(const Trajectory& z, const DynamicsModel& dyn) {
    for (std::size_t i = 0; i < z.size(); ++i)
        if (!dyn.state_in_bounds(z.state(i), 1e-6)) return false;
    for (std::size_t i = 0; i + 1 < z.size(); ++i)
        if (!dyn.control_in_bounds(z.control(i), 1e-6)) return false;
    return true;
}

Check constraint_satisfaction() {
    Check c;
    std::size_t stored = 0, solutions = 0;
    for (const auto* db : {&coarse_db(), &fine_db()})
        for (const auto& p : db->primitives()) {
            c.expect(trajectory_in_bounds(p.trajectory, db->dynamics()), "; stored primitive out of bounds");
            ++stored;
        }
    for (const auto& res : wall_runs().results) {
        const auto z = best_trajectory(res.tree, fixture_goal("small_wall"), coarse_db());
        c.expect(z.has_value(), "; run without a solution");
        if (z) c.expect(trajectory_in_bounds(*z, coarse_db().dynamics()), "; solution out of bounds");
        ++solutions;
    }
    const auto& r = wall_runs();
    c.expect(trajectory_in_bounds(optimum_trajectory(r.graph, r.optimum, coarse_db()), coarse_db().dynamics()),
             "; lattice optimum out of bounds");
    c.why << stored << " stored primitives, " << solutions + 1 << " solutions";
    return c;
}

Check lookup_solve_gap() {
    Check c;
    const auto s = bench::measure_timing(fine_db(), 1000, 0);
    c.why << "lookup median " << format_double(s->lookup_median_ms) << " ms, solve median "
          << format_double(s->solve_median_ms) << " ms, ratio " << format_double(s->ratio());
    c.expect(s->lookup_median_ms < 1.0 && s->ratio() >= 100.0, "");
    return c;
}

Check tree_cardinality() {
    Check c;
    const auto& r = wall_runs();
    std::size_t exhausted = 0;
    for (const auto& res : r.results) {
        for (const auto& row : res.log) c.expect(row.n_nodes <= r.graph.size(), "; tree larger than the lattice");
        c.expect(res.tree.size() <= r.graph.size(), "; tree larger than the lattice");
        exhausted += res.tree.size() == r.graph.size();
    }
    c.why << exhausted << "/" << r.results.size() << " runs end with all " << r.graph.size() << " lattice nodes";
    c.expect(exhausted == r.results.size(), "");
    return c;
}

Check translation_invariance() {
    Check c;
    const auto& db = coarse_db();
    const auto keys = db.answered_keys();
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> pick(0, keys.size() - 1);
    std::uniform_int_distribution<int> shift(-1000, 1000);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto k = keys[pick(rng)];
        const Lookup l = db.lookup(k);
        const Trajectory stored = db.normalized_trajectory(l);
        auto [a, b] = key_states(db.grid(), k);
        const Position off{shift(rng) * db.grid().position_step, shift(rng) * db.grid().position_step};
        const auto found = db.find_trajectory(translate_state(a, off), translate_state(b, off));
        c.expect(found.cost == l.cost, "; cost differs from the stored value");
        c.expect(found.trajectory.size() == stored.size(), "; sample count differs");
        if (found.trajectory.size() != stored.size()) continue;
        for (std::size_t i = 0; i < stored.size(); ++i) {
            const auto s = stored.state(i), f = found.trajectory.state(i);
            for (std::size_t j = 0; j < s.size(); ++j) {
                const double expected = j < 2 ? s[j] + off[j] : s[j];
                worst = std::max(worst, std::abs(f[j] - expected));
            }
        }
        c.expect(found.trajectory.controls == stored.controls && found.trajectory.times == stored.times,
                 "; controls or times differ");
    }
    c.why << "max state deviation " << worst;
    c.expect(worst <= 1e-12, "");
    return c;
}

Check refinement_trend() {
    Check c;
    const auto merged = embed_coarse(fine_db(), coarse_db());
    for (const char* m : {"small_open", "small_wall", "small_slalom"}) {
        const auto map = fixture_map(m);
        const auto coarse = shortest_path(build_lattice(fixture_start(), map, coarse_db(), fixture_region()), fixture_goal(m));
        const auto fine = shortest_path(build_lattice(fixture_start(), map, merged, fixture_region()), fixture_goal(m));
        c.expect(coarse && fine, std::string("; no optimum on ") + m);
        if (!coarse || !fine) continue;
        c.why << m << " " << format_double(fine->cost) << " <= " << format_double(coarse->cost) << "; ";
        c.expect(fine->cost <= coarse->cost, "");
    }
    return c;
}

Check steering_sanity() {
    Check c;
    const auto& db = coarse_db();
    const auto& dyn = db.dynamics();
    const auto& opts = db.solver_options();
    EnumerationOptions eo;
    eo.control_values = {{-2.0, 0.0, 2.0}, {-1.0, 0.0, 1.0}};
    eo.segments = 2;
    eo.tau_values = {0.8, 1.0, 1.2};
    eo.tol = opts.tol;

    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> pick(0, 2), heading(0, 3);
    std::uniform_real_distribution<double> speed(0.5, 2.0);
    std::size_t pairs = 0, attempts = 0;
    double worst_ratio = 0, worst_dev = 0;
    while (pairs < 20 && attempts < 200) {
        ++attempts;
        // Endpoint generated from the control lattice so that the enumeration succeeds.
        std::vector<double> u;
        for (int s = 0; s < 2; ++s) u.insert(u.end(), {eo.control_values[0][pick(rng)], eo.control_values[1][pick(rng)]});
        const double tau = eo.tau_values[pick(rng)];
        const State a{0, 0, heading(rng) * kPi / 2, speed(rng)};
        Trajectory end;
        try {
            end = integrate(a, ControlSchedule(2, u), tau, dyn, tau / 200);
        } catch (const Error&) {
            continue;
        }
        const auto brute = brute_force_steer(a, end.back(), dyn, db.cost_model(), eo);
        const auto solved = solve_tpbvp(a, end.back(), dyn, db.cost_model(), opts);
        if (!brute.feasible || !solved.feasible) continue;
        ++pairs;
        worst_ratio = std::max(worst_ratio, solved.cost() / brute.cost());
        c.expect(solved.cost() <= 1.05 * brute.cost(), "; solver more than 5% above the enumeration");

        const auto& z = solved.trajectory;
        const std::size_t sub = 8;
        const double h = z.tau / static_cast<double>(opts.integration_steps);
        const auto re = integrate(a, ControlSchedule(z.control_dim, z.controls), z.tau, dyn,
                                  z.tau / static_cast<double>((z.size() - 1) * sub));
        for (std::size_t i = 0; i < z.size(); ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                const double d = j == 2 ? angle_diff(re.state(sub * i)[j], z.state(i)[j]) : re.state(sub * i)[j] - z.state(i)[j];
                worst_dev = std::max(worst_dev, std::abs(d) / h);
            }
    }
    c.why << pairs << " pairs in " << attempts << " draws, worst cost ratio " << format_double(worst_ratio)
          << ", worst re-integration error " << format_double(worst_dev) << " h";
    c.expect(pairs == 20, "");
    c.expect(worst_dev <= 10.0, "");
    return c;
}

std::optional<ErrorCode> load_error(const std::string& text, const std::string& side = {}) {
    return error_code([&] { (void)deserialize_database(text, side); });
}

Check format_round_trips() {
    Check c;
    const auto dir = scratch_dir("acceptance_formats");
    for (const auto& path : {coarse_db_path(), fine_db_path()}) {
        const auto db = deserialize(path);
        serialize(db, dir / "copy.kpdb");
        c.expect(kinoprim::detail::read_file(dir / "copy.kpdb") == kinoprim::detail::read_file(path),
                 "; database bytes differ after a round trip");
        c.expect(deserialize(dir / "copy.kpdb") == db, "; database differs after a round trip");
    }
    for (const char* m : {"small_open", "small_wall", "small_slalom", "indoor_12x12"}) {
        const auto file = kDataDir / "maps" / (std::string(m) + ".txt");
        const auto map = load_map(file);
        save_map(map, dir / "map.txt");
        c.expect(kinoprim::detail::read_file(dir / "map.txt") == kinoprim::detail::read_file(file),
                 std::string("; map bytes differ: ") + m);
        c.expect(load_map(dir / "map.txt") == map, std::string("; map differs: ") + m);
    }

    const std::string text = serialize_database(coarse_db());
    std::string v0 = text;
    v0.replace(v0.find("KPDB1"), 5, "KPDB0");
    c.expect(load_error(v0) == ErrorCode::FormatVersionMismatch, "; old version accepted");
    c.expect(load_error(text.substr(0, text.rfind("key: "))) == ErrorCode::TruncatedRecord, "; truncation accepted");
    std::string flipped = text;
    const auto digit = flipped.find(" | ", flipped.find("key: ")) + 3;
    flipped[digit] = flipped[digit] == '9' ? '8' : static_cast<char>(flipped[digit] + 1);
    c.expect(load_error(flipped) == ErrorCode::ChecksumMismatch, "; corrupted cost accepted");
    c.expect(load_error("not a database\n") == ErrorCode::MalformedHeader, "; garbage accepted");
    c.expect(error_code([] { (void)parse_ascii_map("3 2 1 0 0\n000\n"); }) == ErrorCode::DimensionMismatch,
             "; short map accepted");
    c.expect(error_code([] { (void)parse_ascii_map("3 x 1 0 0\n000\n"); }) == ErrorCode::MalformedHeader,
             "; bad map header accepted");
    c.why << "2 databases, 4 maps, 6 corruptions";
    return c;
}

}  // namespace

int main() {
    const std::pair<const char*, Check (*)()> criteria[] = {
        {"AC1", oracle_equivalence},   {"AC2", expected_iterations},     {"AC3", anytime_monotonicity},
        {"AC4", constraint_satisfaction}, {"AC5", lookup_solve_gap},     {"AC6", tree_cardinality},
        {"AC7", translation_invariance}, {"AC8", refinement_trend},      {"AC9", steering_sanity},
        {"AC10", format_round_trips},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.why << "threw " << e.what();
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << name << ' ' << (c.ok ? "PASS" : "FAIL") << "  " << c.why.str() << " (" << std::fixed
                  << std::setprecision(1) << s << " s)" << std::defaultfloat << std::endl;
        failed += !c.ok;
    }
    return failed == 0 ? 0 : 1;
}
