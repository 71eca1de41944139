// Flat `key = value` experiment configuration.
//
// One assignment per line, `#` starts a comment, list values are separated by
// commas. Angles accept `pi` expressions such as `3*pi/4`. Relative paths are
// resolved against the directory of the config file.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kinoprim/collision.hpp"
#include "kinoprim/core.hpp"
#include "kinoprim/database.hpp"
#include "kinoprim/dynamics.hpp"
#include "kinoprim/geometry.hpp"
#include "kinoprim/oracle.hpp"
#include "kinoprim/planner.hpp"
#include "kinoprim/steering.hpp"

namespace kinoprim::bench {

struct ExperimentConfig {
    std::filesystem::path source;  // config file, empty when built in code

    GridSpec grid;
    DynamicsModel dynamics = make_unicycle();
    CostModel cost = make_quadratic_effort_cost();
    SolverOptions solver;

    std::filesystem::path database;
    bool symmetric = false;
    std::size_t threads = 0;
    std::size_t histogram_bins = 20;

    std::filesystem::path map;
    double inflate_cells = 0.0;  // disc inflation applied to the map after loading
    std::optional<PlanningRegion> region;
    State start{0.0, 0.0, 0.0, 0.0};
    GoalRegion goal;
    std::size_t iterations = 1000;
    std::vector<std::uint64_t> seeds{0};
    std::vector<std::size_t> log_iterations;  // aggregate rows; empty means every iteration
    double gamma_l = 10.0;
    double gamma_rrt_star = 0.0;  // ball-radius constant, kept for the record only
    NearMode near_mode = NearMode::BoundingBoxOnly;
    ExtendRule extend_rule = ExtendRule::Sum;

    std::size_t node_cap = 1'000'000;
    bool dump_optimum = true;
    TheoremBoundParams bound_params;

    std::size_t timing_samples = 1000;
    std::uint64_t timing_seed = 0;

    std::filesystem::path out = ".";

    [[nodiscard]] PlannerConfig planner(std::uint64_t seed) const {
        PlannerConfig p;
        p.iterations = iterations;
        p.gamma_l = gamma_l;
        p.seed = seed;
        p.goal = goal;
        p.near_mode = near_mode;
        p.extend_rule = extend_rule;
        return p;
    }
    [[nodiscard]] DatabaseBuildOptions build_options() const {
        DatabaseBuildOptions o;
        o.solver = solver;
        o.threads = threads;
        o.symmetric = symmetric;
        return o;
    }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& key, const std::string& msg) {
    throw Error(ErrorCode::ConfigError, key.empty() ? msg : "'" + key + "': " + msg);
}

/// Number or product/quotient with `pi`: 1.5, pi, -pi/2, 3*pi/4, 0.25*pi.
[[nodiscard]] inline std::optional<double> parse_scalar(std::string_view tok) {
    tok = trim(tok);
    if (tok.empty()) return std::nullopt;
    double sign = 1.0;
    if (tok.front() == '-') {
        sign = -1.0;
        tok.remove_prefix(1);
    }
    double value = 1.0;
    bool any = false;
    char op = '*';
    while (!tok.empty()) {
        const auto cut = tok.find_first_of("*/");
        const std::string_view factor = trim(tok.substr(0, cut));
        double f = 0.0;
        if (factor == "pi")
            f = std::numbers::pi;
        else if (!parse_double(factor, f))
            return std::nullopt;
        value = op == '*' ? value * f : value / f;
        any = true;
        if (cut == std::string_view::npos) break;
        op = tok[cut];
        tok.remove_prefix(cut + 1);
        if (tok.empty()) return std::nullopt;
    }
    if (!any) return std::nullopt;
    return sign * value;
}

[[nodiscard]] inline std::vector<std::string_view> list_items(std::string_view v) {
    std::vector<std::string_view> out;
    for (auto item : split(v, ",")) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

/// Parsed assignments in file order, with their line numbers for messages.
class ConfigText {
public:
    explicit ConfigText(std::string_view text) {
        std::size_t line_no = 0;
        for (auto raw : kinoprim::detail::lines(text)) {
            ++line_no;
            auto line = raw.substr(0, raw.find('#'));
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                detail::config_error("", "line " + std::to_string(line_no) + " is not a key = value assignment");
            const std::string key(trim(line.substr(0, eq)));
            if (key.empty()) detail::config_error("", "line " + std::to_string(line_no) + " has an empty key");
            if (values_.count(key)) detail::config_error(key, "assigned twice");
            values_[key] = std::string(trim(line.substr(eq + 1)));
        }
    }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) > 0; }

    [[nodiscard]] const std::string* raw(const std::string& key) {
        used_[key] = true;
        auto it = values_.find(key);
        return it == values_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] std::optional<double> number(const std::string& key) {
        const auto* v = raw(key);
        if (!v) return std::nullopt;
        auto x = detail::parse_scalar(*v);
        if (!x) detail::config_error(key, "expected a number, got '" + *v + "'");
        return x;
    }

    template <typename Int>
    [[nodiscard]] std::optional<Int> integer(const std::string& key) {
        const auto* v = raw(key);
        if (!v) return std::nullopt;
        Int x{};
        if (!parse_int(trim(*v), x)) detail::config_error(key, "expected a non-negative integer, got '" + *v + "'");
        return x;
    }

    [[nodiscard]] std::optional<bool> boolean(const std::string& key) {
        const auto* v = raw(key);
        if (!v) return std::nullopt;
        if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
        if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
        detail::config_error(key, "expected true or false, got '" + *v + "'");
    }

    [[nodiscard]] std::optional<std::vector<double>> numbers(const std::string& key, std::size_t exact = 0) {
        const auto* v = raw(key);
        if (!v) return std::nullopt;
        std::vector<double> out;
        for (auto item : detail::list_items(*v)) {
            auto x = detail::parse_scalar(item);
            if (!x) detail::config_error(key, "bad list item '" + std::string(item) + "'");
            out.push_back(*x);
        }
        if (exact && out.size() != exact)
            detail::config_error(key, "expected " + std::to_string(exact) + " values, got " + std::to_string(out.size()));
        return out;
    }

    /// Integers, with `a..b` ranges allowed.
    template <typename Int>
    [[nodiscard]] std::optional<std::vector<Int>> integers(const std::string& key) {
        const auto* v = raw(key);
        if (!v) return std::nullopt;
        std::vector<Int> out;
        for (auto item : detail::list_items(*v)) {
            const auto dots = item.find("..");
            Int a{}, b{};
            if (dots == std::string_view::npos) {
                if (!parse_int(item, a)) detail::config_error(key, "bad integer '" + std::string(item) + "'");
                out.push_back(a);
                continue;
            }
            if (!parse_int(trim(item.substr(0, dots)), a) || !parse_int(trim(item.substr(dots + 2)), b) || b < a)
                detail::config_error(key, "bad range '" + std::string(item) + "'");
            for (Int i = a; i <= b; ++i) out.push_back(i);
        }
        return out;
    }

    [[nodiscard]] std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> used_;
};

/// Command-line overrides applied on top of the file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iterations;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> database;
    std::optional<double> inflate_cells;
};

[[nodiscard]] inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                                                   const Overrides& ov = {}) {
    ConfigText c(text);
    ExperimentConfig cfg;
    auto path_of = [&](const std::string& key) -> std::optional<std::filesystem::path> {
        const auto* v = c.raw(key);
        if (!v) return std::nullopt;
        if (v->empty()) detail::config_error(key, "empty path");
        std::filesystem::path p(*v);
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    auto wrapped = [](std::vector<double> v) {
        for (auto& x : v) x = wrap_angle(x);
        return v;
    };

    // grid
    if (auto v = c.number("position_step")) cfg.grid.position_step = *v;
    if (auto v = c.numbers("position_extents", 4)) {
        cfg.grid.position_extents = {Extent{(*v)[0], (*v)[1]}, Extent{(*v)[2], (*v)[3]}};
    }
    if (auto v = c.numbers("orientations")) cfg.grid.orientations = wrapped(*v);
    if (auto v = c.numbers("velocities")) cfg.grid.velocities = *v;
    if (auto v = c.numbers("initial_headings"))
        cfg.grid.initial_headings = wrapped(*v);
    else
        cfg.grid.initial_headings = cfg.grid.orientations;
    std::sort(cfg.grid.orientations.begin(), cfg.grid.orientations.end());
    std::sort(cfg.grid.initial_headings.begin(), cfg.grid.initial_headings.end());

    // models
    NamedParameters dyn_params;
    for (const char* k : {"v_min", "v_max", "a_max", "w_max"})
        if (auto v = c.number(k)) dyn_params.emplace_back(k, *v);
    std::string dyn_name = "unicycle";
    if (const auto* v = c.raw("dynamics")) dyn_name = *v;
    NamedParameters cost_params;
    if (auto v = c.numbers("cost_r"))
        for (std::size_t i = 0; i < v->size(); ++i) cost_params.emplace_back("r" + std::to_string(i), (*v)[i]);
    std::string cost_name = "time_plus_effort";
    if (const auto* v = c.raw("cost")) cost_name = *v;
    try {
        cfg.dynamics = make_dynamics(dyn_name, dyn_params);
        cfg.cost = make_cost(cost_name, cost_params);
    } catch (const Error& e) {
        detail::config_error("", e.what());
    }

    // solver
    auto& s = cfg.solver;
    if (auto v = c.integer<std::size_t>("segments")) s.segments = *v;
    if (auto v = c.number("tau_min")) s.tau_min = *v;
    if (auto v = c.number("tau_max")) s.tau_max = *v;
    if (auto v = c.number("tol_bc_pos")) s.tol.position = *v;
    if (auto v = c.number("tol_bc_ang")) s.tol.angle = *v;
    if (auto v = c.number("tol_bc_vel")) s.tol.other = *v;
    if (auto v = c.integer<std::size_t>("multistarts")) s.multistarts = *v;
    if (auto v = c.integer<std::uint64_t>("solver_seed")) s.seed = *v;
    if (auto v = c.integer<std::size_t>("penalty_rounds")) s.penalty_rounds = *v;
    if (auto v = c.number("penalty_initial")) s.penalty_initial = *v;
    if (auto v = c.number("penalty_growth")) s.penalty_growth = *v;
    if (auto v = c.integer<std::size_t>("max_iterations")) s.max_iterations = *v;
    if (auto v = c.integer<std::size_t>("max_iterations_inner")) s.max_iterations_inner = *v;
    if (auto v = c.integer<std::size_t>("opt_substeps")) s.opt_substeps = *v;
    if (auto v = c.integer<std::size_t>("integration_steps")) s.integration_steps = *v;
    if (auto v = c.integer<std::size_t>("stored_samples")) s.stored_samples = *v;
    if (auto v = c.number("speed_hint")) s.speed_hint = *v;
    if (auto v = c.integer<std::size_t>("screening_samples")) s.screening_samples = *v;

    // database build
    if (auto p = path_of("database")) cfg.database = *p;
    if (auto v = c.boolean("symmetric")) cfg.symmetric = *v;
    if (auto v = c.integer<std::size_t>("threads")) cfg.threads = *v;
    if (auto v = c.integer<std::size_t>("histogram_bins")) cfg.histogram_bins = *v;

    // planning
    if (auto p = path_of("map")) cfg.map = *p;
    if (auto v = c.number("inflate_cells")) cfg.inflate_cells = *v;
    if (auto v = c.numbers("region", 4)) cfg.region = PlanningRegion{{(*v)[0], (*v)[1]}, {(*v)[2], (*v)[3]}};
    if (auto v = c.numbers("start", 4)) cfg.start = State(*v);
    if (auto v = c.numbers("goal_x", 2)) cfg.goal.x = {(*v)[0], (*v)[1]};
    if (auto v = c.numbers("goal_y", 2)) cfg.goal.y = {(*v)[0], (*v)[1]};
    if (auto v = c.number("goal_v")) cfg.goal.velocity = *v;
    if (auto v = c.integer<std::size_t>("iterations")) cfg.iterations = *v;
    if (auto v = c.integers<std::uint64_t>("seeds")) cfg.seeds = *v;
    if (auto v = c.integers<std::size_t>("log_iterations")) cfg.log_iterations = *v;
    if (auto v = c.number("gamma_l")) cfg.gamma_l = *v;
    if (auto v = c.number("gamma_rrt_star")) cfg.gamma_rrt_star = *v;
    if (const auto* v = c.raw("near_mode")) {
        if (*v == "bounding-box")
            cfg.near_mode = NearMode::BoundingBoxOnly;
        else if (*v == "threshold")
            cfg.near_mode = NearMode::Threshold;
        else
            detail::config_error("near_mode", "expected bounding-box or threshold");
    }
    if (const auto* v = c.raw("extend_rule")) {
        if (*v == "sum")
            cfg.extend_rule = ExtendRule::Sum;
        else if (*v == "edge-only")
            cfg.extend_rule = ExtendRule::EdgeOnly;
        else
            detail::config_error("extend_rule", "expected sum or edge-only");
    }

    // oracle
    if (auto v = c.integer<std::size_t>("node_cap")) cfg.node_cap = *v;
    if (auto v = c.boolean("dump_optimum")) cfg.dump_optimum = *v;
    auto& b = cfg.bound_params;
    if (auto v = c.number("K_f")) b.K_f = *v;
    if (auto v = c.number("K_c")) b.K_c = *v;
    if (auto v = c.number("alpha")) b.alpha = *v;
    if (auto v = c.number("epsilon")) b.epsilon = *v;
    if (auto v = c.number("epsilon_bar")) b.epsilon_bar = *v;
    if (auto v = c.number("l_min")) b.l_min = *v;

    // timing
    if (auto v = c.integer<std::size_t>("timing_samples")) cfg.timing_samples = *v;
    if (auto v = c.integer<std::uint64_t>("timing_seed")) cfg.timing_seed = *v;

    if (auto p = path_of("out")) cfg.out = *p;

    if (const auto extra = c.unused(); !extra.empty()) detail::config_error(extra.front(), "unknown key");

    if (ov.seed) cfg.seeds = {*ov.seed};
    if (ov.iterations) cfg.iterations = *ov.iterations;
    if (ov.out) cfg.out = *ov.out;
    if (ov.database) cfg.database = *ov.database;
    if (ov.inflate_cells) cfg.inflate_cells = *ov.inflate_cells;
    if (cfg.inflate_cells < 0) detail::config_error("inflate_cells", "must be non-negative");

    try {
        cfg.grid.validate();
        cfg.solver.validate();
        cfg.bound_params.validate();
    } catch (const Error& e) {
        detail::config_error("", e.what());
    }
    if (cfg.seeds.empty()) detail::config_error("seeds", "at least one seed is required");
    if (cfg.start.size() != cfg.dynamics.d) detail::config_error("start", "dimension does not match the model");
    if (cfg.near_mode == NearMode::Threshold && !(cfg.gamma_l > 0))
        detail::config_error("gamma_l", "threshold mode needs a positive value");
    return cfg;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& ov = {}) {
    std::string text;
    try {
        text = kinoprim::detail::read_file(path);
    } catch (const Error& e) {
        detail::config_error("", e.what());
    }
    auto cfg = parse_config(text, path.parent_path(), ov);
    cfg.source = path;
    return cfg;
}

/// Throws ConfigError when a file the command reads is missing.
inline void require_file(const std::filesystem::path& p, const char* key) {
    if (p.empty()) detail::config_error(key, "is required by this command");
    if (!std::filesystem::exists(p)) detail::config_error(key, "file '" + p.string() + "' does not exist");
}

}  // namespace kinoprim::bench
