// RRT* over a gridded state space whose steering function is a table lookup.
//
// Each iteration samples a free grid state, collects tree nodes in the
// database box around it that share a stored primitive with it, connects it
// through the cheapest collision-free primitive (or re-parents it when it is
// already in the tree) and then rewires its neighbours through it.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kinoprim/collision.hpp"
#include "kinoprim/core.hpp"
#include "kinoprim/database.hpp"
#include "kinoprim/geometry.hpp"

namespace kinoprim {

enum class NearMode { BoundingBoxOnly, Threshold };
enum class ExtendRule { Sum, EdgeOnly };

/// Axis-aligned box over position, optionally pinning the velocity.
struct GoalRegion {
    Extent x;
    Extent y;
    std::optional<double> velocity;

    [[nodiscard]] bool contains(const State& q) const noexcept {
        constexpr double slack = 1e-9;
        if (!x.contains(q[0], slack) || !y.contains(q[1], slack)) return false;
        return !velocity || std::abs(q[3] - *velocity) <= slack;
    }
};

struct PlannerConfig {
    std::size_t iterations = 1000;  // N
    double gamma_l = 10.0;          // l(n) = gamma_l log(n) / n in threshold mode
    std::uint64_t seed = 0;
    GoalRegion goal;
    NearMode near_mode = NearMode::BoundingBoxOnly;
    ExtendRule extend_rule = ExtendRule::Sum;
    bool audit = false;  // verify the tree invariants after every iteration

    void validate() const {
        if (near_mode == NearMode::Threshold && !(gamma_l > 0))
            throw Error(ErrorCode::InvalidArgument, "threshold mode needs gamma_l > 0");
    }
};

struct TreeNode {
    GridIndex index;
    State state;
    std::int32_t parent = -1;
    double cost = 0.0;  // cost-to-come
    Lookup edge;        // primitive from the parent to this node
    std::vector<std::int32_t> children;
};

class Tree {
public:
    Tree() = default;
    Tree(const PlanningGrid& grid, const GridState& root) : node_of_(grid.size(), -1) {
        TreeNode r;
        r.index = root.index;
        r.state = root.state;
        node_of_[grid.flat(root.index)] = 0;
        nodes_.push_back(std::move(r));
    }

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] const TreeNode& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
    [[nodiscard]] const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::int32_t id_at(std::size_t flat) const noexcept { return node_of_[flat]; }

    std::int32_t add(const PlanningGrid& grid, const GridState& gs, std::int32_t parent, const Lookup& edge) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        TreeNode n;
        n.index = gs.index;
        n.state = gs.state;
        n.parent = parent;
        n.edge = edge;
        n.cost = nodes_[static_cast<std::size_t>(parent)].cost + edge.cost;
        nodes_.push_back(std::move(n));
        nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
        node_of_[grid.flat(gs.index)] = id;
        return id;
    }

    /// Replaces the parent edge of `id` and refreshes the cost-to-come of its subtree.
    void reparent(std::int32_t id, std::int32_t parent, const Lookup& edge) {
        auto& n = nodes_[static_cast<std::size_t>(id)];
        auto& siblings = nodes_[static_cast<std::size_t>(n.parent)].children;
        siblings.erase(std::find(siblings.begin(), siblings.end(), id));
        n.parent = parent;
        n.edge = edge;
        nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
        refresh_costs(id);
    }

    [[nodiscard]] bool is_ancestor(std::int32_t a, std::int32_t of) const {
        for (std::int32_t p = of; p >= 0; p = nodes_[static_cast<std::size_t>(p)].parent)
            if (p == a) return true;
        return false;
    }

    /// Marks `id` and every node below it.
    void mark_subtree(std::int32_t id, std::vector<std::uint8_t>& mark) const {
        mark.assign(nodes_.size(), 0);
        std::vector<std::int32_t> stack{id};
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            mark[static_cast<std::size_t>(v)] = 1;
            for (auto c : nodes_[static_cast<std::size_t>(v)].children) stack.push_back(c);
        }
    }

    /// Root-to-node id sequence.
    [[nodiscard]] std::vector<std::int32_t> branch(std::int32_t id) const {
        std::vector<std::int32_t> out;
        for (std::int32_t p = id; p >= 0; p = nodes_[static_cast<std::size_t>(p)].parent) out.push_back(p);
        std::reverse(out.begin(), out.end());
        return out;
    }

    /// Single root, acyclic parent links, exact cost-to-come sums and
    /// consistent child lists. Returns an empty string when all hold.
    [[nodiscard]] std::string audit() const {
        if (nodes_.empty()) return "empty tree";
        if (nodes_[0].parent != -1 || nodes_[0].cost != 0.0) return "root has a parent or nonzero cost";
        std::size_t child_links = 0;
        for (std::size_t i = 1; i < nodes_.size(); ++i) {
            const auto& n = nodes_[i];
            if (n.parent < 0 || static_cast<std::size_t>(n.parent) >= nodes_.size()) return "dangling parent";
            const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
            if (n.cost != p.cost + n.edge.cost) return "cost-to-come of node " + std::to_string(i) + " is stale";
            if (std::count(p.children.begin(), p.children.end(), static_cast<std::int32_t>(i)) != 1)
                return "child list of node " + std::to_string(n.parent) + " is inconsistent";
            std::size_t steps = 0;
            for (std::int32_t q = n.parent; q >= 0; q = nodes_[static_cast<std::size_t>(q)].parent)
                if (++steps > nodes_.size()) return "cycle through node " + std::to_string(i);
        }
        for (const auto& n : nodes_) child_links += n.children.size();
        if (child_links + 1 != nodes_.size()) return "child lists do not cover the tree";
        return {};
    }

    /// Edge into `id`, translated to its parent's position.
    [[nodiscard]] Trajectory edge_trajectory(std::int32_t id, const PrimitiveDatabase& db) const {
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
        Trajectory z = translate_trajectory(db.normalized_trajectory(n.edge), Position{p.state[0], p.state[1]});
        z.cost = n.edge.cost;
        return z;
    }

private:
    void refresh_costs(std::int32_t id) {
        std::vector<std::int32_t> stack{id};
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            auto& n = nodes_[static_cast<std::size_t>(v)];
            n.cost = nodes_[static_cast<std::size_t>(n.parent)].cost + n.edge.cost;
            for (auto c : n.children) stack.push_back(c);
        }
    }

    std::vector<TreeNode> nodes_;
    std::vector<std::int32_t> node_of_;
};

struct LogRow {
    std::size_t iter = 0;
    std::size_t n_nodes = 0;
    double best_cost = kInf;
    double elapsed_ms = 0.0;
};

struct PlanResult {
    Tree tree;
    std::vector<LogRow> log;
    std::int32_t best_node = -1;

    [[nodiscard]] double best_cost() const noexcept { return log.empty() ? kInf : log.back().best_cost; }
};

/// l(n) = gamma_l log(n) / n, with n held at 2 or more so that l stays positive.
[[nodiscard]] inline double near_threshold(double gamma_l, std::size_t n) {
    const double nn = static_cast<double>(std::max<std::size_t>(n, 2));
    return gamma_l * std::log(nn) / nn;
}

class Planner {
public:
    Planner(PlanningGrid grid, const OccupancyGrid& map, const PrimitiveDatabase& db, PlannerConfig cfg)
        : grid_(std::move(grid)), map_(&map), db_(&db), cfg_(std::move(cfg)), rng_(cfg_.seed) {
        cfg_.validate();
        if (!(grid_.spec().position_step == db.grid().position_step &&
              grid_.spec().orientations == db.grid().orientations && grid_.spec().velocities == db.grid().velocities))
            throw Error(ErrorCode::InvalidArgument, "planning grid and database grid differ");
        free_ = enumerate_free_grid(grid_, map);
    }

    [[nodiscard]] const PlanningGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<GridState>& free_states() const noexcept { return free_; }
    [[nodiscard]] const Tree& tree() const noexcept { return tree_; }
    [[nodiscard]] const std::vector<LogRow>& log() const noexcept { return log_; }
    [[nodiscard]] std::size_t iteration() const noexcept { return iter_; }
    [[nodiscard]] double best_cost() const noexcept { return best_cost_; }
    [[nodiscard]] std::int32_t best_node() const noexcept { return best_node_; }

    /// Places the root and writes the iteration-0 log row.
    void start(const State& q0) {
        const GridState root = grid_.snap(q0);
        if (!state_free(root.state, *map_)) throw Error(ErrorCode::StartNotFree, "start state is not free");
        const bool goal_exists = std::any_of(free_.begin(), free_.end(),
                                             [&](const GridState& g) { return cfg_.goal.contains(g.state); });
        if (!goal_exists) throw Error(ErrorCode::GoalUnreachableInGrid, "no free grid state lies in the goal region");
        tree_ = Tree(grid_, root);
        goal_nodes_.clear();
        iter_ = 0;
        log_.clear();
        clock_start_ = std::chrono::steady_clock::now();
        on_insert(0);
        update_best();
        log_.push_back({0, tree_.size(), best_cost_, 0.0});
    }

    [[nodiscard]] const GridState& sample() {
        std::uniform_int_distribution<std::size_t> pick(0, free_.size() - 1);
        return free_[pick(rng_)];
    }

    /// Tree nodes in the database box around q_rand that share a stored
    /// primitive with it in either direction (cost within l(n) in threshold mode).
    [[nodiscard]] std::vector<std::int32_t> near_nodes(const GridState& q_rand, double l_n) const {
        std::vector<std::int32_t> out;
        const auto& spec = grid_.spec();
        const std::int32_t self = tree_.id_at(grid_.flat(q_rand.index));
        for (int dy = spec.offset_lo(1); dy <= spec.offset_hi(1); ++dy) {
            const int iy = q_rand.index.iy + dy;
            if (iy < 0 || iy >= grid_.ny()) continue;
            for (int dx = spec.offset_lo(0); dx <= spec.offset_hi(0); ++dx) {
                const int ix = q_rand.index.ix + dx;
                if (ix < 0 || ix >= grid_.nx()) continue;
                for (int it = 0; it < grid_.ntheta(); ++it)
                    for (int iv = 0; iv < grid_.nv(); ++iv) {
                        const GridIndex gi{ix, iy, it, iv};
                        const std::int32_t id = tree_.id_at(grid_.flat(gi));
                        if (id < 0 || id == self) continue;
                        const Lookup to = db_->lookup(key_between(gi, q_rand.index));
                        const Lookup from = db_->lookup(key_between(q_rand.index, gi));
                        if (cfg_.near_mode == NearMode::BoundingBoxOnly) {
                            if (to.found() || from.found()) out.push_back(id);
                        } else if ((to.found() && to.cost <= l_n) || (from.found() && from.cost <= l_n)) {
                            out.push_back(id);
                        }
                    }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    struct Extension {
        std::int32_t parent = -1;
        Lookup edge;
    };

    /// Cheapest collision-free connection into q_rand; nodes flagged in
    /// `excluded` are skipped. Ties keep the earlier node.
    [[nodiscard]] Extension extend(const std::vector<std::int32_t>& near, const GridState& q_rand,
                                   const std::vector<std::uint8_t>* excluded = nullptr) const {
        Extension best;
        double c_best = kInf;
        for (auto id : near) {
            if (excluded && (*excluded)[static_cast<std::size_t>(id)]) continue;
            const auto& q = tree_.node(id);
            const Lookup e = db_->lookup(key_between(q.index, q_rand.index));
            if (!e.found()) continue;
            const double c = cfg_.extend_rule == ExtendRule::Sum ? q.cost + e.cost : e.cost;
            if (!(c < c_best)) continue;
            if (!edge_free(e, q.state)) continue;
            best = {id, e};
            c_best = c;
        }
        return best;
    }

    /// Re-parents neighbours of q_rand through it when that strictly lowers
    /// their cost-to-come.
    void rewire(std::int32_t rand_id, const std::vector<std::int32_t>& near, double l_n) {
        for (auto id : near) {
            const auto& q = tree_.node(id);
            const auto& r = tree_.node(rand_id);
            const Lookup e = db_->lookup(key_between(r.index, q.index));
            if (!e.found()) continue;
            if (cfg_.near_mode == NearMode::Threshold && !(e.cost <= l_n)) continue;
            if (!(r.cost + e.cost < q.cost)) continue;
            if (tree_.is_ancestor(id, rand_id)) continue;
            if (!edge_free(e, r.state)) continue;
            tree_.reparent(id, rand_id, e);
        }
    }

    /// One pass of sample, near nodes, extend, insert or re-parent, rewire.
    void step() {
        ++iter_;
        const GridState& q_rand = sample();
        const double l_n = near_threshold(cfg_.gamma_l, tree_.size());
        const auto near = near_nodes(q_rand, l_n);
        if (!near.empty()) {
            std::int32_t rand_id = tree_.id_at(grid_.flat(q_rand.index));
            if (rand_id < 0) {
                const Extension ext = extend(near, q_rand);
                if (ext.parent >= 0) {
                    rand_id = tree_.add(grid_, q_rand, ext.parent, ext.edge);
                    on_insert(rand_id);
                }
            } else if (rand_id != 0) {
                tree_.mark_subtree(rand_id, scratch_mark_);
                const Extension ext = extend(near, q_rand, &scratch_mark_);
                const auto& node = tree_.node(rand_id);
                if (ext.parent >= 0 && ext.parent != node.parent &&
                    tree_.node(ext.parent).cost + ext.edge.cost < node.cost)
                    tree_.reparent(rand_id, ext.parent, ext.edge);
            }
            if (rand_id >= 0) rewire(rand_id, near, l_n);
        }
        if (cfg_.audit) {
            const auto problem = tree_.audit();
            if (!problem.empty()) throw Error(ErrorCode::InvalidArgument, "tree audit failed: " + problem);
        }
        update_best();
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start_).count();
        log_.push_back({iter_, tree_.size(), best_cost_, ms});
    }

    PlanResult run(const State& q0) {
        start(q0);
        for (std::size_t i = 0; i < cfg_.iterations; ++i) step();
        return {tree_, log_, best_node_};
    }

private:
    [[nodiscard]] bool edge_free(const Lookup& e, const State& from) const {
        return db_->visit(e, [&](const Trajectory& z) { return collision_free(z, *map_, Position{from[0], from[1]}); });
    }

    void on_insert(std::int32_t id) {
        if (cfg_.goal.contains(tree_.node(id).state)) goal_nodes_.push_back(id);
    }

    void update_best() {
        best_node_ = -1;
        best_cost_ = kInf;
        for (auto id : goal_nodes_) {
            const double c = tree_.node(id).cost;
            if (c < best_cost_) best_cost_ = c, best_node_ = id;
        }
    }

    PlanningGrid grid_;
    const OccupancyGrid* map_;
    const PrimitiveDatabase* db_;
    PlannerConfig cfg_;
    std::mt19937_64 rng_;
    std::vector<GridState> free_;
    Tree tree_;
    std::vector<std::int32_t> goal_nodes_;
    std::vector<std::uint8_t> scratch_mark_;
    std::vector<LogRow> log_;
    std::size_t iter_ = 0;
    double best_cost_ = kInf;
    std::int32_t best_node_ = -1;
    std::chrono::steady_clock::time_point clock_start_;
};

/// Runs cfg.iterations iterations from q0 (snapped to the grid).
[[nodiscard]] inline PlanResult plan(const State& q0, const OccupancyGrid& map, const PrimitiveDatabase& db,
                                     const PlanningRegion& region, const PlannerConfig& cfg) {
    Planner p(PlanningGrid(db.grid(), region), map, db, cfg);
    return p.run(q0);
}

[[nodiscard]] inline PlanResult plan(const State& q0, const OccupancyGrid& map, const PrimitiveDatabase& db,
                                     const PlannerConfig& cfg) {
    return plan(q0, map, db, PlanningRegion::covering(map), cfg);
}

/// Concatenation of the edges root -> best goal node, or nothing when no node
/// reached the goal. Junction samples appear once; the cost is C(->q) itself.
[[nodiscard]] inline std::optional<Trajectory> best_trajectory(const Tree& tree, const GoalRegion& goal,
                                                               const PrimitiveDatabase& db) {
    std::int32_t best = -1;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const auto& n = tree.node(static_cast<std::int32_t>(i));
        if (goal.contains(n.state) && (best < 0 || n.cost < tree.node(best).cost)) best = static_cast<std::int32_t>(i);
    }
    if (best < 0) return std::nullopt;
    const auto& root = tree.node(0);
    Trajectory out;
    out.state_dim = root.state.size();
    out.control_dim = db.dynamics().m;
    out.cost = tree.node(best).cost;
    const auto ids = tree.branch(best);
    if (ids.size() == 1) {
        out.times.push_back(0.0);
        out.states = root.state.values;
        return out;
    }
    std::vector<Trajectory> parts;
    for (std::size_t k = 1; k < ids.size(); ++k) parts.push_back(tree.edge_trajectory(ids[k], db));
    Trajectory chained = chain_trajectories(parts);
    chained.cost = out.cost;
    return chained;
}

}  // namespace kinoprim
