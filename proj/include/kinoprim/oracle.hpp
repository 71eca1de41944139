// Exhaustive lattice over the free grid reachable from a start state, its
// uniform-cost shortest path, and the two bounds that relate the planner to it.

#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "kinoprim/collision.hpp"
#include "kinoprim/core.hpp"
#include "kinoprim/database.hpp"
#include "kinoprim/geometry.hpp"
#include "kinoprim/planner.hpp"
#include "kinoprim/serialization.hpp"

namespace kinoprim {

struct LatticeEdge {
    std::int32_t target = -1;
    Lookup primitive;
    double cost = 0.0;
};

/// Nodes are numbered in discovery order; node 0 is the start.
struct LatticeGraph {
    PlanningGrid grid;
    std::vector<GridState> nodes;
    std::vector<std::vector<LatticeEdge>> edges;
    std::size_t free_states = 0;  // |Q_free| of the planning grid
    std::uint32_t map_hash = 0;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept {
        std::size_t n = 0;
        for (const auto& e : edges) n += e.size();
        return n;
    }
    [[nodiscard]] std::optional<std::int32_t> id_of(const GridIndex& g) const {
        if (!grid.contains(g)) return std::nullopt;
        const auto id = node_of[grid.flat(g)];
        if (id < 0) return std::nullopt;
        return id;
    }
    [[nodiscard]] const LatticeEdge* edge(std::int32_t from, std::int32_t to) const {
        for (const auto& e : edges[static_cast<std::size_t>(from)])
            if (e.target == to) return &e;
        return nullptr;
    }

    std::vector<std::int32_t> node_of;  // flat grid index -> node id, -1 when absent
};

struct LatticeOptions {
    std::size_t node_cap = 1'000'000;
};

[[nodiscard]] inline std::uint32_t map_hash(const OccupancyGrid& map) { return detail::crc32_of(serialize_map(map)); }

/// Breadth-first closure from q0: every stored primitive out of a node whose
/// target is a free grid state and whose translated trajectory is collision-free.
[[nodiscard]] inline LatticeGraph build_lattice(const State& q0, const OccupancyGrid& map, const PrimitiveDatabase& db,
                                                const PlanningRegion& region, const LatticeOptions& opts = {}) {
    LatticeGraph g{PlanningGrid(db.grid(), region), {}, {}, 0, map_hash(map), {}};
    const auto free = enumerate_free_grid(g.grid, map);
    g.free_states = free.size();
    std::vector<std::uint8_t> is_free(g.grid.size(), 0);
    for (const auto& s : free) is_free[g.grid.flat(s.index)] = 1;

    const GridState root = g.grid.snap(q0);
    if (!is_free[g.grid.flat(root.index)]) throw Error(ErrorCode::StartNotFree, "start state is not free");
    g.node_of.assign(g.grid.size(), -1);
    g.node_of[g.grid.flat(root.index)] = 0;
    g.nodes.push_back(root);
    g.edges.emplace_back();

    const GridSpec& spec = db.grid();
    for (std::size_t head = 0; head < g.nodes.size(); ++head) {
        const GridState u = g.nodes[head];
        std::vector<LatticeEdge> out;
        for (int tf = 0; tf < g.grid.ntheta(); ++tf)
            for (int vf = 0; vf < g.grid.nv(); ++vf)
                for (int dx = spec.offset_lo(0); dx <= spec.offset_hi(0); ++dx)
                    for (int dy = spec.offset_lo(1); dy <= spec.offset_hi(1); ++dy) {
                        const GridIndex t{u.index.ix + dx, u.index.iy + dy, tf, vf};
                        if (!g.grid.contains(t) || !is_free[g.grid.flat(t)]) continue;
                        const Lookup l = db.lookup(key_between(u.index, t));
                        if (!l.found()) continue;
                        const Position offset{u.state[0], u.state[1]};
                        if (!db.visit(l, [&](const Trajectory& z) { return collision_free(z, map, offset); }))
                            continue;
                        auto& id = g.node_of[g.grid.flat(t)];
                        if (id < 0) {
                            if (g.nodes.size() >= opts.node_cap)
                                throw Error(ErrorCode::GraphExplosion,
                                            "lattice reached " + std::to_string(g.nodes.size()) + " nodes");
                            id = static_cast<std::int32_t>(g.nodes.size());
                            g.nodes.push_back(g.grid.grid_state(t));
                            g.edges.emplace_back();
                        }
                        out.push_back({id, l, l.cost});
                    }
        g.edges[head] = std::move(out);
    }
    return g;
}

[[nodiscard]] inline LatticeGraph build_lattice(const State& q0, const OccupancyGrid& map, const PrimitiveDatabase& db,
                                                const LatticeOptions& opts = {}) {
    return build_lattice(q0, map, db, PlanningRegion::covering(map), opts);
}

struct ResolutionOptimum {
    std::vector<std::int32_t> branch;  // S*, node ids from the start
    double cost = 0.0;                 // c*Δ

    [[nodiscard]] std::size_t k() const noexcept { return branch.empty() ? 0 : branch.size() - 1; }
};

/// Uniform-cost search from node 0; the cheapest goal node wins, ties going
/// to the smaller node id.
[[nodiscard]] inline std::optional<ResolutionOptimum> shortest_path(const LatticeGraph& g, const GoalRegion& goal) {
    if (g.nodes.empty()) return std::nullopt;
    std::vector<double> dist(g.size(), kInf);
    std::vector<std::int32_t> pred(g.size(), -1);
    std::vector<std::uint8_t> done(g.size(), 0);
    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    dist[0] = 0.0;
    open.push({0.0, 0});
    while (!open.empty()) {
        const auto [d, u] = open.top();
        open.pop();
        if (done[static_cast<std::size_t>(u)]) continue;
        done[static_cast<std::size_t>(u)] = 1;
        for (const auto& e : g.edges[static_cast<std::size_t>(u)]) {
            const double nd = d + e.cost;
            auto& dv = dist[static_cast<std::size_t>(e.target)];
            if (nd < dv) {
                dv = nd;
                pred[static_cast<std::size_t>(e.target)] = u;
                open.push({nd, e.target});
            }
        }
    }
    std::int32_t best = -1;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (goal.contains(g.nodes[i].state) && dist[i] < kInf && (best < 0 || dist[i] < dist[static_cast<std::size_t>(best)]))
            best = static_cast<std::int32_t>(i);
    if (best < 0) return std::nullopt;
    ResolutionOptimum opt;
    for (std::int32_t v = best; v >= 0; v = pred[static_cast<std::size_t>(v)]) opt.branch.push_back(v);
    std::reverse(opt.branch.begin(), opt.branch.end());
    opt.cost = dist[static_cast<std::size_t>(best)];
    return opt;
}

/// S* as one trajectory.
[[nodiscard]] inline Trajectory optimum_trajectory(const LatticeGraph& g, const ResolutionOptimum& opt,
                                                   const PrimitiveDatabase& db) {
    if (opt.branch.size() == 1) {
        Trajectory z;
        z.state_dim = db.dynamics().d;
        z.control_dim = db.dynamics().m;
        z.times = {0.0};
        z.states = g.nodes[static_cast<std::size_t>(opt.branch[0])].state.values;
        return z;
    }
    std::vector<Trajectory> parts;
    for (std::size_t i = 1; i < opt.branch.size(); ++i) {
        const auto& from = g.nodes[static_cast<std::size_t>(opt.branch[i - 1])];
        const LatticeEdge* e = g.edge(opt.branch[i - 1], opt.branch[i]);
        parts.push_back(translate_trajectory(db.normalized_trajectory(e->primitive), Position{from.state[0], from.state[1]}));
    }
    Trajectory z = chain_trajectories(parts);
    z.cost = opt.cost;
    return z;
}

struct Theorem1Bound {
    double expected_iterations = 0.0;  // k |Q_free|
    double advance_probability = 0.0;  // 1 / |Q_free|
};

/// Expected-iteration bound of the absorbing chain that advances one branch
/// node per successful sample.
[[nodiscard]] inline Theorem1Bound theorem1_bound(std::size_t k, std::size_t free_states) {
    if (free_states == 0) throw Error(ErrorCode::DomainError, "free state count must be positive");
    return {static_cast<double>(k) * static_cast<double>(free_states), 1.0 / static_cast<double>(free_states)};
}

[[nodiscard]] inline Theorem1Bound theorem1_bound(const LatticeGraph& g, const ResolutionOptimum& opt) {
    return theorem1_bound(opt.k(), g.free_states);
}

struct TheoremBoundParams {
    double K_f = 1.0;
    double K_c = 1.0;
    double alpha = 1.0;
    double epsilon = 0.0;
    double epsilon_bar = 0.0;
    double l_min = 1.0;

    /// Radius of the non-overlapping balls: alpha epsilon / (2 K_f).
    [[nodiscard]] double delta() const noexcept { return alpha * epsilon / (2.0 * K_f); }

    void validate() const {
        if (!(l_min > 0)) throw Error(ErrorCode::DomainError, "l_min must be positive");
        if (!(K_f >= 1)) throw Error(ErrorCode::DomainError, "K_f must be at least 1");
        if (!(K_c >= 0)) throw Error(ErrorCode::DomainError, "K_c must be non-negative");
        if (!(alpha > 0 && alpha <= 1)) throw Error(ErrorCode::DomainError, "alpha must lie in (0, 1]");
        if (!(epsilon >= 0) || !(epsilon_bar >= 0)) throw Error(ErrorCode::DomainError, "clearance radii must be non-negative");
    }
};

/// (1 + Kc a e / (2 Kf l_min)) c_eps + Kc a e / (2 Kf).
[[nodiscard]] inline double theorem2_upper_bound(const TheoremBoundParams& p, double c_eps) {
    p.validate();
    if (!(c_eps >= 0)) throw Error(ErrorCode::DomainError, "c_eps must be non-negative");
    const double s = p.K_c * p.alpha * p.epsilon / (2.0 * p.K_f);
    return (1.0 + s / p.l_min) * c_eps + s;
}

}  // namespace kinoprim
