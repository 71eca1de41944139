// Lookup table of motion primitives over the normalized grid.
//
// A key joins the start state (0, 0, theta0, v0) to (dx, dy, thetaf, vf), with
// every component held as a grid index. Keys are packed into a dense table so
// a query is one array read; the table separates keys that were never
// attempted from keys whose boundary problem had no solution.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kinoprim/core.hpp"
#include "kinoprim/dynamics.hpp"
#include "kinoprim/geometry.hpp"
#include "kinoprim/steering.hpp"

namespace kinoprim {

struct PrimitiveKey {
    int theta0 = 0;
    int thetaf = 0;
    int v0 = 0;
    int vf = 0;
    int dx = 0;
    int dy = 0;

    [[nodiscard]] bool zero_offset() const noexcept { return dx == 0 && dy == 0; }
    friend auto operator<=>(const PrimitiveKey&, const PrimitiveKey&) = default;
};

/// Key joining grid point `from` to grid point `to` of a planning grid.
[[nodiscard]] inline PrimitiveKey key_between(const GridIndex& from, const GridIndex& to) noexcept {
    return {from.itheta, to.itheta, from.iv, to.iv, to.ix - from.ix, to.iy - from.iy};
}

struct MotionPrimitive {
    PrimitiveKey key;
    Trajectory trajectory;  // starts at the zero position

    [[nodiscard]] double cost() const noexcept { return trajectory.cost; }
    friend bool operator==(const MotionPrimitive&, const MotionPrimitive&) = default;
};

enum class LookupStatus { Found, OutOfExtent, NotAttempted, Infeasible, ZeroOffset };

[[nodiscard]] inline const char* to_string(LookupStatus s) noexcept {
    switch (s) {
        case LookupStatus::Found: return "Found";
        case LookupStatus::OutOfExtent: return "OutOfExtent";
        case LookupStatus::NotAttempted: return "NotAttempted";
        case LookupStatus::Infeasible: return "Infeasible";
        case LookupStatus::ZeroOffset: return "ZeroOffset";
    }
    return "Unknown";
}

// ── axis symmetry on keys ───────────────────────────────────────────────────

/// Elements of the reflection group {id, across-x, across-y, both}.
enum class KeyTransform : std::uint8_t { Identity = 0, AcrossX = 1, AcrossY = 2, Both = 3 };

/// Action of the reflection group on the keys of one grid. A group element is
/// usable on a key only when the image is again a valid key of the grid.
class KeyGroup {
public:
    explicit KeyGroup(const GridSpec& grid) : grid_(&grid) {
        const auto n = grid.orientations.size();
        across_x_.assign(n, -1);
        across_y_.assign(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
            const double th = grid.orientations[i];
            if (auto j = grid.orientation_index(-th)) across_x_[i] = *j;
            if (auto j = grid.orientation_index(std::numbers::pi - th)) across_y_[i] = *j;
        }
    }

    [[nodiscard]] std::optional<PrimitiveKey> apply(KeyTransform g, PrimitiveKey k) const {
        const auto bits = static_cast<unsigned>(g);
        if (bits & 1u) {
            if (across_x_[k.theta0] < 0 || across_x_[k.thetaf] < 0) return std::nullopt;
            k.theta0 = across_x_[k.theta0];
            k.thetaf = across_x_[k.thetaf];
            k.dy = -k.dy;
        }
        if (bits & 2u) {
            if (across_y_[k.theta0] < 0 || across_y_[k.thetaf] < 0) return std::nullopt;
            k.theta0 = across_y_[k.theta0];
            k.thetaf = across_y_[k.thetaf];
            k.dx = -k.dx;
        }
        if (k.dx < grid_->offset_lo(0) || k.dx > grid_->offset_hi(0) || k.dy < grid_->offset_lo(1) ||
            k.dy > grid_->offset_hi(1))
            return std::nullopt;
        return k;
    }

    /// Distinct keys reachable from k, each with the first group element reaching it.
    [[nodiscard]] std::vector<std::pair<KeyTransform, PrimitiveKey>> orbit(const PrimitiveKey& k) const {
        std::vector<std::pair<KeyTransform, PrimitiveKey>> out;
        for (auto g : {KeyTransform::Identity, KeyTransform::AcrossX, KeyTransform::AcrossY, KeyTransform::Both}) {
            auto img = apply(g, k);
            if (!img) continue;
            if (std::none_of(out.begin(), out.end(), [&](const auto& e) { return e.second == *img; }))
                out.emplace_back(g, *img);
        }
        return out;
    }

private:
    const GridSpec* grid_;
    std::vector<int> across_x_, across_y_;
};

/// Reflects a normalized trajectory; the cost is carried over unchanged.
[[nodiscard]] inline Trajectory reflect_trajectory(Trajectory z, KeyTransform g, const DynamicsModel& dyn) {
    if (g == KeyTransform::Identity) return z;
    if (!dyn.supports_reflection())
        throw Error(ErrorCode::SymmetryUnsupported, "dynamics model '" + dyn.name + "' declares no reflection");
    const auto bits = static_cast<unsigned>(g);
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (bits & 1u) dyn.reflect_state(Reflection::AcrossX, z.state(i));
        if (bits & 2u) dyn.reflect_state(Reflection::AcrossY, z.state(i));
    }
    for (std::size_t i = 0; i + 1 < z.size(); ++i) {
        std::span<double> u(z.controls.data() + i * z.control_dim, z.control_dim);
        if (bits & 1u) dyn.reflect_control(Reflection::AcrossX, u);
        if (bits & 2u) dyn.reflect_control(Reflection::AcrossY, u);
    }
    return z;
}

// ── database ────────────────────────────────────────────────────────────────

struct FoundTrajectory {
    Trajectory trajectory;
    double cost = 0.0;
};

/// Result of a table read. `slot` indexes primitives(); `transform` maps the
/// stored record onto the queried key (always Identity without symmetry).
struct Lookup {
    LookupStatus status = LookupStatus::NotAttempted;
    double cost = kInf;
    std::int32_t slot = -1;
    KeyTransform transform = KeyTransform::Identity;

    [[nodiscard]] bool found() const noexcept { return status == LookupStatus::Found; }
};

class PrimitiveDatabase {
public:
    static constexpr std::int32_t kNotAttempted = -1;
    static constexpr std::int32_t kInfeasible = -2;

    PrimitiveDatabase() = default;

    /// Primitives and infeasible keys are sorted by key. With `symmetric`, the
    /// records are orbit representatives and mirrored keys are answered by
    /// reflecting them on read.
    PrimitiveDatabase(GridSpec grid, DynamicsModel dyn, CostModel cost, SolverOptions solver,
                      std::vector<MotionPrimitive> primitives, std::vector<PrimitiveKey> infeasible,
                      bool symmetric = false)
        : grid_(std::move(grid)), dyn_(std::move(dyn)), cost_(std::move(cost)), solver_(solver),
          primitives_(std::move(primitives)), infeasible_(std::move(infeasible)), symmetric_(symmetric) {
        grid_.validate();
        if (symmetric_ && !dyn_.supports_reflection())
            throw Error(ErrorCode::SymmetryUnsupported, "dynamics model '" + dyn_.name + "' declares no reflection");
        std::sort(primitives_.begin(), primitives_.end(),
                  [](const MotionPrimitive& a, const MotionPrimitive& b) { return a.key < b.key; });
        std::sort(infeasible_.begin(), infeasible_.end());
        index();
    }

    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] const DynamicsModel& dynamics() const noexcept { return dyn_; }
    [[nodiscard]] const CostModel& cost_model() const noexcept { return cost_; }
    [[nodiscard]] const SolverOptions& solver_options() const noexcept { return solver_; }
    [[nodiscard]] const std::vector<MotionPrimitive>& primitives() const noexcept { return primitives_; }
    [[nodiscard]] const std::vector<PrimitiveKey>& infeasible_keys() const noexcept { return infeasible_; }
    [[nodiscard]] bool symmetric() const noexcept { return symmetric_; }
    [[nodiscard]] std::size_t size() const noexcept { return primitives_.size(); }
    [[nodiscard]] bool empty() const noexcept { return primitives_.empty(); }

    /// Whether every index of k lies inside the grid.
    [[nodiscard]] bool in_range(const PrimitiveKey& k) const noexcept {
        const int nt = grid_.orientation_count(), nv = grid_.velocity_count();
        return k.theta0 >= 0 && k.theta0 < nt && k.thetaf >= 0 && k.thetaf < nt && k.v0 >= 0 && k.v0 < nv &&
               k.vf >= 0 && k.vf < nv && k.dx >= grid_.offset_lo(0) && k.dx <= grid_.offset_hi(0) &&
               k.dy >= grid_.offset_lo(1) && k.dy <= grid_.offset_hi(1);
    }

    [[nodiscard]] Lookup lookup(const PrimitiveKey& k) const noexcept {
        Lookup out;
        if (!in_range(k)) {
            out.status = LookupStatus::OutOfExtent;
            return out;
        }
        if (k.zero_offset()) {
            out.status = LookupStatus::ZeroOffset;
            return out;
        }
        const std::size_t f = flat(k);
        const std::int32_t e = table_[f];
        if (e == kNotAttempted) return out;
        if (e == kInfeasible) {
            out.status = LookupStatus::Infeasible;
            return out;
        }
        out.status = LookupStatus::Found;
        out.slot = e;
        out.cost = primitives_[static_cast<std::size_t>(e)].cost();
        if (!transform_.empty()) out.transform = static_cast<KeyTransform>(transform_[f]);
        return out;
    }

    [[nodiscard]] LookupStatus status(const PrimitiveKey& k) const noexcept { return lookup(k).status; }

    /// The stored record's trajectory mapped onto the looked-up key, still at the origin.
    [[nodiscard]] Trajectory normalized_trajectory(const Lookup& l) const {
        if (!l.found()) throw Error(ErrorCode::NotInDatabase, std::string("key lookup: ") + to_string(l.status));
        const auto& z = primitives_[static_cast<std::size_t>(l.slot)].trajectory;
        return l.transform == KeyTransform::Identity ? z : reflect_trajectory(z, l.transform, dyn_);
    }

    /// Calls f(normalized trajectory) without copying unreflected records.
    template <typename F>
    decltype(auto) visit(const Lookup& l, F&& f) const {
        if (!l.found()) throw Error(ErrorCode::NotInDatabase, std::string("key lookup: ") + to_string(l.status));
        const auto& z = primitives_[static_cast<std::size_t>(l.slot)].trajectory;
        if (l.transform == KeyTransform::Identity) return std::forward<F>(f)(z);
        const Trajectory r = reflect_trajectory(z, l.transform, dyn_);
        return std::forward<F>(f)(r);
    }

    /// Key of the pair (q, target) after shifting q to the origin, or the reason it has none.
    [[nodiscard]] std::pair<std::optional<PrimitiveKey>, LookupStatus> key_for(const State& q,
                                                                               const State& target) const {
        if (q.size() != dyn_.d || target.size() != dyn_.d) return {std::nullopt, LookupStatus::OutOfExtent};
        const auto dx = detail::exact_integer((target[0] - q[0]) / grid_.position_step);
        const auto dy = detail::exact_integer((target[1] - q[1]) / grid_.position_step);
        const auto t0 = grid_.orientation_index(q[2]);
        const auto tf = grid_.orientation_index(target[2]);
        const auto v0 = grid_.velocity_index(q[3]);
        const auto vf = grid_.velocity_index(target[3]);
        if (!dx || !dy || !t0 || !tf || !v0 || !vf) return {std::nullopt, LookupStatus::OutOfExtent};
        PrimitiveKey k{*t0, *tf, *v0, *vf, *dx, *dy};
        return {k, lookup(k).status};
    }

    /// Translate to the origin, look the key up, translate the stored
    /// trajectory back. The cost is the stored value, never recomputed.
    [[nodiscard]] std::optional<FoundTrajectory> try_find_trajectory(const State& q, const State& target) const {
        auto [key, st] = key_for(q, target);
        if (!key || st != LookupStatus::Found) return std::nullopt;
        const Lookup l = lookup(*key);
        const Position offset{q[0], q[1]};
        FoundTrajectory out{translate_trajectory(normalized_trajectory(l), offset), l.cost};
        out.trajectory.cost = l.cost;
        return out;
    }

    [[nodiscard]] FoundTrajectory find_trajectory(const State& q, const State& target) const {
        auto [key, st] = key_for(q, target);
        if (!key || st != LookupStatus::Found)
            throw Error(ErrorCode::NotInDatabase, std::string("no stored primitive for the pair: ") + to_string(st));
        return *try_find_trajectory(q, target);
    }

    /// Keys that were attempted, in key order (the keys a full build solves).
    [[nodiscard]] std::vector<PrimitiveKey> answered_keys() const {
        std::vector<PrimitiveKey> out;
        for (std::size_t f = 0; f < table_.size(); ++f)
            if (table_[f] >= 0) out.push_back(unflat(f));
        return out;
    }

    friend bool operator==(const PrimitiveDatabase& a, const PrimitiveDatabase& b) {
        return a.grid_ == b.grid_ && a.dyn_.name == b.dyn_.name && a.dyn_.parameters == b.dyn_.parameters &&
               a.cost_.name == b.cost_.name && a.cost_.parameters == b.cost_.parameters && a.solver_ == b.solver_ &&
               a.symmetric_ == b.symmetric_ && a.primitives_ == b.primitives_ && a.infeasible_ == b.infeasible_;
    }

private:
    [[nodiscard]] std::size_t flat(const PrimitiveKey& k) const noexcept {
        const auto nt = static_cast<std::size_t>(grid_.orientation_count());
        const auto nv = static_cast<std::size_t>(grid_.velocity_count());
        const auto nx = static_cast<std::size_t>(grid_.offset_count(0));
        const auto ny = static_cast<std::size_t>(grid_.offset_count(1));
        std::size_t f = static_cast<std::size_t>(k.theta0);
        f = f * nt + static_cast<std::size_t>(k.thetaf);
        f = f * nv + static_cast<std::size_t>(k.v0);
        f = f * nv + static_cast<std::size_t>(k.vf);
        f = f * nx + static_cast<std::size_t>(k.dx - grid_.offset_lo(0));
        f = f * ny + static_cast<std::size_t>(k.dy - grid_.offset_lo(1));
        return f;
    }

    [[nodiscard]] PrimitiveKey unflat(std::size_t f) const noexcept {
        const auto nt = static_cast<std::size_t>(grid_.orientation_count());
        const auto nv = static_cast<std::size_t>(grid_.velocity_count());
        const auto nx = static_cast<std::size_t>(grid_.offset_count(0));
        const auto ny = static_cast<std::size_t>(grid_.offset_count(1));
        PrimitiveKey k;
        k.dy = static_cast<int>(f % ny) + grid_.offset_lo(1);
        f /= ny;
        k.dx = static_cast<int>(f % nx) + grid_.offset_lo(0);
        f /= nx;
        k.vf = static_cast<int>(f % nv);
        f /= nv;
        k.v0 = static_cast<int>(f % nv);
        f /= nv;
        k.thetaf = static_cast<int>(f % nt);
        k.theta0 = static_cast<int>(f / nt);
        return k;
    }

    void index() {
        const auto nt = static_cast<std::size_t>(grid_.orientation_count());
        const auto nv = static_cast<std::size_t>(grid_.velocity_count());
        table_.assign(nt * nt * nv * nv * grid_.position_count(), kNotAttempted);
        transform_.clear();
        for (std::size_t i = 1; i < primitives_.size(); ++i)
            if (primitives_[i - 1].key == primitives_[i].key)
                throw Error(ErrorCode::InvalidArgument, "duplicate primitive key");
        auto check = [&](const PrimitiveKey& k) {
            if (!in_range(k) || k.zero_offset()) throw Error(ErrorCode::InvalidArgument, "primitive key outside the grid");
        };
        if (!symmetric_) {
            for (const auto& k : infeasible_) check(k), table_[flat(k)] = kInfeasible;
            for (std::size_t i = 0; i < primitives_.size(); ++i) {
                check(primitives_[i].key);
                table_[flat(primitives_[i].key)] = static_cast<std::int32_t>(i);
            }
            return;
        }
        transform_.assign(table_.size(), 0);
        const KeyGroup group(grid_);
        for (const auto& k : infeasible_) {
            check(k);
            for (const auto& [g, img] : group.orbit(k)) table_[flat(img)] = kInfeasible;
        }
        for (std::size_t i = 0; i < primitives_.size(); ++i) {
            check(primitives_[i].key);
            for (const auto& [g, img] : group.orbit(primitives_[i].key)) {
                const std::size_t f = flat(img);
                table_[f] = static_cast<std::int32_t>(i);
                transform_[f] = static_cast<std::uint8_t>(g);
            }
        }
    }

    GridSpec grid_;
    DynamicsModel dyn_;
    CostModel cost_;
    SolverOptions solver_;
    std::vector<MotionPrimitive> primitives_;
    std::vector<PrimitiveKey> infeasible_;
    bool symmetric_ = false;
    std::vector<std::int32_t> table_;
    std::vector<std::uint8_t> transform_;
};

// ── build ───────────────────────────────────────────────────────────────────

struct DatabaseBuildOptions {
    SolverOptions solver;
    std::size_t threads = 0;  // 0: one per hardware thread
    bool symmetric = false;   // solve one representative per reflection orbit
    std::function<void(std::size_t done, std::size_t total)> progress;
};

struct BuildReport {
    std::size_t attempted = 0;
    std::size_t feasible = 0;
    std::size_t infeasible = 0;
    double wall_seconds = 0.0;
    std::vector<double> solve_ms;  // per attempted pair, in key order

    /// Counts of solve times in `bins` equal-width bins over [min, max].
    [[nodiscard]] std::vector<std::pair<double, std::size_t>> histogram(std::size_t bins = 20) const {
        std::vector<std::pair<double, std::size_t>> out;
        if (solve_ms.empty() || bins == 0) return out;
        const auto [lo_it, hi_it] = std::minmax_element(solve_ms.begin(), solve_ms.end());
        const double lo = *lo_it, hi = *hi_it, w = (hi - lo) / static_cast<double>(bins);
        for (std::size_t b = 0; b < bins; ++b) out.emplace_back(lo + w * static_cast<double>(b), 0);
        for (double t : solve_ms) {
            std::size_t b = w > 0 ? static_cast<std::size_t>((t - lo) / w) : 0;
            out[std::min(b, bins - 1)].second++;
        }
        return out;
    }
};

/// Keys a build attempts, in key order: every initial heading and velocity,
/// every nonzero offset, every final orientation and velocity.
[[nodiscard]] inline std::vector<PrimitiveKey> enumerate_keys(const GridSpec& grid) {
    grid.validate();
    std::vector<PrimitiveKey> keys;
    for (int t0 : grid.initial_heading_indices())
        for (int tf = 0; tf < grid.orientation_count(); ++tf)
            for (int v0 = 0; v0 < grid.velocity_count(); ++v0)
                for (int vf = 0; vf < grid.velocity_count(); ++vf)
                    for (int dx = grid.offset_lo(0); dx <= grid.offset_hi(0); ++dx)
                        for (int dy = grid.offset_lo(1); dy <= grid.offset_hi(1); ++dy)
                            if (dx != 0 || dy != 0) keys.push_back({t0, tf, v0, vf, dx, dy});
    std::sort(keys.begin(), keys.end());
    return keys;
}

/// Boundary states of a key in the normalized frame.
[[nodiscard]] inline std::pair<State, State> key_states(const GridSpec& grid, const PrimitiveKey& k) {
    return {State{0.0, 0.0, grid.orientations[static_cast<std::size_t>(k.theta0)],
                  grid.velocities[static_cast<std::size_t>(k.v0)]},
            State{k.dx * grid.position_step, k.dy * grid.position_step,
                  grid.orientations[static_cast<std::size_t>(k.thetaf)],
                  grid.velocities[static_cast<std::size_t>(k.vf)]}};
}

namespace detail {

/// Runs job(i) for i in [0, n) on a pool of worker threads.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job,
                         const std::function<void(std::size_t, std::size_t)>& progress = {}) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(n, 1));
    std::atomic<std::size_t> next{0}, done{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
            const std::size_t d = done.fetch_add(1) + 1;
            if (progress && threads == 1) progress(d, n);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (progress) progress(n, n);
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Solves every key of the grid (or one key per reflection orbit) and stores
/// the feasible ones. Results are merged in key order, so the database does
/// not depend on the thread count.
[[nodiscard]] inline PrimitiveDatabase build_database(const GridSpec& grid, const DynamicsModel& dyn,
                                                      const CostModel& cost, const DatabaseBuildOptions& opts = {},
                                                      BuildReport* report = nullptr) {
    grid.validate();
    dyn.validate();
    opts.solver.validate();
    if (opts.symmetric && !dyn.supports_reflection())
        throw Error(ErrorCode::SymmetryUnsupported, "dynamics model '" + dyn.name + "' declares no reflection");
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<PrimitiveKey> keys = enumerate_keys(grid);
    if (opts.symmetric) {
        // Solve the smallest key of each orbit; the others are answered by reflection.
        const KeyGroup group(grid);
        std::vector<PrimitiveKey> reps;
        for (const auto& k : keys) {
            const auto orb = group.orbit(k);
            const bool smallest = std::all_of(orb.begin(), orb.end(), [&](const auto& e) { return !(e.second < k); });
            if (smallest) reps.push_back(k);
        }
        keys = std::move(reps);
    }

    std::vector<SteeringResult> results(keys.size());
    std::vector<double> times(keys.size(), 0.0);
    detail::parallel_for(
        keys.size(), opts.threads,
        [&](std::size_t i) {
            const auto [a, b] = key_states(grid, keys[i]);
            const auto t0 = std::chrono::steady_clock::now();
            results[i] = solve_tpbvp(a, b, dyn, cost, opts.solver);
            times[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        },
        opts.progress);

    std::vector<MotionPrimitive> prims;
    std::vector<PrimitiveKey> infeasible;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (results[i].feasible)
            prims.push_back({keys[i], std::move(results[i].trajectory)});
        else
            infeasible.push_back(keys[i]);
    }
    if (report) {
        report->attempted = keys.size();
        report->feasible = prims.size();
        report->infeasible = infeasible.size();
        report->solve_ms = times;
        report->wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    }
    if (prims.empty()) throw Error(ErrorCode::EmptyDatabase, "no boundary pair of the grid is feasible");
    return PrimitiveDatabase(grid, dyn, cost, opts.solver, std::move(prims), std::move(infeasible), opts.symmetric);
}

/// Keeps one record per reflection orbit: the smallest feasible key of the
/// orbit. Orbits with no feasible member stay recorded as infeasible.
[[nodiscard]] inline PrimitiveDatabase symmetry_reduce(const PrimitiveDatabase& db) {
    if (!db.dynamics().supports_reflection())
        throw Error(ErrorCode::SymmetryUnsupported, "dynamics model '" + db.dynamics().name + "' declares no reflection");
    if (db.symmetric()) return db;
    const KeyGroup group(db.grid());
    std::vector<MotionPrimitive> kept;
    std::vector<PrimitiveKey> infeasible;
    for (const auto& p : db.primitives()) {
        bool representative = true;
        for (const auto& [g, img] : group.orbit(p.key))
            if (img < p.key && db.status(img) == LookupStatus::Found) representative = false;
        if (representative) kept.push_back(p);
    }
    for (const auto& k : db.infeasible_keys()) {
        bool all_infeasible = true, smallest = true;
        for (const auto& [g, img] : group.orbit(k)) {
            if (db.status(img) == LookupStatus::Found) all_infeasible = false;
            if (img < k && db.status(img) == LookupStatus::Infeasible) smallest = false;
        }
        if (all_infeasible && smallest) infeasible.push_back(k);
    }
    return PrimitiveDatabase(db.grid(), db.dynamics(), db.cost_model(), db.solver_options(), std::move(kept),
                             std::move(infeasible), true);
}

/// Database on the finer grid of `fine` that also holds every primitive of
/// `coarse`, keeping the cheaper record where both answer a key. The coarse
/// step must be an integer multiple of the fine step and its orientations and
/// velocities must appear in the fine sets. The result is unreduced.
[[nodiscard]] inline PrimitiveDatabase embed_coarse(const PrimitiveDatabase& fine, const PrimitiveDatabase& coarse) {
    const GridSpec& fg = fine.grid();
    const GridSpec& cg = coarse.grid();
    const auto ratio = detail::exact_integer(cg.position_step / fg.position_step);
    if (!ratio || *ratio < 1) throw Error(ErrorCode::InvalidArgument, "coarse step is not a multiple of the fine step");
    if (fine.dynamics().name != coarse.dynamics().name || fine.cost_model().name != coarse.cost_model().name)
        throw Error(ErrorCode::InvalidArgument, "databases use different models");
    auto map_index = [](const std::vector<double>& from, const std::vector<double>& to, bool angular) {
        std::vector<int> out;
        for (double x : from) {
            int found = -1;
            for (std::size_t i = 0; i < to.size(); ++i)
                if (std::abs(angular ? angle_diff(x, to[i]) : x - to[i]) <= detail::kIndexSlack) found = static_cast<int>(i);
            if (found < 0) throw Error(ErrorCode::InvalidArgument, "coarse grid value missing from the fine grid");
            out.push_back(found);
        }
        return out;
    };
    const auto th = map_index(cg.orientations, fg.orientations, true);
    const auto vel = map_index(cg.velocities, fg.velocities, false);

    std::vector<MotionPrimitive> prims;
    for (const auto& k : fine.answered_keys()) prims.push_back({k, fine.normalized_trajectory(fine.lookup(k))});
    std::vector<PrimitiveKey> infeasible;
    for (const auto& k : coarse.answered_keys()) {
        const PrimitiveKey fk{th[static_cast<std::size_t>(k.theta0)], th[static_cast<std::size_t>(k.thetaf)],
                              vel[static_cast<std::size_t>(k.v0)],    vel[static_cast<std::size_t>(k.vf)],
                              k.dx * *ratio,                          k.dy * *ratio};
        if (!fine.in_range(fk)) continue;
        const Lookup cl = coarse.lookup(k);
        auto it = std::lower_bound(prims.begin(), prims.end(), fk,
                                   [](const MotionPrimitive& p, const PrimitiveKey& key) { return p.key < key; });
        if (it != prims.end() && it->key == fk) {
            if (cl.cost < it->cost()) it->trajectory = coarse.normalized_trajectory(cl);
        } else {
            prims.insert(it, {fk, coarse.normalized_trajectory(cl)});
        }
    }
    // Keys the fine build could not solve stay infeasible unless a coarse record answers them.
    for (PrimitiveKey k : fine.infeasible_keys()) {
        std::vector<PrimitiveKey> images{k};
        if (fine.symmetric())
            for (const auto& [g, img] : KeyGroup(fg).orbit(k)) images.push_back(img);
        for (const auto& img : images) {
            auto it = std::lower_bound(prims.begin(), prims.end(), img,
                                       [](const MotionPrimitive& p, const PrimitiveKey& key) { return p.key < key; });
            if (it == prims.end() || it->key != img)
                infeasible.push_back(img);
        }
    }
    std::sort(infeasible.begin(), infeasible.end());
    infeasible.erase(std::unique(infeasible.begin(), infeasible.end()), infeasible.end());
    return PrimitiveDatabase(fg, fine.dynamics(), fine.cost_model(), fine.solver_options(), std::move(prims),
                             std::move(infeasible), false);
}

}  // namespace kinoprim
