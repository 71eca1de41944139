// Uniform gridding of the planar (x, y, theta, v) state space.
//
// Two grids are involved. GridSpec is the database grid: the box of position
// offsets around the origin for which primitives exist, plus the orientation
// and velocity value sets. PlanningGrid lays the same step and value sets over
// a planning region; its positions sit on cell corners, i.e. at integer
// multiples of the step from the region origin.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kinoprim/collision.hpp"
#include "kinoprim/core.hpp"

namespace kinoprim {

struct Extent {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double length() const noexcept { return hi - lo; }
    [[nodiscard]] bool contains(double x, double slack = 0.0) const noexcept {
        return x >= lo - slack && x <= hi + slack;
    }
    friend bool operator==(const Extent&, const Extent&) = default;
};

namespace detail {

inline constexpr double kIndexSlack = 1e-9;

/// Integer n such that x == n within a relative 1e-9, if any.
inline std::optional<int> exact_integer(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) > kIndexSlack * std::max(1.0, std::abs(x))) return std::nullopt;
    return static_cast<int>(r);
}

inline bool sorted_unique(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i - 1] < v[i])) return false;
    return true;
}

}  // namespace detail

/// Database grid: position box around the origin, step, and value sets.
struct GridSpec {
    double position_step = 1.0;
    std::array<Extent, 2> position_extents{Extent{-2, 2}, Extent{-2, 2}};
    std::vector<double> orientations;      // rad, canonical in [0, 2π)
    std::vector<double> velocities;        // m/s
    std::vector<double> initial_headings;  // subset of orientations

    /// Throws InvalidArgument describing the first violated invariant.
    void validate() const {
        auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, "GridSpec: " + m); };
        if (!(position_step > 0)) fail("position_step must be positive");
        for (const auto& e : position_extents) {
            if (!(e.lo <= 0.0 && e.hi >= 0.0)) fail("extents must contain the zero position");
            if (!detail::exact_integer(e.lo / position_step) || !detail::exact_integer(e.hi / position_step))
                fail("position_step must divide the extents and the zero position must be a grid point");
        }
        if (orientations.empty() || velocities.empty() || initial_headings.empty()) fail("value sets must be nonempty");
        if (!detail::sorted_unique(orientations) || !detail::sorted_unique(velocities) ||
            !detail::sorted_unique(initial_headings))
            fail("value sets must be sorted and duplicate-free");
        for (double th : orientations)
            if (th < 0 || th >= kTwoPi) fail("orientations must lie in [0, 2π)");
        for (double th : initial_headings)
            if (!orientation_index(th)) fail("every initial heading must be one of the orientations");
    }

    [[nodiscard]] int offset_lo(int axis) const {
        return static_cast<int>(std::round(position_extents[axis].lo / position_step));
    }
    [[nodiscard]] int offset_hi(int axis) const {
        return static_cast<int>(std::round(position_extents[axis].hi / position_step));
    }
    [[nodiscard]] int offset_count(int axis) const { return offset_hi(axis) - offset_lo(axis) + 1; }
    [[nodiscard]] std::size_t position_count() const {
        return static_cast<std::size_t>(offset_count(0)) * static_cast<std::size_t>(offset_count(1));
    }
    [[nodiscard]] int orientation_count() const { return static_cast<int>(orientations.size()); }
    [[nodiscard]] int velocity_count() const { return static_cast<int>(velocities.size()); }

    /// Index of the orientation equal to `theta` on the circle (within 1e-9 rad).
    [[nodiscard]] std::optional<int> orientation_index(double theta) const {
        const double w = wrap_angle(theta);
        for (std::size_t i = 0; i < orientations.size(); ++i)
            if (std::abs(angle_diff(orientations[i], w)) <= detail::kIndexSlack) return static_cast<int>(i);
        return std::nullopt;
    }
    [[nodiscard]] std::optional<int> velocity_index(double v) const {
        for (std::size_t i = 0; i < velocities.size(); ++i)
            if (std::abs(velocities[i] - v) <= detail::kIndexSlack * std::max(1.0, std::abs(v)))
                return static_cast<int>(i);
        return std::nullopt;
    }
    [[nodiscard]] std::vector<int> initial_heading_indices() const {
        std::vector<int> out;
        for (double th : initial_headings) out.push_back(*orientation_index(th));
        return out;
    }
    [[nodiscard]] bool is_initial_heading(int itheta) const {
        const double th = orientations[static_cast<std::size_t>(itheta)];
        return std::any_of(initial_headings.begin(), initial_headings.end(),
                           [&](double h) { return std::abs(angle_diff(h, th)) <= detail::kIndexSlack; });
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Integer address of one grid point: position indices plus value-set indices.
struct GridIndex {
    int ix = 0;
    int iy = 0;
    int itheta = 0;
    int iv = 0;

    friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

struct GridState {
    GridIndex index;
    State state;

    friend bool operator==(const GridState&, const GridState&) = default;
};

/// Position box of the planning area. Grid points are region.lo + i*step.
struct PlanningRegion {
    Extent x;
    Extent y;

    [[nodiscard]] static PlanningRegion covering(const OccupancyGrid& map) {
        return {{map.origin_x, map.x_max()}, {map.origin_y, map.y_max()}};
    }
    friend bool operator==(const PlanningRegion&, const PlanningRegion&) = default;
};

class PlanningGrid {
public:
    PlanningGrid() = default;
    PlanningGrid(GridSpec spec, PlanningRegion region) : spec_(std::move(spec)), region_(region) {
        spec_.validate();
        if (!(region_.x.hi >= region_.x.lo && region_.y.hi >= region_.y.lo))
            throw Error(ErrorCode::InvalidArgument, "planning region is empty");
        nx_ = static_cast<int>(std::floor(region_.x.length() / spec_.position_step + detail::kIndexSlack)) + 1;
        ny_ = static_cast<int>(std::floor(region_.y.length() / spec_.position_step + detail::kIndexSlack)) + 1;
    }

    [[nodiscard]] const GridSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const PlanningRegion& region() const noexcept { return region_; }
    [[nodiscard]] int nx() const noexcept { return nx_; }
    [[nodiscard]] int ny() const noexcept { return ny_; }
    [[nodiscard]] int ntheta() const noexcept { return spec_.orientation_count(); }
    [[nodiscard]] int nv() const noexcept { return spec_.velocity_count(); }
    [[nodiscard]] std::size_t size() const noexcept {
        return static_cast<std::size_t>(nx_) * ny_ * ntheta() * nv();
    }

    [[nodiscard]] bool contains(const GridIndex& g) const noexcept {
        return g.ix >= 0 && g.iy >= 0 && g.ix < nx_ && g.iy < ny_ && g.itheta >= 0 && g.itheta < ntheta() &&
               g.iv >= 0 && g.iv < nv();
    }

    /// Row-major flat index: y slowest, then x, orientation, velocity.
    [[nodiscard]] std::size_t flat(const GridIndex& g) const noexcept {
        return ((static_cast<std::size_t>(g.iy) * nx_ + g.ix) * ntheta() + g.itheta) * nv() + g.iv;
    }
    [[nodiscard]] GridIndex unflat(std::size_t f) const noexcept {
        GridIndex g;
        g.iv = static_cast<int>(f % nv());
        f /= nv();
        g.itheta = static_cast<int>(f % ntheta());
        f /= ntheta();
        g.ix = static_cast<int>(f % nx_);
        g.iy = static_cast<int>(f / nx_);
        return g;
    }

    [[nodiscard]] Position position(int ix, int iy) const noexcept {
        return {region_.x.lo + ix * spec_.position_step, region_.y.lo + iy * spec_.position_step};
    }
    [[nodiscard]] Position position(const GridIndex& g) const noexcept { return position(g.ix, g.iy); }

    [[nodiscard]] State resolve(const GridIndex& g) const {
        const auto p = position(g);
        return State{p[0], p[1], spec_.orientations[static_cast<std::size_t>(g.itheta)],
                     spec_.velocities[static_cast<std::size_t>(g.iv)]};
    }
    [[nodiscard]] GridState grid_state(const GridIndex& g) const { return {g, resolve(g)}; }

    /// Nearest grid point per dimension; ties go to the smaller index.
    [[nodiscard]] GridState snap(const State& q) const {
        if (q.size() != 4) throw Error(ErrorCode::InvalidArgument, "planar grid expects (x, y, theta, v)");
        if (!region_.x.contains(q[0]) || !region_.y.contains(q[1]))
            throw Error(ErrorCode::OutOfExtent, "position outside the planning region");
        GridIndex g;
        g.ix = std::clamp(snap_axis((q[0] - region_.x.lo) / spec_.position_step), 0, nx_ - 1);
        g.iy = std::clamp(snap_axis((q[1] - region_.y.lo) / spec_.position_step), 0, ny_ - 1);
        g.itheta = snap_angle(q[2]);
        g.iv = snap_velocity(q[3]);
        return grid_state(g);
    }

    /// Exact grid index of a state already on the grid, if it is one.
    [[nodiscard]] std::optional<GridIndex> index_of(const State& q) const {
        const auto ix = detail::exact_integer((q[0] - region_.x.lo) / spec_.position_step);
        const auto iy = detail::exact_integer((q[1] - region_.y.lo) / spec_.position_step);
        const auto it = spec_.orientation_index(q[2]);
        const auto iv = spec_.velocity_index(q[3]);
        if (!ix || !iy || !it || !iv) return std::nullopt;
        GridIndex g{*ix, *iy, *it, *iv};
        if (!contains(g)) return std::nullopt;
        return g;
    }

private:
    static int snap_axis(double r) { return static_cast<int>(std::ceil(r - 0.5)); }

    [[nodiscard]] int snap_angle(double theta) const {
        const double w = wrap_angle(theta);
        int best = 0;
        double best_d = kInf;
        for (int i = 0; i < ntheta(); ++i) {
            const double d = std::abs(angle_diff(spec_.orientations[static_cast<std::size_t>(i)], w));
            if (d < best_d) best = i, best_d = d;
        }
        return best;
    }

    [[nodiscard]] int snap_velocity(double v) const {
        const auto& vs = spec_.velocities;
        const double slack = detail::kIndexSlack * std::max(1.0, std::abs(v));
        if (v < vs.front() - slack || v > vs.back() + slack)
            throw Error(ErrorCode::OutOfExtent, "velocity outside the gridded range");
        int best = 0;
        double best_d = kInf;
        for (int i = 0; i < nv(); ++i) {
            const double d = std::abs(vs[static_cast<std::size_t>(i)] - v);
            if (d < best_d) best = i, best_d = d;
        }
        return best;
    }

    GridSpec spec_;
    PlanningRegion region_{};
    int nx_ = 0;
    int ny_ = 0;
};

[[nodiscard]] inline GridState snap_to_grid(const State& q, const PlanningGrid& grid) { return grid.snap(q); }

/// Grid states of the database box re-centred on `center`: every position
/// offset within the extents times every orientation and velocity. The index
/// position components hold the offsets (in steps) from the centre.
[[nodiscard]] inline std::vector<GridState> bounding_box(const Position& center, const GridSpec& spec) {
    std::vector<GridState> out;
    out.reserve(spec.position_count() * spec.orientations.size() * spec.velocities.size());
    for (int dy = spec.offset_lo(1); dy <= spec.offset_hi(1); ++dy)
        for (int dx = spec.offset_lo(0); dx <= spec.offset_hi(0); ++dx)
            for (int it = 0; it < spec.orientation_count(); ++it)
                for (int iv = 0; iv < spec.velocity_count(); ++iv)
                    out.push_back({GridIndex{dx, dy, it, iv},
                                   State{center[0] + dx * spec.position_step, center[1] + dy * spec.position_step,
                                         spec.orientations[static_cast<std::size_t>(it)],
                                         spec.velocities[static_cast<std::size_t>(iv)]}});
    return out;
}

/// All free grid states of the planning grid, in row-major order.
[[nodiscard]] inline std::vector<GridState> enumerate_free_grid(const PlanningGrid& grid, const OccupancyGrid& map) {
    std::vector<GridState> out;
    for (int iy = 0; iy < grid.ny(); ++iy)
        for (int ix = 0; ix < grid.nx(); ++ix) {
            const auto p = grid.position(ix, iy);
            if (!map.position_free(p[0], p[1])) continue;
            for (int it = 0; it < grid.ntheta(); ++it)
                for (int iv = 0; iv < grid.nv(); ++iv) out.push_back(grid.grid_state({ix, iy, it, iv}));
        }
    if (out.empty()) throw Error(ErrorCode::EmptyFreeSpace, "no free grid state in the planning region");
    return out;
}

[[nodiscard]] inline std::vector<GridState> enumerate_free_grid(const GridSpec& spec, const PlanningRegion& region,
                                                                const OccupancyGrid& map) {
    return enumerate_free_grid(PlanningGrid(spec, region), map);
}

}  // namespace kinoprim
