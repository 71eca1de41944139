#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support.hpp"

using namespace kptest;

namespace {

GridSpec half_meter_grid() {
    GridSpec g;
    g.position_step = 0.5;
    g.position_extents = {Extent{-1, 1}, Extent{-1, 1}};
    g.orientations = {0.0, kPi / 2, kPi, 3 * kPi / 2};
    g.velocities = {0.0, 1.0};
    g.initial_headings = {0.0};
    return g;
}

PlanningGrid planning(const GridSpec& g, double lo = 0, double hi = 3) { return PlanningGrid(g, {{lo, hi}, {lo, hi}}); }

void expect_state_eq(const State& a, const State& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(a[i], b[i]) << "component " << i;
}

}  // namespace

TEST(GridSpec, RejectsInvalidSpecs) {
    auto g = half_meter_grid();
    EXPECT_NO_THROW(g.validate());

    auto bad = g;
    bad.position_step = 0.3;
    EXPECT_THROW(bad.validate(), Error);

    bad = g;
    bad.position_extents[0] = {0.5, 1.0};  // zero position must be a grid point
    EXPECT_THROW(bad.validate(), Error);

    bad = g;
    bad.velocities = {1.0, 0.0};
    EXPECT_THROW(bad.validate(), Error);

    bad = g;
    bad.orientations = {};
    EXPECT_THROW(bad.validate(), Error);

    bad = g;
    bad.initial_headings = {kPi / 4};
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Snap, GridPointMapsToItself) {
    const auto grid = planning(half_meter_grid());
    const auto gs = grid.snap(State{0.0, 0.0, 0.0, 0.0});
    EXPECT_EQ(gs.index, (GridIndex{0, 0, 0, 0}));
    expect_state_eq(gs.state, State{0.0, 0.0, 0.0, 0.0});
}

TEST(Snap, RoundsToNearestCell) {
    const auto grid = planning(half_meter_grid());
    const auto gs = grid.snap(State{0.24, 0.26, 0.0, 0.0});
    expect_state_eq(gs.state, State{0.0, 0.5, 0.0, 0.0});
}

TEST(Snap, TiesGoToSmallerIndex) {
    const auto grid = planning(half_meter_grid());
    EXPECT_EQ(grid.snap(State{0.25, 0.0, 0.0, 0.0}).index.ix, 0);
    EXPECT_EQ(grid.snap(State{0.75, 0.0, 0.0, 0.0}).index.ix, 1);
    EXPECT_EQ(grid.snap(State{0.0, 0.0, 0.0, 0.5}).index.iv, 0);
}

TEST(Snap, AnglesWrapAroundTheCircle) {
    const auto grid = planning(half_meter_grid());
    EXPECT_EQ(grid.snap(State{0, 0, 2 * kPi - 1e-3, 0}).index.itheta, 0);
    EXPECT_EQ(grid.snap(State{0, 0, -kPi / 2, 0}).index.itheta, 3);
    EXPECT_EQ(grid.snap(State{0, 0, 5 * kPi, 0}).index.itheta, 2);
}

TEST(Snap, OutsideRegionIsOutOfExtent) {
    const auto grid = planning(half_meter_grid());
    try {
        (void)grid.snap(State{3.5, 0.0, 0.0, 0.0});
        FAIL() << "expected OutOfExtent";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfExtent);
    }
    EXPECT_THROW((void)grid.snap(State{0.0, 0.0, 0.0, 2.0}), Error);
}

TEST(Snap, ResolveRoundTripsEveryGridState) {
    const auto grid = planning(half_meter_grid(), -1.5, 2.0);
    for (std::size_t f = 0; f < grid.size(); ++f) {
        const GridIndex g = grid.unflat(f);
        ASSERT_EQ(grid.flat(g), f);
        const GridState gs = grid.grid_state(g);
        const GridState back = grid.snap(gs.state);
        ASSERT_EQ(back, gs);
        ASSERT_EQ(grid.index_of(gs.state), g);
    }
}

TEST(Translate, ShiftsOnlyThePosition) {
    expect_state_eq(translate_state(State{1, 2, kPi / 2, 3}, Position{-1, -2}), State{0, 0, kPi / 2, 3});
    const State q{0, 0, 0, 0};
    EXPECT_EQ(translate_state(q, Position{0, 0}), q);
}

TEST(Translate, IsAGroupAction) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int i = 0; i < 200; ++i) {
        const State q{u(rng), u(rng), std::abs(u(rng)) / 2, std::abs(u(rng)) / 3};
        const Position a{u(rng), u(rng)}, b{u(rng), u(rng)};
        const State ab = translate_state(translate_state(q, a), b);
        const State sum = translate_state(q, Position{a[0] + b[0], a[1] + b[1]});
        EXPECT_NEAR(ab[0], sum[0], 1e-12);
        EXPECT_NEAR(ab[1], sum[1], 1e-12);
        EXPECT_EQ(ab[2], q[2]);
        EXPECT_EQ(ab[3], q[3]);
        const State back = translate_state(translate_state(q, a), Position{-a[0], -a[1]});
        EXPECT_NEAR(back[0], q[0], 1e-12);
        EXPECT_NEAR(back[1], q[1], 1e-12);
    }
}

TEST(Translate, TrajectoryIsRigidlyShifted) {
    const auto dyn = make_unicycle();
    const double u[2] = {0.0, 0.0};
    Trajectory z = integrate(State{0, 0, 0, 1}, ControlSchedule::constant(u), 1.0, dyn, 0.01);
    z.cost = 1.0;
    const Trajectory s = translate_trajectory(z, Position{3, 4});
    EXPECT_NEAR(s.state(0)[0], 3.0, 1e-12);
    EXPECT_NEAR(s.state(0)[1], 4.0, 1e-12);
    EXPECT_NEAR(s.state(s.size() - 1)[0], 4.0, 1e-9);
    EXPECT_NEAR(s.state(s.size() - 1)[1], 4.0, 1e-12);
    EXPECT_EQ(s.cost, z.cost);
    EXPECT_EQ(s.controls, z.controls);
    EXPECT_EQ(s.times, z.times);
    EXPECT_EQ(translate_trajectory(z, Position{0, 0}), z);
}

TEST(BoundingBox, ShiftedExtents) {
    GridSpec g = coarse_grid();
    g.position_extents = {Extent{-2, 2}, Extent{-2, 2}};
    const auto box = bounding_box(Position{5, 5}, g);
    double xmin = 1e9, xmax = -1e9;
    std::set<std::pair<double, double>> positions;
    for (const auto& s : box) {
        xmin = std::min(xmin, s.state[0]);
        xmax = std::max(xmax, s.state[0]);
        positions.insert({s.state[0], s.state[1]});
    }
    EXPECT_EQ(xmin, 3.0);
    EXPECT_EQ(xmax, 7.0);
    EXPECT_EQ(positions.size(), 25u);
}

TEST(BoundingBox, CountMatchesProductOfValueSets) {
    const GridSpec g = half_meter_grid();
    // Exhaustive enumeration of every (position, theta, v) combination inside the extents.
    std::size_t count = 0;
    for (double x = -1.0; x <= 1.0 + 1e-12; x += 0.5)
        for (double y = -1.0; y <= 1.0 + 1e-12; y += 0.5)
            count += g.orientations.size() * g.velocities.size();
    EXPECT_EQ(bounding_box(Position{0, 0}, g).size(), count);
}

TEST(BoundingBox, TranslationInvariant) {
    const GridSpec g = half_meter_grid();
    const auto at_origin = bounding_box(Position{0, 0}, g);
    const auto shifted = bounding_box(Position{2.5, -1.5}, g);
    ASSERT_EQ(at_origin.size(), shifted.size());
    for (std::size_t i = 0; i < shifted.size(); ++i) {
        EXPECT_EQ(shifted[i].index, at_origin[i].index);
        expect_state_eq(translate_state(shifted[i].state, Position{-2.5, 1.5}), at_origin[i].state);
    }
}

TEST(FreeGrid, CornerConventionOnTwoByTwoMap) {
    GridSpec g = coarse_grid();
    g.orientations = {0.0};
    g.initial_headings = {0.0};
    const OccupancyGrid map(2, 2, 1.0);
    EXPECT_EQ(enumerate_free_grid(g, PlanningRegion::covering(map), map).size(), 9u);
}

TEST(FreeGrid, BlockedMapIsEmptyFreeSpace) {
    OccupancyGrid map(3, 3, 1.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) map.set(i, j, true);
    try {
        (void)enumerate_free_grid(coarse_grid(), PlanningRegion::covering(map), map);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyFreeSpace);
    }
}

TEST(FreeGrid, OneBlockedCellRemovesOnePositionWorth) {
    GridSpec g = coarse_grid();
    g.velocities = {0.0, 1.0};
    OccupancyGrid map(5, 5, 1.0, -0.5, -0.5);
    const PlanningRegion region{{0, 4}, {0, 4}};
    const auto before = enumerate_free_grid(g, region, map).size();
    map.set(2, 3, true);
    const auto after = enumerate_free_grid(g, region, map).size();
    EXPECT_EQ(before - after, g.orientations.size() * g.velocities.size());
}

TEST(FreeGrid, SortedUniqueStableAndConsistentWithStateFree) {
    const auto map = fixture_map("small_slalom");
    const PlanningGrid grid(coarse_grid(0.5), fixture_region());
    const auto a = enumerate_free_grid(grid, map);
    const auto b = enumerate_free_grid(grid, map);
    EXPECT_EQ(a, b);
    for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(grid.flat(a[i - 1].index), grid.flat(a[i].index));
    std::set<std::size_t> listed;
    for (const auto& s : a) listed.insert(grid.flat(s.index));
    for (std::size_t f = 0; f < grid.size(); ++f)
        EXPECT_EQ(listed.count(f) == 1, state_free(grid.resolve(grid.unflat(f)), map));
}

TEST(Angles, CanonicalRange) {
    EXPECT_EQ(wrap_angle(0.0), 0.0);
    EXPECT_NEAR(wrap_angle(-kPi / 2), 3 * kPi / 2, 1e-15);
    EXPECT_LT(wrap_angle(2 * kPi), 2 * kPi);
    EXPECT_GE(wrap_angle(-1e-18), 0.0);
    EXPECT_NEAR(angle_diff(0.1, 2 * kPi - 0.1), 0.2, 1e-12);
}
