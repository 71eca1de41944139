#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "support.hpp"

using namespace kptest;

namespace {

Trajectory line(Position a, Position b, std::size_t samples = 51) {
    Trajectory z;
    z.state_dim = 4;
    z.control_dim = 2;
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(samples - 1);
        z.times.push_back(t);
        z.states.insert(z.states.end(), {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0, 1.0});
        if (i + 1 < samples) z.controls.insert(z.controls.end(), {0.0, 0.0});
    }
    z.tau = 1.0;
    return z;
}

OccupancyGrid random_map(std::mt19937_64& rng, double density) {
    OccupancyGrid m(12, 12, 0.5);
    std::bernoulli_distribution occ(density);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) m.set(x, y, occ(rng));
    return m;
}

}  // namespace

TEST(LoadMap, AllFreeAscii) {
    const auto m = parse_ascii_map("3 3 1 0 0\n000\n000\n000\n");
    EXPECT_EQ(m.occupied_count(), 0u);
    EXPECT_EQ(m.cells.size(), 9u);
}

TEST(LoadMap, CellCountMismatch) {
    EXPECT_EQ(error_code([] { (void)parse_ascii_map("4 4 1 0 0\n0000\n0000\n0000\n000\n"); }),
              ErrorCode::DimensionMismatch);
}

TEST(LoadMap, MalformedHeader) {
    EXPECT_EQ(error_code([] { (void)parse_ascii_map("4 4 1\n0000\n"); }), ErrorCode::MalformedHeader);
    EXPECT_EQ(error_code([] { (void)parse_ascii_map("4 4 -1 0 0\n0000\n0000\n0000\n0000\n"); }),
              ErrorCode::MalformedHeader);
}

TEST(LoadMap, OccupiedCellAtDeclaredCoordinates) {
    // Row 0 of the text is the top row, so the '1' is column 2 of the bottom row.
    const auto m = parse_ascii_map("4 3 0.5 1 2\n0000\n0000\n0010\n");
    EXPECT_EQ(m.occupied_count(), 1u);
    EXPECT_TRUE(m.occupied(2, 0));
    EXPECT_FALSE(m.position_free(1 + 2 * 0.5 + 0.25, 2 + 0.25));
    EXPECT_TRUE(m.position_free(1 + 0.25, 2 + 0.25));
}

TEST(LoadMap, UnknownCellsAreOccupied) {
    const auto m = parse_ascii_map("2 1 1 0 0\n0?\n");
    EXPECT_TRUE(m.occupied(1, 0));
}

TEST(LoadMap, PgmWithMetaSidecar) {
    const auto dir = scratch_dir("pgm");
    std::ofstream(dir / "room.pgm") << "P2\n# comment\n3 2\n255\n255 0 255\n255 255 200\n";
    std::ofstream(dir / "room.pgm.meta") << "resolution: 0.5\norigin_x: -1\norigin_y: 0\noccupied_threshold: 0.65\n"
                                            "free_threshold: 0.1\n";
    const auto m = load_map(dir / "room.pgm");
    EXPECT_EQ(m.width, 3);
    EXPECT_EQ(m.height, 2);
    EXPECT_EQ(m.resolution, 0.5);
    EXPECT_TRUE(m.occupied(1, 1));   // black pixel, top row
    EXPECT_TRUE(m.occupied(2, 0));   // grey pixel between the thresholds is unknown
    EXPECT_FALSE(m.occupied(0, 0));
    EXPECT_EQ(m.occupied_count(), 2u);

    std::filesystem::remove(dir / "room.pgm.meta");
    EXPECT_EQ(error_code([&] { (void)load_map(dir / "room.pgm"); }), ErrorCode::MalformedHeader);
}

TEST(LoadMap, AsciiRoundTripIsByteIdentical) {
    const auto dir = scratch_dir("ascii");
    for (const char* name : {"small_open", "small_wall", "small_slalom", "indoor_12x12"}) {
        const auto path = kDataDir / "maps" / (std::string(name) + ".txt");
        const auto m = load_map(path);
        save_map(m, dir / "copy.txt");
        EXPECT_EQ(kinoprim::detail::read_file(dir / "copy.txt"), kinoprim::detail::read_file(path)) << name;
        EXPECT_EQ(load_map(dir / "copy.txt"), m);
    }
}

TEST(StateFree, Conventions) {
    OccupancyGrid m(4, 4, 1.0);
    m.set(2, 1, true);
    EXPECT_TRUE(state_free(State{0.5, 0.5, 0, 0}, m));
    EXPECT_FALSE(state_free(State{2.5, 1.5, 0, 0}, m));
    EXPECT_FALSE(state_free(State{-0.1, 0.5, 0, 0}, m));
    EXPECT_FALSE(state_free(State{0.5, 4.01, 0, 0}, m));
    // x = 2 lies on the shared edge of columns 1 and 2 and floors into column 2.
    EXPECT_FALSE(state_free(State{2.0, 1.5, 0, 0}, m));
    EXPECT_TRUE(state_free(State{3.0, 1.5, 0, 0}, m));
    // The upper edges belong to the raster.
    EXPECT_TRUE(state_free(State{4.0, 4.0, 0, 0}, m));
}

TEST(CollisionFree, EmptyMapAcceptsAnyEdge) {
    const OccupancyGrid m(10, 10, 0.5);
    EXPECT_TRUE(collision_free(line({0.1, 0.1}, {4.9, 4.9}), m));
    const auto z = integrate(State{1, 1, 0, 2}, ControlSchedule(2, {1.0, 0.0}), 1.5, make_unicycle(), 0.01);
    EXPECT_TRUE(collision_free(z, m));
}

TEST(CollisionFree, MidpointInsideObstacleIsDetected) {
    OccupancyGrid m(10, 10, 0.5);
    m.set(4, 4, true);
    EXPECT_FALSE(collision_free(line({0.25, 2.25}, {4.75, 2.25}, 3), m));
    EXPECT_TRUE(collision_free(line({0.25, 1.25}, {4.75, 1.25}, 3), m));
}

TEST(CollisionFree, ThinWallIsNotTunnelled) {
    // A primitive at the top speed crossing a wall one 5 cm cell thick.
    const double res = 0.05;
    OccupancyGrid m(80, 20, res);
    for (int y = 0; y < 20; ++y) m.set(40, y, true);
    const auto dyn = make_unicycle();
    const auto dense = integrate(State{0.23, 0.5, 0, 4}, ControlSchedule(2, {0.0, 0.0}), 0.85, dyn, 0.85 / 200);
    const auto stored = resample(dense, 51);
    EXPECT_GT(stored.back()[0], 2.05);
    EXPECT_FALSE(collision_free(stored, m));
    // Stored samples alone straddle the wall without touching it.
    bool any_sample_hits = false;
    for (std::size_t i = 0; i < stored.size(); ++i)
        any_sample_hits |= !m.position_free(stored.state(i)[0], stored.state(i)[1]);
    EXPECT_FALSE(any_sample_hits);
}

TEST(CollisionFree, OffsetShiftsTheEdge) {
    OccupancyGrid m(10, 10, 0.5);
    m.set(8, 2, true);
    const auto z = line({0.25, 1.25}, {1.25, 1.25});
    EXPECT_TRUE(collision_free(z, m));
    EXPECT_FALSE(collision_free(z, m, Position{3.0, 0.0}));
}

TEST(CollisionFree, AddingObstaclesIsMonotone) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> p(0.1, 5.9);
    for (int trial = 0; trial < 300; ++trial) {
        auto m = random_map(rng, 0.1);
        const auto z = line({p(rng), p(rng)}, {p(rng), p(rng)});
        const bool before = collision_free(z, m);
        m.set(static_cast<int>(p(rng) / 0.5), static_cast<int>(p(rng) / 0.5), true);
        if (!before) {
            EXPECT_FALSE(collision_free(z, m));
        }
    }
}

TEST(CollisionFree, FinerSpacingNeverClearsAnEdge) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> p(0.1, 5.9);
    for (int trial = 0; trial < 300; ++trial) {
        const auto m = random_map(rng, 0.15);
        const auto z = line({p(rng), p(rng)}, {p(rng), p(rng)}, 6);
        if (!collision_free(z, m, {0, 0}, 0.25)) {
            EXPECT_FALSE(collision_free(z, m, {0, 0}, 0.125));
        }
    }
}

TEST(Inflate, GrowsByADisc) {
    OccupancyGrid m(9, 9, 1.0);
    m.set(4, 4, true);
    const auto g = inflate(m, 1.5);
    EXPECT_EQ(g.occupied_count(), 9u);  // centre plus the 8 neighbours within 1.5 cells
    EXPECT_TRUE(g.occupied(5, 5));
    EXPECT_FALSE(g.occupied(6, 4));
    EXPECT_EQ(inflate(m, 0).occupied_count(), 1u);
}
