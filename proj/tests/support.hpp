// Shared fixtures for the test binaries.

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <numbers>
#include <string>

#include "kinoprim/kinoprim.hpp"

namespace kptest {

using namespace kinoprim;

inline const std::filesystem::path kDataDir = KINOPRIM_DATA_DIR;
inline const std::filesystem::path kFixtureDir = KINOPRIM_FIXTURE_DIR;
inline const std::filesystem::path kCli = KINOPRIM_CLI;

inline constexpr double kPi = std::numbers::pi;

/// 1 m grid, offsets in [-1, 1]^2, four headings, one speed.
inline GridSpec coarse_grid(double step = 1.0) {
    GridSpec g;
    g.position_step = step;
    g.position_extents = {Extent{-1, 1}, Extent{-1, 1}};
    g.orientations = {0.0, kPi / 2, kPi, 3 * kPi / 2};
    g.velocities = {1.0};
    g.initial_headings = g.orientations;
    return g;
}

inline std::filesystem::path coarse_db_path() { return kFixtureDir / "fixture_coarse.kpdb"; }
inline std::filesystem::path fine_db_path() { return kFixtureDir / "fixture_fine.kpdb"; }

inline const PrimitiveDatabase& coarse_db() {
    static const PrimitiveDatabase db = deserialize(coarse_db_path());
    return db;
}
inline const PrimitiveDatabase& fine_db() {
    static const PrimitiveDatabase db = deserialize(fine_db_path());
    return db;
}

inline OccupancyGrid fixture_map(const std::string& name) { return load_map(kDataDir / "maps" / (name + ".txt")); }

/// Region whose grid points sit at the cell centres of the small fixture maps.
inline PlanningRegion fixture_region() { return {{0, 6}, {0, 6}}; }

inline State fixture_start() { return State{0.0, 0.0, 0.0, 1.0}; }

inline GoalRegion fixture_goal(const std::string& map_name = "small_wall") {
    GoalRegion g;
    g.x = {5.5, 6.5};
    g.y = map_name == "small_slalom" ? Extent{-0.5, 0.5} : Extent{5.5, 6.5};
    return g;
}

/// Code of the library error f raises, or nullopt when it returns normally.
inline std::optional<ErrorCode> error_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("kinoprim_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace kptest
