// Occupancy-grid world model: raster loading/saving, point freeness and
// edge collision checking for a point robot.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kinoprim/core.hpp"

namespace kinoprim {

/// Binary occupancy raster. Cell (ix, iy) covers
/// [origin_x + ix*res, origin_x + (ix+1)*res) x [origin_y + iy*res, ...);
/// iy = 0 is the bottom (min-y) row.
struct OccupancyGrid {
    int width = 0;
    int height = 0;
    double resolution = 1.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::vector<std::uint8_t> cells;  // 1 = occupied, row-major from the bottom row

    OccupancyGrid() = default;
    OccupancyGrid(int w, int h, double res, double ox = 0.0, double oy = 0.0)
        : width(w), height(h), resolution(res), origin_x(ox), origin_y(oy),
          cells(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {
        if (w <= 0 || h <= 0 || !(res > 0))
            throw Error(ErrorCode::InvalidArgument, "map dimensions and resolution must be positive");
    }

    [[nodiscard]] bool in_bounds(int ix, int iy) const noexcept {
        return ix >= 0 && iy >= 0 && ix < width && iy < height;
    }
    [[nodiscard]] bool occupied(int ix, int iy) const {
        return cells[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(ix)] != 0;
    }
    void set(int ix, int iy, bool occ) {
        cells[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
              static_cast<std::size_t>(ix)] = occ ? 1 : 0;
    }
    [[nodiscard]] std::size_t occupied_count() const {
        return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
    }
    [[nodiscard]] double x_max() const noexcept { return origin_x + width * resolution; }
    [[nodiscard]] double y_max() const noexcept { return origin_y + height * resolution; }

    /// True iff (x, y) floors into a free cell inside the raster. The raster is
    /// closed on its upper edges: x == x_max() belongs to the last column.
    [[nodiscard]] bool position_free(double x, double y) const noexcept {
        double fx = std::floor((x - origin_x) / resolution);
        double fy = std::floor((y - origin_y) / resolution);
        if (fx == width && x <= x_max()) fx = width - 1;
        if (fy == height && y <= y_max()) fy = height - 1;
        if (!(fx >= 0 && fy >= 0 && fx < width && fy < height)) return false;
        return !occupied(static_cast<int>(fx), static_cast<int>(fy));
    }

    friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

[[nodiscard]] inline bool state_free(const State& q, const OccupancyGrid& map) {
    return map.position_free(q[0], q[1]);
}

/// Checks the stored samples of `edge` (shifted by `offset`) plus linearly
/// interpolated positions so that consecutive checks are at most `spacing` apart.
/// spacing <= 0 selects resolution / 2.
[[nodiscard]] inline bool collision_free(const Trajectory& edge, const OccupancyGrid& map,
                                         Position offset = {0.0, 0.0}, double spacing = 0.0) {
    if (edge.empty()) return true;
    if (spacing <= 0) spacing = 0.5 * map.resolution;
    auto pos = [&](std::size_t i) {
        auto s = edge.state(i);
        return Position{s[0] + offset[0], s[1] + offset[1]};
    };
    Position prev = pos(0);
    if (!map.position_free(prev[0], prev[1])) return false;
    for (std::size_t i = 1; i < edge.size(); ++i) {
        const Position cur = pos(i);
        const double dx = cur[0] - prev[0];
        const double dy = cur[1] - prev[1];
        const double dist = std::hypot(dx, dy);
        const auto nsub = static_cast<int>(std::ceil(dist / spacing));
        for (int j = 1; j < nsub; ++j) {
            const double t = static_cast<double>(j) / nsub;
            if (!map.position_free(prev[0] + t * dx, prev[1] + t * dy)) return false;
        }
        if (!map.position_free(cur[0], cur[1])) return false;
        prev = cur;
    }
    return true;
}

/// Marks every cell whose center lies within `radius_cells` of an occupied
/// cell center as occupied.
[[nodiscard]] inline OccupancyGrid inflate(const OccupancyGrid& map, double radius_cells) {
    if (radius_cells <= 0) return map;
    OccupancyGrid out = map;
    const int r = static_cast<int>(std::floor(radius_cells));
    const double r2 = radius_cells * radius_cells;
    for (int iy = 0; iy < map.height; ++iy)
        for (int ix = 0; ix < map.width; ++ix) {
            if (!map.occupied(ix, iy)) continue;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (dx * dx + dy * dy <= r2 && map.in_bounds(ix + dx, iy + dy)) out.set(ix + dx, iy + dy, true);
        }
    return out;
}

// ── file formats ────────────────────────────────────────────────────────────

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << data;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

struct PgmImage {
    int width = 0, height = 0, maxval = 0;
    std::vector<int> pixels;  // top row first
};

inline PgmImage parse_pgm(const std::string& data) {
    PgmImage img;
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        for (;;) {
            while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
            if (pos < data.size() && data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        return data.substr(start, pos - start);
    };
    const std::string magic = next_token();
    if (magic != "P5" && magic != "P2") throw Error(ErrorCode::MalformedHeader, "not a PGM raster");
    if (!parse_int(next_token(), img.width) || !parse_int(next_token(), img.height) ||
        !parse_int(next_token(), img.maxval) || img.width <= 0 || img.height <= 0 || img.maxval <= 0 ||
        img.maxval > 65535)
        throw Error(ErrorCode::MalformedHeader, "bad PGM header");
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    img.pixels.reserve(n);
    if (magic == "P5") {
        ++pos;  // single whitespace after maxval
        const std::size_t bytes = img.maxval < 256 ? 1 : 2;
        if (data.size() - std::min(pos, data.size()) != n * bytes)
            throw Error(ErrorCode::DimensionMismatch, "PGM payload size does not match header");
        for (std::size_t i = 0; i < n; ++i) {
            int v = static_cast<unsigned char>(data[pos + i * bytes]);
            if (bytes == 2) v = (v << 8) | static_cast<unsigned char>(data[pos + i * bytes + 1]);
            img.pixels.push_back(v);
        }
    } else {
        for (;;) {
            std::string tok = next_token();
            if (tok.empty()) break;
            int v = 0;
            if (!parse_int(tok, v)) throw Error(ErrorCode::MalformedHeader, "bad PGM pixel value");
            img.pixels.push_back(v);
        }
        if (img.pixels.size() != n) throw Error(ErrorCode::DimensionMismatch, "PGM pixel count does not match header");
    }
    return img;
}

}  // namespace detail

/// Parses the ASCII raster: `W H resolution origin_x origin_y`, then H rows of
/// W characters, top row first. '0' is free, '1' occupied, anything else unknown
/// (treated as occupied).
[[nodiscard]] inline OccupancyGrid parse_ascii_map(std::string_view text) {
    auto rows = detail::lines(text);
    if (rows.empty()) throw Error(ErrorCode::MalformedHeader, "empty map file");
    auto head = split(rows[0]);
    int w = 0, h = 0;
    double res = 0, ox = 0, oy = 0;
    if (head.size() != 5 || !parse_int(head[0], w) || !parse_int(head[1], h) || !parse_double(head[2], res) ||
        !parse_double(head[3], ox) || !parse_double(head[4], oy) || w <= 0 || h <= 0 || !(res > 0))
        throw Error(ErrorCode::MalformedHeader, "expected `W H resolution origin_x origin_y`");
    std::vector<char> chars;
    for (std::size_t r = 1; r < rows.size(); ++r)
        for (char c : rows[r])
            if (!std::isspace(static_cast<unsigned char>(c))) chars.push_back(c);
    const std::size_t expected = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (chars.size() != expected)
        throw Error(ErrorCode::DimensionMismatch, "header declares " + std::to_string(expected) + " cells, found " +
                                                      std::to_string(chars.size()));
    OccupancyGrid map(w, h, res, ox, oy);
    for (int row = 0; row < h; ++row)
        for (int col = 0; col < w; ++col)
            map.set(col, h - 1 - row, chars[static_cast<std::size_t>(row) * w + col] != '0');
    return map;
}

[[nodiscard]] inline std::string serialize_map(const OccupancyGrid& map) {
    std::string out = std::to_string(map.width) + ' ' + std::to_string(map.height) + ' ' +
                      format_double(map.resolution) + ' ' + format_double(map.origin_x) + ' ' +
                      format_double(map.origin_y) + '\n';
    for (int row = 0; row < map.height; ++row) {
        for (int col = 0; col < map.width; ++col) out += map.occupied(col, map.height - 1 - row) ? '1' : '0';
        out += '\n';
    }
    return out;
}

inline void save_map(const OccupancyGrid& map, const std::filesystem::path& path) {
    detail::write_file(path, serialize_map(map));
}

/// Loads either the ASCII raster or a P5/P2 PGM with a `<name>.meta` sidecar
/// (`resolution`, `origin_x`, `origin_y`, `occupied_threshold`, optional
/// `free_threshold`). PGM occupancy is (maxval - p) / maxval; a cell is occupied
/// above `occupied_threshold`, and values at or above `free_threshold` (when
/// given) are unknown and treated as occupied.
[[nodiscard]] inline OccupancyGrid load_map(const std::filesystem::path& path) {
    const std::string data = detail::read_file(path);
    if (data.rfind("P5", 0) != 0 && data.rfind("P2", 0) != 0) return parse_ascii_map(data);

    auto img = detail::parse_pgm(data);
    std::filesystem::path meta_path = path;
    meta_path += ".meta";
    if (!std::filesystem::exists(meta_path)) meta_path = std::filesystem::path(path).replace_extension(".meta");
    if (!std::filesystem::exists(meta_path))
        throw Error(ErrorCode::MalformedHeader, "PGM map requires a .meta sidecar: " + meta_path.string());
    double res = 0, ox = 0, oy = 0, occ_thresh = 0.65, free_thresh = -1;
    bool has_res = false, has_ox = false, has_oy = false;
    const std::string meta = detail::read_file(meta_path);
    for (auto line : detail::lines(meta)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto tok = split(line, " \t:=");
        double v = 0;
        if (tok.size() != 2 || !parse_double(tok[1], v))
            throw Error(ErrorCode::MalformedHeader, "bad meta line: " + std::string(line));
        if (tok[0] == "resolution") res = v, has_res = true;
        else if (tok[0] == "origin_x") ox = v, has_ox = true;
        else if (tok[0] == "origin_y") oy = v, has_oy = true;
        else if (tok[0] == "occupied_threshold") occ_thresh = v;
        else if (tok[0] == "free_threshold") free_thresh = v;
        else throw Error(ErrorCode::MalformedHeader, "unknown meta key: " + std::string(tok[0]));
    }
    if (!has_res || !has_ox || !has_oy || !(res > 0))
        throw Error(ErrorCode::MalformedHeader, "meta sidecar needs resolution, origin_x, origin_y");
    OccupancyGrid map(img.width, img.height, res, ox, oy);
    for (int row = 0; row < img.height; ++row)
        for (int col = 0; col < img.width; ++col) {
            const double p = img.pixels[static_cast<std::size_t>(row) * img.width + col];
            const double occ = (img.maxval - p) / img.maxval;
            const bool free = occ <= occ_thresh && (free_thresh < 0 || occ < free_thresh);
            map.set(col, img.height - 1 - row, !free);
        }
    return map;
}

}  // namespace kinoprim
