// Core value types shared by every kinoprim module: errors, states,
// trajectories, angle helpers and round-trip-exact number formatting.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace kinoprim {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
    InvalidArgument,
    OutOfExtent,
    EmptyFreeSpace,
    StateBoundViolation,
    Infeasible,
    NotInDatabase,
    EmptyDatabase,
    SymmetryUnsupported,
    FormatVersionMismatch,
    ChecksumMismatch,
    TruncatedRecord,
    MalformedHeader,
    DimensionMismatch,
    StartNotFree,
    GoalUnreachableInGrid,
    GraphExplosion,
    DomainError,
    ConfigError,
    IoError,
};

[[nodiscard]] inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::OutOfExtent: return "OutOfExtent";
        case ErrorCode::EmptyFreeSpace: return "EmptyFreeSpace";
        case ErrorCode::StateBoundViolation: return "StateBoundViolation";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::NotInDatabase: return "NotInDatabase";
        case ErrorCode::EmptyDatabase: return "EmptyDatabase";
        case ErrorCode::SymmetryUnsupported: return "SymmetryUnsupported";
        case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::TruncatedRecord: return "TruncatedRecord";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::StartNotFree: return "StartNotFree";
        case ErrorCode::GoalUnreachableInGrid: return "GoalUnreachableInGrid";
        case ErrorCode::GraphExplosion: return "GraphExplosion";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// ── angles ──────────────────────────────────────────────────────────────────

/// Canonical representative in [0, 2π).
[[nodiscard]] inline double wrap_angle(double a) noexcept {
    double r = std::fmod(a, kTwoPi);
    if (r < 0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

/// Signed difference a - b mapped to (-π, π].
[[nodiscard]] inline double angle_diff(double a, double b) noexcept {
    double d = std::remainder(a - b, kTwoPi);
    if (d <= -std::numbers::pi) d += kTwoPi;
    return d;
}

// ── states ──────────────────────────────────────────────────────────────────

/// Which components of a state vector are positions and which are angles.
struct StateLayout {
    std::vector<std::size_t> position{0, 1};
    std::vector<std::size_t> angular{2};

    [[nodiscard]] bool is_angular(std::size_t i) const noexcept {
        for (auto a : angular)
            if (a == i) return true;
        return false;
    }
    [[nodiscard]] bool is_position(std::size_t i) const noexcept {
        for (auto p : position)
            if (p == i) return true;
        return false;
    }

    /// (x, y, theta, v): the planar layout used by the grid and database.
    static StateLayout planar() { return {}; }

    friend bool operator==(const StateLayout&, const StateLayout&) = default;
};

/// A point of the d-dimensional state space.
struct State {
    std::vector<double> values;

    State() = default;
    explicit State(std::vector<double> v) : values(std::move(v)) {}
    State(std::initializer_list<double> v) : values(v) {}

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    [[nodiscard]] std::span<const double> span() const noexcept { return values; }
    [[nodiscard]] std::span<double> span() noexcept { return values; }

    friend bool operator==(const State&, const State&) = default;
};

using Position = std::array<double, 2>;

[[nodiscard]] inline State translate_state(const State& q, std::span<const double> offset,
                                           const StateLayout& layout = StateLayout::planar()) {
    if (offset.size() != layout.position.size())
        throw Error(ErrorCode::InvalidArgument, "offset dimension does not match position layout");
    State out = q;
    for (std::size_t i = 0; i < layout.position.size(); ++i) out[layout.position[i]] += offset[i];
    return out;
}

[[nodiscard]] inline State translate_state(const State& q, const Position& offset) {
    return translate_state(q, std::span<const double>(offset));
}

// ── trajectories ────────────────────────────────────────────────────────────

/// Time-sampled (q(.), u(.), tau) with its cost. States are stored row-major;
/// controls are piecewise constant, one per sample interval.
struct Trajectory {
    std::size_t state_dim = 0;
    std::size_t control_dim = 0;
    std::vector<double> times;
    std::vector<double> states;
    std::vector<double> controls;
    double tau = 0.0;
    double cost = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool empty() const noexcept { return times.empty(); }

    [[nodiscard]] std::span<const double> state(std::size_t i) const {
        return {states.data() + i * state_dim, state_dim};
    }
    [[nodiscard]] std::span<double> state(std::size_t i) {
        return {states.data() + i * state_dim, state_dim};
    }
    [[nodiscard]] std::span<const double> control(std::size_t i) const {
        return {controls.data() + i * control_dim, control_dim};
    }
    [[nodiscard]] State state_at(std::size_t i) const {
        auto s = state(i);
        return State(std::vector<double>(s.begin(), s.end()));
    }
    [[nodiscard]] State front() const { return state_at(0); }
    [[nodiscard]] State back() const { return state_at(size() - 1); }

    /// Length consistency between the sample arrays.
    [[nodiscard]] bool consistent() const noexcept {
        if (times.empty()) return states.empty() && controls.empty();
        return states.size() == times.size() * state_dim &&
               controls.size() == (times.size() - 1) * control_dim;
    }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Rigid shift of every sampled position. Controls, times, tau and cost are untouched.
[[nodiscard]] inline Trajectory translate_trajectory(Trajectory z, std::span<const double> offset,
                                                     const StateLayout& layout = StateLayout::planar()) {
    if (offset.size() != layout.position.size())
        throw Error(ErrorCode::InvalidArgument, "offset dimension does not match position layout");
    for (std::size_t i = 0; i < z.size(); ++i) {
        auto s = z.state(i);
        for (std::size_t k = 0; k < layout.position.size(); ++k) s[layout.position[k]] += offset[k];
    }
    return z;
}

[[nodiscard]] inline Trajectory translate_trajectory(Trajectory z, const Position& offset) {
    return translate_trajectory(std::move(z), std::span<const double>(offset));
}

/// Joins trajectories end to start in time order. Each junction sample
/// appears once; the cost is left to the caller.
[[nodiscard]] inline Trajectory chain_trajectories(const std::vector<Trajectory>& parts) {
    Trajectory out;
    double t0 = 0.0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Trajectory& e = parts[k];
        out.state_dim = e.state_dim;
        out.control_dim = e.control_dim;
        for (std::size_t i = (k == 0 ? 0 : 1); i < e.size(); ++i) {
            out.times.push_back(t0 + e.times[i]);
            auto s = e.state(i);
            out.states.insert(out.states.end(), s.begin(), s.end());
        }
        out.controls.insert(out.controls.end(), e.controls.begin(), e.controls.end());
        t0 += e.tau;
    }
    out.tau = t0;
    return out;
}

// ── number formatting ───────────────────────────────────────────────────────

/// Shortest decimal text that parses back to the identical double.
[[nodiscard]] inline std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw Error(ErrorCode::InvalidArgument, "unformattable double");
    return std::string(buf.data(), ptr);
}

[[nodiscard]] inline bool parse_double(std::string_view s, double& out) {
    if (s == "inf" || s == "+inf") {
        out = kInf;
        return true;
    }
    if (s == "-inf") {
        out = -kInf;
        return true;
    }
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

template <typename Int>
[[nodiscard]] bool parse_int(std::string_view s, Int& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Splits on any of the delimiter characters, dropping empty tokens.
[[nodiscard]] inline std::vector<std::string_view> split(std::string_view s, std::string_view delims = " \t") {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && delims.find(s[i]) != std::string_view::npos) ++i;
        std::size_t j = i;
        while (j < s.size() && delims.find(s[j]) == std::string_view::npos) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace kinoprim
