// System models: the vector field, its bounds, and the instantaneous cost.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kinoprim/core.hpp"

namespace kinoprim {

struct Interval {
    double lo = -kInf;
    double hi = kInf;

    [[nodiscard]] bool contains(double x, double slack = 0.0) const noexcept {
        return x >= lo - slack && x <= hi + slack;
    }
    [[nodiscard]] double clamp(double x) const noexcept { return x < lo ? lo : (x > hi ? hi : x); }
    [[nodiscard]] bool bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Axis reflections acting on the plane. AcrossX maps y to -y, AcrossY maps x to -x.
enum class Reflection { AcrossX, AcrossY };

using NamedParameters = std::vector<std::pair<std::string, double>>;

/// dq/dt = f(q, u) with box bounds on state and control.
struct DynamicsModel {
    std::string name;
    std::size_t d = 0;
    std::size_t m = 0;
    std::function<void(const double* q, const double* u, double* dq)> f;
    std::vector<Interval> state_bounds;
    std::vector<Interval> control_bounds;
    StateLayout layout;
    NamedParameters parameters;

    /// Optional. Adjusts a piecewise-constant schedule (segments of length dt,
    /// starting from q0) so that the state bounds hold; called after the box clamp.
    std::function<void(std::span<const double> q0, std::span<double> controls, double dt)> project;

    /// Optional. In-place reflection of a state or control vector. Models that
    /// leave these empty do not support symmetry reduction.
    std::function<void(Reflection, std::span<double>)> reflect_state;
    std::function<void(Reflection, std::span<double>)> reflect_control;

    [[nodiscard]] bool supports_reflection() const noexcept {
        return static_cast<bool>(reflect_state) && static_cast<bool>(reflect_control);
    }

    [[nodiscard]] bool state_in_bounds(std::span<const double> q, double slack = 1e-9) const {
        for (std::size_t i = 0; i < d; ++i)
            if (!state_bounds[i].contains(q[i], slack)) return false;
        return true;
    }
    [[nodiscard]] bool control_in_bounds(std::span<const double> u, double slack = 1e-9) const {
        for (std::size_t i = 0; i < m; ++i)
            if (!control_bounds[i].contains(u[i], slack)) return false;
        return true;
    }

    void validate() const {
        if (d == 0 || m == 0 || !f) throw Error(ErrorCode::InvalidArgument, "dynamics model is incomplete");
        if (state_bounds.size() != d || control_bounds.size() != m)
            throw Error(ErrorCode::InvalidArgument, "bound dimensions do not match the model");
        for (const auto& b : control_bounds)
            if (!b.bounded() || b.lo > b.hi) throw Error(ErrorCode::InvalidArgument, "control bounds must be finite");
    }
};

/// J = ∫ g(q, u) dt.
struct CostModel {
    std::string name;
    std::function<double(const double* q, const double* u)> g;
    NamedParameters parameters;
};

struct UnicycleLimits {
    double v_min = 0.0;
    double v_max = 4.0;
    double a_max = 3.0;
    double w_max = 5.0;
};

/// (x, y, theta, v) with controls (w, a):
/// x' = v cos(theta), y' = v sin(theta), theta' = w, v' = a.
[[nodiscard]] inline DynamicsModel make_unicycle(const UnicycleLimits& lim = {}) {
    DynamicsModel dyn;
    dyn.name = "unicycle";
    dyn.d = 4;
    dyn.m = 2;
    dyn.f = [](const double* q, const double* u, double* dq) {
        dq[0] = q[3] * std::cos(q[2]);
        dq[1] = q[3] * std::sin(q[2]);
        dq[2] = u[0];
        dq[3] = u[1];
    };
    dyn.state_bounds = {{}, {}, {}, {lim.v_min, lim.v_max}};
    dyn.control_bounds = {{-lim.w_max, lim.w_max}, {-lim.a_max, lim.a_max}};
    dyn.layout = StateLayout::planar();
    dyn.parameters = {{"v_min", lim.v_min}, {"v_max", lim.v_max}, {"a_max", lim.a_max}, {"w_max", lim.w_max}};

    // v is piecewise linear in time, so clamping each segment's end velocity
    // keeps the whole profile inside [v_min, v_max].
    dyn.project = [lim](std::span<const double> q0, std::span<double> u, double dt) {
        double v = q0[3];
        for (std::size_t k = 0; k + 1 < u.size(); k += 2) {
            double a = u[k + 1];
            if (v + a * dt > lim.v_max) a = (lim.v_max - v) / dt;
            if (v + a * dt < lim.v_min) a = (lim.v_min - v) / dt;
            a = std::clamp(a, -lim.a_max, lim.a_max);
            u[k + 1] = a;
            v = std::clamp(v + a * dt, lim.v_min, lim.v_max);
        }
    };
    dyn.reflect_state = [](Reflection r, std::span<double> q) {
        if (r == Reflection::AcrossX) {
            q[1] = -q[1];
            q[2] = wrap_angle(-q[2]);
        } else {
            q[0] = -q[0];
            q[2] = wrap_angle(std::numbers::pi - q[2]);
        }
    };
    dyn.reflect_control = [](Reflection, std::span<double> u) { u[0] = -u[0]; };
    return dyn;
}

/// g = 1 + uᵀ R u with diagonal R.
[[nodiscard]] inline CostModel make_quadratic_effort_cost(std::vector<double> r_diag = {0.5, 0.5}) {
    CostModel c;
    c.name = "time_plus_effort";
    for (std::size_t i = 0; i < r_diag.size(); ++i) c.parameters.emplace_back("r" + std::to_string(i), r_diag[i]);
    c.g = [r = std::move(r_diag)](const double*, const double* u) {
        double s = 1.0;
        for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * u[i] * u[i];
        return s;
    };
    return c;
}

namespace detail {

inline double parameter(const NamedParameters& params, const std::string& key, double fallback) {
    for (const auto& [k, v] : params)
        if (k == key) return v;
    return fallback;
}

}  // namespace detail

/// Rebuilds a model from the name and parameters recorded with it.
[[nodiscard]] inline DynamicsModel make_dynamics(const std::string& name, const NamedParameters& params) {
    if (name == "unicycle") {
        UnicycleLimits lim;
        lim.v_min = detail::parameter(params, "v_min", lim.v_min);
        lim.v_max = detail::parameter(params, "v_max", lim.v_max);
        lim.a_max = detail::parameter(params, "a_max", lim.a_max);
        lim.w_max = detail::parameter(params, "w_max", lim.w_max);
        return make_unicycle(lim);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown dynamics model '" + name + "'");
}

[[nodiscard]] inline CostModel make_cost(const std::string& name, const NamedParameters& params) {
    if (name == "time_plus_effort") {
        std::vector<double> r;
        for (std::size_t i = 0;; ++i) {
            const double v = detail::parameter(params, "r" + std::to_string(i), kInf);
            if (!std::isfinite(v)) break;
            r.push_back(v);
        }
        if (r.empty()) r = {0.5, 0.5};
        return make_quadratic_effort_cost(std::move(r));
    }
    throw Error(ErrorCode::InvalidArgument, "unknown cost model '" + name + "'");
}

}  // namespace kinoprim
