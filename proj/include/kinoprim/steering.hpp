// Steering: forward integration, cost quadrature, the constrained two-point
// boundary value solver and an exhaustive control-lattice oracle.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kinoprim/core.hpp"
#include "kinoprim/dynamics.hpp"

namespace kinoprim {

/// Piecewise-constant controls over equal-length segments.
struct ControlSchedule {
    std::size_t control_dim = 0;
    std::vector<double> values;  // segment-major

    ControlSchedule() = default;
    ControlSchedule(std::size_t m, std::vector<double> v) : control_dim(m), values(std::move(v)) {}
    static ControlSchedule constant(std::span<const double> u, std::size_t segments = 1) {
        ControlSchedule s;
        s.control_dim = u.size();
        for (std::size_t k = 0; k < segments; ++k) s.values.insert(s.values.end(), u.begin(), u.end());
        return s;
    }

    [[nodiscard]] std::size_t segments() const noexcept { return control_dim ? values.size() / control_dim : 0; }
    [[nodiscard]] std::span<const double> segment(std::size_t k) const {
        return {values.data() + k * control_dim, control_dim};
    }
};

namespace detail {

struct Rk4Scratch {
    std::vector<double> k1, k2, k3, k4, tmp;
    explicit Rk4Scratch(std::size_t d) : k1(d), k2(d), k3(d), k4(d), tmp(d) {}
};

inline void rk4_step(const DynamicsModel& dyn, double* q, const double* u, double h, Rk4Scratch& s) {
    const std::size_t d = dyn.d;
    dyn.f(q, u, s.k1.data());
    for (std::size_t i = 0; i < d; ++i) s.tmp[i] = q[i] + 0.5 * h * s.k1[i];
    dyn.f(s.tmp.data(), u, s.k2.data());
    for (std::size_t i = 0; i < d; ++i) s.tmp[i] = q[i] + 0.5 * h * s.k2[i];
    dyn.f(s.tmp.data(), u, s.k3.data());
    for (std::size_t i = 0; i < d; ++i) s.tmp[i] = q[i] + h * s.k3[i];
    dyn.f(s.tmp.data(), u, s.k4.data());
    for (std::size_t i = 0; i < d; ++i) q[i] += h / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
}

inline void canonicalize(std::span<double> q, const StateLayout& layout) {
    for (auto a : layout.angular) q[a] = wrap_angle(q[a]);
}

}  // namespace detail

/// Fixed-step RK4 under a piecewise-constant schedule. Samples sit at multiples
/// of h plus the endpoint tau; segment switches inside a step split that step.
/// Angular components of the samples are wrapped to [0, 2π).
[[nodiscard]] inline Trajectory integrate(const State& q0, const ControlSchedule& u, double tau,
                                          const DynamicsModel& dyn, double h) {
    if (!(tau > 0) || !(h > 0)) throw Error(ErrorCode::InvalidArgument, "integrate needs tau > 0 and h > 0");
    if (q0.size() != dyn.d || u.control_dim != dyn.m || u.segments() == 0)
        throw Error(ErrorCode::InvalidArgument, "integrate: dimension mismatch");
    const std::size_t d = dyn.d, m = dyn.m, K = u.segments();
    const double seg = tau / static_cast<double>(K);
    const auto steps = static_cast<std::size_t>(std::ceil(tau / h - 1e-9));
    auto time_at = [&](std::size_t i) { return i >= steps ? tau : static_cast<double>(i) * h; };
    auto segment_of = [&](double t) {
        return std::min<std::size_t>(K - 1, static_cast<std::size_t>(std::floor(t / seg + 1e-9)));
    };

    Trajectory z;
    z.state_dim = d;
    z.control_dim = m;
    z.tau = tau;
    z.times.reserve(steps + 1);
    z.states.reserve((steps + 1) * d);
    z.controls.reserve(steps * m);

    std::vector<double> q = q0.values;
    detail::Rk4Scratch scratch(d);
    auto push_sample = [&](double t) {
        if (!dyn.state_in_bounds(q)) throw Error(ErrorCode::StateBoundViolation, "state left its bounds");
        z.times.push_back(t);
        const std::size_t off = z.states.size();
        z.states.insert(z.states.end(), q.begin(), q.end());
        detail::canonicalize(std::span<double>(z.states.data() + off, d), dyn.layout);
    };
    push_sample(0.0);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t0 = time_at(i), t1 = time_at(i + 1);
        const std::size_t k0 = segment_of(t0);
        const auto uk = u.segment(k0);
        z.controls.insert(z.controls.end(), uk.begin(), uk.end());
        double t = t0;
        for (std::size_t k = k0; t < t1;) {
            const double boundary = k + 1 < K ? static_cast<double>(k + 1) * seg : tau;
            if (boundary <= t + 1e-12 * tau) {
                ++k;
                continue;
            }
            const double t_next = (boundary < t1 - 1e-12 * tau) ? boundary : t1;
            detail::rk4_step(dyn, q.data(), u.segment(k).data(), t_next - t, scratch);
            t = t_next;
            if (t < t1) ++k;
        }
        push_sample(t1);
    }
    return z;
}

/// Trapezoidal quadrature of g, holding each interval's control.
[[nodiscard]] inline double evaluate_cost(const Trajectory& z, const CostModel& cost) {
    double J = 0.0;
    for (std::size_t i = 0; i + 1 < z.size(); ++i) {
        const double* u = z.controls.data() + i * z.control_dim;
        const double ga = cost.g(z.states.data() + i * z.state_dim, u);
        const double gb = cost.g(z.states.data() + (i + 1) * z.state_dim, u);
        J += 0.5 * (ga + gb) * (z.times[i + 1] - z.times[i]);
    }
    return J;
}

struct BoundaryTolerance {
    double position = 0.01;
    double angle = 0.05;
    double other = 0.05;  // velocity and any remaining component

    [[nodiscard]] std::vector<double> per_component(std::size_t d, const StateLayout& layout) const {
        std::vector<double> t(d, other);
        for (auto p : layout.position) t[p] = position;
        for (auto a : layout.angular) t[a] = angle;
        return t;
    }
    friend bool operator==(const BoundaryTolerance&, const BoundaryTolerance&) = default;
};

/// Component-wise signed terminal error, angles on the circle.
[[nodiscard]] inline std::vector<double> boundary_error(std::span<const double> q, std::span<const double> target,
                                                        const StateLayout& layout) {
    std::vector<double> e(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        e[i] = layout.is_angular(i) ? angle_diff(q[i], target[i]) : q[i] - target[i];
    return e;
}

[[nodiscard]] inline bool within_tolerance(std::span<const double> err, std::span<const double> tol,
                                           double scale = 1.0) {
    for (std::size_t i = 0; i < err.size(); ++i)
        if (!(std::abs(err[i]) <= tol[i] * scale)) return false;
    return true;
}

struct SolverOptions {
    std::size_t segments = 25;
    double tau_min = 0.05;
    double tau_max = 10.0;
    BoundaryTolerance tol;
    std::size_t multistarts = 8;
    std::uint64_t seed = 0;
    std::size_t penalty_rounds = 4;
    double penalty_initial = 0.01;
    double penalty_growth = 10.0;
    std::size_t max_iterations = 40;        // final penalty round
    std::size_t max_iterations_inner = 15;  // earlier rounds
    std::size_t opt_substeps = 2;     // RK4 steps per segment while optimizing
    std::size_t integration_steps = 200;
    std::size_t stored_samples = 51;
    double speed_hint = 1.0;
    std::size_t screening_samples = 256;  // random schedules ranked to seed the random starts

    friend bool operator==(const SolverOptions&, const SolverOptions&) = default;

    void validate() const {
        auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, "SolverOptions: " + m); };
        if (segments == 0 || multistarts == 0 || penalty_rounds == 0 || opt_substeps == 0) fail("counts must be positive");
        if (!(tau_min > 0) || !(tau_max >= tau_min)) fail("need 0 < tau_min <= tau_max");
        if (stored_samples < 2 || integration_steps % (stored_samples - 1) != 0)
            fail("stored_samples - 1 must divide integration_steps");
        if ((stored_samples - 1) % segments != 0) fail("segments must divide stored_samples - 1");
        if (!(tol.position > 0 && tol.angle > 0 && tol.other > 0)) fail("tolerances must be positive");
    }
};

struct SolverDiagnostics {
    std::size_t iterations = 0;
    std::size_t converged_starts = 0;
    int best_start = -1;
    double constraint_violation = kInf;  // max |error| / tol of the returned solution
};

struct SteeringResult {
    bool feasible = false;
    Trajectory trajectory;
    SolverDiagnostics diagnostics;

    [[nodiscard]] double cost() const noexcept { return feasible ? trajectory.cost : kInf; }
    const Trajectory& require() const {
        if (!feasible) throw Error(ErrorCode::Infeasible, "no trajectory reaches the boundary state");
        return trajectory;
    }
};

/// Keeps every stride-th sample. Controls of the coarse interval are those of
/// its first fine interval, exact when segment switches align with the stride.
[[nodiscard]] inline Trajectory resample(const Trajectory& z, std::size_t samples) {
    if (z.size() < 2 || (z.size() - 1) % (samples - 1) != 0)
        throw Error(ErrorCode::InvalidArgument, "resample: sample count does not divide the trajectory");
    const std::size_t stride = (z.size() - 1) / (samples - 1);
    Trajectory out;
    out.state_dim = z.state_dim;
    out.control_dim = z.control_dim;
    out.tau = z.tau;
    out.cost = z.cost;
    for (std::size_t j = 0; j < samples; ++j) {
        const std::size_t i = j * stride;
        out.times.push_back(z.times[i]);
        auto s = z.state(i);
        out.states.insert(out.states.end(), s.begin(), s.end());
        if (j + 1 < samples) {
            auto c = z.control(i);
            out.controls.insert(out.controls.end(), c.begin(), c.end());
        }
    }
    return out;
}

namespace detail {

/// Direct transcription of one boundary value problem in the origin-shifted frame.
/// Decision vector: K piecewise-constant controls followed by tau. The terminal
/// mismatch and any state-bound excess at segment ends enter as quadratic penalties
/// normalized by the boundary tolerances.
class Transcription {
public:
    Transcription(const State& q0, const State& qf, const DynamicsModel& dyn, const CostModel& cost,
                  const SolverOptions& opts)
        : dyn_(dyn), cost_(cost), opts_(opts), q0_(q0.values), qf_(qf.values), K_(opts.segments), m_(dyn.m),
          d_(dyn.d), n_(opts.segments * dyn.m + 1), tol_(opts.tol.per_component(dyn.d, dyn.layout)),
          scratch_(dyn.d), bounds_(K_ + 1, std::vector<double>(dyn.d)) {
        for (std::size_t i = 0; i < d_; ++i)
            if (std::isfinite(dyn.state_bounds[i].lo) || std::isfinite(dyn.state_bounds[i].hi)) bounded_.push_back(i);
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    /// Box clamp of controls and tau.
    void clamp(std::vector<double>& z) const {
        z.back() = std::clamp(z.back(), opts_.tau_min, opts_.tau_max);
        for (std::size_t k = 0; k < K_; ++k)
            for (std::size_t j = 0; j < m_; ++j) z[k * m_ + j] = dyn_.control_bounds[j].clamp(z[k * m_ + j]);
    }

    /// Box clamp followed by the model's state-bound repair, if any.
    void repair(std::vector<double>& z) const {
        clamp(z);
        if (dyn_.project)
            dyn_.project(q0_, std::span<double>(z.data(), K_ * m_), z.back() / static_cast<double>(K_));
    }

    [[nodiscard]] bool at_lower(const std::vector<double>& z, std::size_t i) const {
        return i + 1 == n_ ? z[i] <= opts_.tau_min : z[i] <= dyn_.control_bounds[i % m_].lo;
    }
    [[nodiscard]] bool at_upper(const std::vector<double>& z, std::size_t i) const {
        return i + 1 == n_ ? z[i] >= opts_.tau_max : z[i] >= dyn_.control_bounds[i % m_].hi;
    }

    /// Penalized objective; refreshes the segment boundary states.
    double objective(const std::vector<double>& z, double mu, double* running = nullptr) {
        const double dt = z.back() / static_cast<double>(K_);
        bounds_[0] = q0_;
        double J = 0.0, pen = 0.0;
        for (std::size_t k = 0; k < K_; ++k) {
            bounds_[k + 1] = bounds_[k];
            segment_map(bounds_[k + 1].data(), &z[k * m_], dt);
            J += 0.5 * dt * (cost_.g(bounds_[k].data(), &z[k * m_]) + cost_.g(bounds_[k + 1].data(), &z[k * m_]));
            for (auto i : bounded_) {
                const double r = excess(bounds_[k + 1][i], i) / tol_[i];
                pen += r * r;
            }
        }
        const auto e = boundary_error(bounds_[K_], qf_, dyn_.layout);
        for (std::size_t i = 0; i < d_; ++i) pen += (e[i] / tol_[i]) * (e[i] / tol_[i]);
        if (running) *running = J;
        return J + mu * pen;
    }

    /// Gradient and Gauss-Newton Hessian of the penalized objective at z.
    void linearize(const std::vector<double>& z, double mu, Eigen::VectorXd& grad, Eigen::MatrixXd& H) {
        using Eigen::Index;
        const double tau = z.back();
        const double dt = tau / static_cast<double>(K_);
        double J = 0.0;
        objective(z, mu, &J);

        const auto d = static_cast<Index>(d_), n = static_cast<Index>(n_);
        grad = Eigen::VectorXd::Zero(n);
        H = Eigen::MatrixXd::Zero(n, n);
        auto add_residual = [&](double r, const Eigen::RowVectorXd& row) {
            grad += 2.0 * mu * r * row.transpose();
            H.noalias() += 2.0 * mu * row.transpose() * row;
        };

        // Forward sensitivities of the segment boundary states.
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, n), Ak(d, d), Bk(d, static_cast<Index>(m_));
        Eigen::VectorXd Ck(d);
        std::vector<double> base(d_), pert(d_), u(m_);
        for (std::size_t k = 0; k < K_; ++k) {
            const double* uk = &z[k * m_];
            base = bounds_[k + 1];
            for (std::size_t i = 0; i < d_; ++i) {
                const double eps = 1e-7 * std::max(1.0, std::abs(bounds_[k][i]));
                pert = bounds_[k];
                pert[i] += eps;
                segment_map(pert.data(), uk, dt);
                for (std::size_t r = 0; r < d_; ++r) Ak(static_cast<Index>(r), static_cast<Index>(i)) = (pert[r] - base[r]) / eps;
            }
            for (std::size_t j = 0; j < m_; ++j) {
                const double eps = 1e-7 * std::max(1.0, std::abs(uk[j]));
                std::copy(uk, uk + m_, u.begin());
                u[j] += eps;
                pert = bounds_[k];
                segment_map(pert.data(), u.data(), dt);
                for (std::size_t r = 0; r < d_; ++r) Bk(static_cast<Index>(r), static_cast<Index>(j)) = (pert[r] - base[r]) / eps;
            }
            {
                const double eps = 1e-7 * std::max(1.0, dt);
                pert = bounds_[k];
                segment_map(pert.data(), uk, dt + eps);
                for (std::size_t r = 0; r < d_; ++r) Ck(static_cast<Index>(r)) = (pert[r] - base[r]) / eps;
            }
            S = Ak * S;
            S.middleCols(static_cast<Index>(k * m_), static_cast<Index>(m_)) += Bk;
            S.col(n - 1) += Ck / static_cast<double>(K_);
            for (auto i : bounded_) {
                const double ex = excess(bounds_[k + 1][i], i);
                if (ex != 0.0) add_residual(ex / tol_[i], S.row(static_cast<Index>(i)) / tol_[i]);
            }
        }
        const auto e = boundary_error(bounds_[K_], qf_, dyn_.layout);
        for (std::size_t i = 0; i < d_; ++i) add_residual(e[i] / tol_[i], S.row(static_cast<Index>(i)) / tol_[i]);

        // Running cost: local dependence on each segment's control (exact when g
        // ignores the state), and dJ/dtau = J/tau at fixed controls.
        for (std::size_t k = 0; k < K_; ++k) {
            for (std::size_t j = 0; j < m_; ++j) {
                const std::size_t idx = k * m_ + j;
                const double h = 1e-4 * std::max(1.0, std::abs(z[idx]));
                std::copy(&z[k * m_], &z[k * m_] + m_, u.begin());
                auto gbar = [&](double uj) {
                    u[j] = uj;
                    return 0.5 * dt * (cost_.g(bounds_[k].data(), u.data()) + cost_.g(bounds_[k + 1].data(), u.data()));
                };
                const double gp = gbar(z[idx] + h), gm = gbar(z[idx] - h), g0 = gbar(z[idx]);
                grad(static_cast<Index>(idx)) += (gp - gm) / (2.0 * h);
                H(static_cast<Index>(idx), static_cast<Index>(idx)) += std::max(0.0, (gp - 2.0 * g0 + gm) / (h * h));
            }
        }
        grad(n - 1) += J / tau;
    }

    /// Levenberg-Marquardt with box bounds handled by an active set.
    std::size_t minimize(std::vector<double>& z, double mu, std::size_t max_iterations) {
        using Eigen::Index;
        Eigen::VectorXd grad;
        Eigen::MatrixXd H;
        double F = objective(z, mu);
        double lambda = 1e-3;
        std::size_t it = 0;
        std::vector<double> trial(n_);
        std::vector<Index> free;
        while (it < max_iterations) {
            ++it;
            linearize(z, mu, grad, H);
            free.clear();
            for (std::size_t i = 0; i < n_; ++i) {
                const double gi = grad(static_cast<Index>(i));
                if ((at_lower(z, i) && gi > 0) || (at_upper(z, i) && gi < 0)) continue;
                free.push_back(static_cast<Index>(i));
            }
            if (free.empty()) break;
            const auto nf = static_cast<Index>(free.size());
            Eigen::MatrixXd Hf(nf, nf);
            Eigen::VectorXd gf(nf);
            for (Index a = 0; a < nf; ++a) {
                gf(a) = grad(free[static_cast<std::size_t>(a)]);
                for (Index b = 0; b < nf; ++b) Hf(a, b) = H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
            }
            if (gf.norm() < 1e-10) break;
            bool accepted = false;
            double gain = 0.0;
            while (lambda < 1e10) {
                Eigen::MatrixXd M = Hf;
                for (Index a = 0; a < nf; ++a) M(a, a) += lambda * std::max(Hf(a, a), 1e-6) + 1e-12;
                const Eigen::VectorXd step = M.ldlt().solve(-gf);
                trial = z;
                for (Index a = 0; a < nf; ++a) trial[static_cast<std::size_t>(free[static_cast<std::size_t>(a)])] += step(a);
                clamp(trial);
                const double Ft = objective(trial, mu);
                if (std::isfinite(Ft) && Ft < F) {
                    gain = F - Ft;
                    z.swap(trial);
                    F = Ft;
                    lambda = std::max(lambda / 3.0, 1e-9);
                    accepted = true;
                    break;
                }
                lambda *= 4.0;
            }
            if (!accepted || gain < 1e-9 * (1.0 + F)) break;
        }
        return it;
    }

    /// Initial decision vectors: straight line, max-then-min, min-then-max, then
    /// best-screened random schedules interleaved with plain random ones and
    /// their mirror images (when the model can reflect controls).
    [[nodiscard]] std::vector<double> initial_guess(std::size_t start) {
        std::vector<double> z(n_, 0.0);
        z.back() = nominal_tau();
        if (start == 1 || start == 2) {
            for (std::size_t k = 0; k < K_; ++k)
                for (std::size_t j = 0; j < m_; ++j) {
                    const auto& b = dyn_.control_bounds[j];
                    const bool first_half = 2 * k < K_;
                    const bool up = (start == 1) == first_half;
                    z[k * m_ + j] = 0.5 * (up ? b.hi : b.lo);
                }
        } else if (start >= 3) {
            // 3: screened, 4: random, 5: mirror of 4, 6: screened, 7: random, ...
            const std::size_t slot = (start - 3) % 3, round = (start - 3) / 3;
            if (slot == 0) {
                if (pool_.empty()) screen_random_pool();
                z = pool_[round % pool_.size()];
            } else {
                std::mt19937_64 rng(opts_.seed + 3 + 3 * round);
                std::uniform_real_distribution<double> unit(-1.0, 1.0);
                for (std::size_t k = 0; k < K_; ++k)
                    for (std::size_t j = 0; j < m_; ++j) {
                        const auto& b = dyn_.control_bounds[j];
                        z[k * m_ + j] = 0.5 * (b.lo + b.hi) + 0.25 * (b.hi - b.lo) * unit(rng);
                    }
                z.back() = std::clamp(z.back() * std::exp(0.6 * unit(rng)), opts_.tau_min, opts_.tau_max);
                if (slot == 2 && dyn_.reflect_control)
                    for (std::size_t k = 0; k < K_; ++k)
                        dyn_.reflect_control(Reflection::AcrossX, std::span<double>(&z[k * m_], m_));
            }
        }
        return z;
    }

    [[nodiscard]] ControlSchedule schedule(const std::vector<double>& z) const {
        return {m_, std::vector<double>(z.begin(), z.end() - 1)};
    }

    [[nodiscard]] const std::vector<double>& tolerances() const noexcept { return tol_; }

private:
    [[nodiscard]] double nominal_tau() const {
        double dist2 = 0.0;
        for (auto p : dyn_.layout.position) dist2 += (qf_[p] - q0_[p]) * (qf_[p] - q0_[p]);
        return std::clamp(std::max(std::sqrt(dist2) / opts_.speed_hint, 0.5), opts_.tau_min, opts_.tau_max);
    }

    /// Random schedules of one to three constant pieces, ranked by how close
    /// they land to the target. Deterministic in the seed.
    void screen_random_pool() {
        std::mt19937_64 rng(opts_.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double tau0 = nominal_tau();
        std::vector<std::pair<double, std::vector<double>>> scored;
        scored.reserve(opts_.screening_samples);
        for (std::size_t c = 0; c < opts_.screening_samples; ++c) {
            std::vector<double> z(n_);
            const std::size_t pieces = 1 + static_cast<std::size_t>(unit(rng) * 3.0) % 3;
            std::vector<std::size_t> cuts{0};
            for (std::size_t p = 1; p < pieces; ++p) cuts.push_back(static_cast<std::size_t>(unit(rng) * static_cast<double>(K_)));
            cuts.push_back(K_);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
                std::vector<double> u(m_);
                for (std::size_t j = 0; j < m_; ++j) {
                    const auto& b = dyn_.control_bounds[j];
                    u[j] = b.lo + (b.hi - b.lo) * (0.1 + 0.8 * unit(rng));
                }
                for (std::size_t k = cuts[p]; k < cuts[p + 1]; ++k)
                    for (std::size_t j = 0; j < m_; ++j) z[k * m_ + j] = u[j];
            }
            z.back() = tau0 * std::exp(-0.7 + 2.3 * unit(rng));
            repair(z);
            scored.emplace_back(objective(z, 1e6), std::move(z));
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [score, z] : scored) pool_.push_back(std::move(z));
    }

    void segment_map(double* q, const double* u, double dt) {
        const double h = dt / static_cast<double>(opts_.opt_substeps);
        for (std::size_t s = 0; s < opts_.opt_substeps; ++s) rk4_step(dyn_, q, u, h, scratch_);
    }

    [[nodiscard]] double excess(double x, std::size_t i) const noexcept {
        const auto& b = dyn_.state_bounds[i];
        if (x > b.hi) return x - b.hi;
        if (x < b.lo) return x - b.lo;
        return 0.0;
    }

    const DynamicsModel& dyn_;
    const CostModel& cost_;
    const SolverOptions& opts_;
    std::vector<double> q0_, qf_;
    std::size_t K_, m_, d_, n_;
    std::vector<double> tol_;
    std::vector<std::size_t> bounded_;
    Rk4Scratch scratch_;
    std::vector<std::vector<double>> bounds_;
    std::vector<std::vector<double>> pool_;
};

}  // namespace detail

/// Minimum-cost trajectory from q0 to qf under the model's bounds, by direct
/// transcription with multi-start local descent and a continued quadratic
/// penalty on the terminal mismatch. q0 == qf yields the empty trajectory.
[[nodiscard]] inline SteeringResult solve_tpbvp(const State& q0, const State& qf, const DynamicsModel& dyn,
                                                const CostModel& cost, const SolverOptions& opts = {}) {
    opts.validate();
    if (q0.size() != dyn.d || qf.size() != dyn.d) throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");
    if (!dyn.state_in_bounds(q0.values) || !dyn.state_in_bounds(qf.values))
        throw Error(ErrorCode::StateBoundViolation, "boundary state outside the state bounds");

    SteeringResult result;
    const auto diff = boundary_error(qf.values, q0.values, dyn.layout);
    if (std::all_of(diff.begin(), diff.end(), [](double e) { return e == 0.0; })) {
        result.feasible = true;
        result.trajectory.state_dim = dyn.d;
        result.trajectory.control_dim = dyn.m;
        result.diagnostics.constraint_violation = 0.0;
        return result;
    }

    // Translation invariance: solve with q0 at the origin, shift back afterwards.
    std::vector<double> origin_shift(dyn.layout.position.size());
    for (std::size_t i = 0; i < origin_shift.size(); ++i) origin_shift[i] = -q0[dyn.layout.position[i]];
    const State a = translate_state(q0, origin_shift, dyn.layout);
    const State b = translate_state(qf, origin_shift, dyn.layout);

    detail::Transcription tx(a, b, dyn, cost, opts);
    const double h_factor = 1.0 / static_cast<double>(opts.integration_steps);
    for (std::size_t s = 0; s < opts.multistarts; ++s) {
        auto z = tx.initial_guess(s);
        tx.repair(z);
        double mu = opts.penalty_initial;
        for (std::size_t round = 0; round < opts.penalty_rounds; ++round, mu *= opts.penalty_growth) {
            const bool last = round + 1 == opts.penalty_rounds;
            result.diagnostics.iterations +=
                tx.minimize(z, mu, last ? opts.max_iterations : opts.max_iterations_inner);
        }
        tx.repair(z);

        Trajectory fine;
        try {
            fine = integrate(a, tx.schedule(z), z.back(), dyn, z.back() * h_factor);
        } catch (const Error&) {
            continue;
        }
        const auto err = boundary_error(fine.state(fine.size() - 1), b.values, dyn.layout);
        if (!within_tolerance(err, tx.tolerances())) continue;
        ++result.diagnostics.converged_starts;
        Trajectory stored = resample(fine, opts.stored_samples);
        stored.cost = evaluate_cost(stored, cost);
        if (!result.feasible || stored.cost < result.trajectory.cost) {
            double viol = 0.0;
            for (std::size_t i = 0; i < err.size(); ++i) viol = std::max(viol, std::abs(err[i]) / tx.tolerances()[i]);
            result.feasible = true;
            result.trajectory = std::move(stored);
            result.diagnostics.best_start = static_cast<int>(s);
            result.diagnostics.constraint_violation = viol;
        }
    }
    if (result.feasible) {
        for (auto& o : origin_shift) o = -o;
        const double c = result.trajectory.cost;
        result.trajectory = translate_trajectory(std::move(result.trajectory), origin_shift, dyn.layout);
        result.trajectory.cost = c;
    }
    return result;
}

/// Control lattice for the exhaustive oracle.
struct EnumerationOptions {
    std::vector<std::vector<double>> control_values;  // one value list per control dimension
    std::size_t segments = 1;
    std::vector<double> tau_values;
    BoundaryTolerance tol;
    double oracle_slack = 1.0;
    std::size_t integration_steps = 200;
};

/// Enumerates every sequence of lattice controls over every lattice duration and
/// returns the cheapest one landing within tol * oracle_slack of qf. The first
/// minimum in enumeration order wins (tau outermost, segment 0 slowest).
[[nodiscard]] inline SteeringResult brute_force_steer(const State& q0, const State& qf, const DynamicsModel& dyn,
                                                      const CostModel& cost, const EnumerationOptions& eo) {
    if (eo.control_values.size() != dyn.m) throw Error(ErrorCode::InvalidArgument, "one value list per control");
    if (eo.segments == 0 || eo.segments > 4) throw Error(ErrorCode::InvalidArgument, "segment count must be in [1, 4]");
    std::size_t combos = 1;
    for (const auto& v : eo.control_values) {
        if (v.empty()) throw Error(ErrorCode::InvalidArgument, "empty control lattice");
        combos *= v.size();
    }
    std::size_t sequences = 1;
    for (std::size_t s = 0; s < eo.segments; ++s) sequences *= combos;
    const auto tol = eo.tol.per_component(dyn.d, dyn.layout);

    SteeringResult result;
    ControlSchedule sched;
    sched.control_dim = dyn.m;
    sched.values.assign(eo.segments * dyn.m, 0.0);
    for (double tau : eo.tau_values) {
        if (!(tau > 0)) continue;
        for (std::size_t code = 0; code < sequences; ++code) {
            std::size_t c = code;
            for (std::size_t s = eo.segments; s-- > 0;) {
                std::size_t cc = c % combos;
                c /= combos;
                for (std::size_t j = dyn.m; j-- > 0;) {
                    const auto& vals = eo.control_values[j];
                    sched.values[s * dyn.m + j] = vals[cc % vals.size()];
                    cc /= vals.size();
                }
            }
            Trajectory z;
            try {
                z = integrate(q0, sched, tau, dyn, tau / static_cast<double>(eo.integration_steps));
            } catch (const Error&) {
                continue;
            }
            ++result.diagnostics.iterations;
            const auto err = boundary_error(z.state(z.size() - 1), qf.values, dyn.layout);
            if (!within_tolerance(err, tol, eo.oracle_slack)) continue;
            z.cost = evaluate_cost(z, cost);
            if (!result.feasible || z.cost < result.trajectory.cost) {
                result.feasible = true;
                result.trajectory = std::move(z);
            }
        }
    }
    return result;
}

}  // namespace kinoprim
