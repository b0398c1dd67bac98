#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "regflow/damping.hpp"
#include "regflow/linalg.hpp"
#include "regflow/problems.hpp"
#include "regflow/stopping.hpp"

namespace regflow {

/// State of the first-order system equivalent to the damped flow:
/// x' = q, q' = A^T (b - A x) - eta(t) q, at step k, time t = t0 + k dt.
struct SecondOrderState {
    Vector x;
    Vector q;
    std::size_t k = 0;
    double t = 0.0;
};

/// Coefficients of the equivalent three-term recurrence
///   x_{k+1} = x_k + a (x_k - x_{k-1}) + omega * A^T (b - A x_k).
struct SchemeCoefficients {
    double a = 0.0;
    double omega = 0.0;
};

/// Three-term coefficients of the symplectic Euler step at time t_k.
inline SchemeCoefficients se_coefficients(const DampingSchedule& sched, double t_k, double dt) {
    return {1.0 - dt * eta_at(sched, t_k), dt * dt};
}

/// Three-term coefficients of the Stormer-Verlet step at time t_k;
/// the same pair drives the modified scheme.
inline SchemeCoefficients sv_coefficients(const DampingSchedule& sched, double t_k, double dt) {
    const double half = 0.5 * dt * eta_at(sched, t_k);
    const double denom = 1.0 + half;
    return {(1.0 - half) / denom, dt * dt / denom};
}

namespace detail {

inline void check_step_args(const SecondOrderState& st, const Matrix& a, const Vector& b,
                            double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("flow step: dt must be > 0");
    if (st.x.size() != a.cols() || st.q.size() != a.cols() || b.size() != a.rows())
        throw std::invalid_argument("flow step: dimension mismatch");
}

inline Vector gradient_term(const Matrix& a, const Vector& b, const Vector& x) {
    return matvec_t(a, subtract(b, matvec(a, x)));
}

}  // namespace detail

/// Symplectic Euler: update the velocity first, then move with the new one.
inline SecondOrderState se_step(const SecondOrderState& st, const Matrix& a, const Vector& b,
                                const DampingSchedule& sched, double dt) {
    detail::check_step_args(st, a, b, dt);
    const double eta = eta_at(sched, st.t);
    const Vector g = detail::gradient_term(a, b, st.x);

    SecondOrderState next = st;
    for (std::size_t i = 0; i < next.q.size(); ++i)
        next.q[i] = st.q[i] + dt * (g[i] - eta * st.q[i]);
    for (std::size_t i = 0; i < next.x.size(); ++i) next.x[i] = st.x[i] + dt * next.q[i];
    next.k = st.k + 1;
    next.t = st.t + dt;
    return next;
}

/// Stormer-Verlet: half velocity step (implicit in the damping term, solved
/// in closed form), full position step, half velocity step.
inline SecondOrderState sv_step(const SecondOrderState& st, const Matrix& a, const Vector& b,
                                const DampingSchedule& sched, double dt) {
    detail::check_step_args(st, a, b, dt);
    const double denom = 1.0 + 0.5 * dt * eta_at(sched, st.t);
    const Vector g0 = detail::gradient_term(a, b, st.x);

    Vector q_half(st.q.size());
    for (std::size_t i = 0; i < q_half.size(); ++i)
        q_half[i] = (st.q[i] + 0.5 * dt * g0[i]) / denom;

    SecondOrderState next = st;
    for (std::size_t i = 0; i < next.x.size(); ++i) next.x[i] = st.x[i] + dt * q_half[i];
    next.t = st.t + dt;
    next.k = st.k + 1;

    const double eta1 = eta_at(sched, next.t);
    const Vector g1 = detail::gradient_term(a, b, next.x);
    for (std::size_t i = 0; i < next.q.size(); ++i)
        next.q[i] = (1.0 - 0.5 * dt * eta1) * q_half[i] + 0.5 * dt * g1[i];
    return next;
}

/// Modified Stormer-Verlet as a two-term lookahead recurrence: form the
/// extrapolated point v, then take the gradient there. Valid for k >= 1;
/// the first step of a run is seeded with one symplectic Euler step.
inline Vector msv_step(const Vector& prev_x, const Vector& cur_x, const Matrix& a,
                       const Vector& b, const DampingSchedule& sched, double dt, std::size_t k) {
    if (!(dt > 0.0)) throw std::invalid_argument("msv_step: dt must be > 0");
    if (k < 1) throw std::invalid_argument("msv_step: k must be >= 1");
    if (prev_x.size() != a.cols() || cur_x.size() != a.cols() || b.size() != a.rows())
        throw std::invalid_argument("msv_step: dimension mismatch");

    const double t_k = sched.t0 + static_cast<double>(k) * dt;
    const SchemeCoefficients co = sv_coefficients(sched, t_k, dt);

    Vector v(cur_x.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = cur_x[i] + co.a * (cur_x[i] - prev_x[i]);
    Vector g = detail::gradient_term(a, b, v);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += co.omega * g[i];
    return v;
}

/// Classical fourth-order Runge-Kutta on the augmented system (x, q),
/// with the damping evaluated at the stage times.
inline SecondOrderState rk4_step(const SecondOrderState& st, const Matrix& a, const Vector& b,
                                 const DampingSchedule& sched, double dt) {
    detail::check_step_args(st, a, b, dt);
    const std::size_t n = st.x.size();

    auto rhs = [&](double t, const Vector& x, const Vector& q, Vector& dx, Vector& dq) {
        const double eta = eta_at(sched, t);
        dx = q;
        dq = detail::gradient_term(a, b, x);
        for (std::size_t i = 0; i < n; ++i) dq[i] -= eta * q[i];
    };

    Vector k1x, k1q, k2x, k2q, k3x, k3q, k4x, k4q;
    Vector xs(n), qs(n);

    rhs(st.t, st.x, st.q, k1x, k1q);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = st.x[i] + 0.5 * dt * k1x[i];
        qs[i] = st.q[i] + 0.5 * dt * k1q[i];
    }
    rhs(st.t + 0.5 * dt, xs, qs, k2x, k2q);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = st.x[i] + 0.5 * dt * k2x[i];
        qs[i] = st.q[i] + 0.5 * dt * k2q[i];
    }
    rhs(st.t + 0.5 * dt, xs, qs, k3x, k3q);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = st.x[i] + dt * k3x[i];
        qs[i] = st.q[i] + dt * k3q[i];
    }
    rhs(st.t + dt, xs, qs, k4x, k4q);

    SecondOrderState next = st;
    for (std::size_t i = 0; i < n; ++i) {
        next.x[i] = st.x[i] + dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
        next.q[i] = st.q[i] + dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
    }
    next.k = st.k + 1;
    next.t = st.t + dt;
    return next;
}

/// E(t) = J(x) - J_min + 0.5 ||q||^2, the Lyapunov quantity of the flow.
inline double energy(const SecondOrderState& st, const Matrix& a, const Vector& b,
                     double j_min = 0.0) {
    const Vector r = subtract(matvec(a, st.x), b);
    double e = 0.5 * dot(r, r) - j_min;
    e += 0.5 * dot(st.q, st.q);
    return e;
}

enum class Scheme { symplectic_euler, stormer_verlet, modified_stormer_verlet, runge_kutta4 };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::symplectic_euler: return "se";
        case Scheme::stormer_verlet: return "sv";
        case Scheme::modified_stormer_verlet: return "msv";
        case Scheme::runge_kutta4: return "rk4";
    }
    return "unknown";
}

inline Scheme parse_scheme(const std::string& id) {
    if (id == "se") return Scheme::symplectic_euler;
    if (id == "sv") return Scheme::stormer_verlet;
    if (id == "msv") return Scheme::modified_stormer_verlet;
    if (id == "rk4") return Scheme::runge_kutta4;
    throw std::invalid_argument("unknown scheme id: " + id);
}

/// Runs a flow scheme from rest (x = x0 or zero, q = 0) under the stop rule.
/// The discrepancy check happens on the current iterate before stepping, so
/// iterN = 0 is possible.
inline RunReport run_flow(Scheme scheme, const TestProblem& p, const NoisyInstance& noisy,
                          const DampingSchedule& sched, double dt, const StopRule& rule,
                          std::optional<Vector> x0 = std::nullopt,
                          std::optional<Vector> q0 = std::nullopt) {
    if (!(dt > 0.0)) throw std::invalid_argument("run_flow: dt must be > 0");
    const std::size_t n = p.a.cols();
    Vector x_start = x0.value_or(Vector(n, 0.0));
    Vector q_start = q0.value_or(Vector(n, 0.0));
    if (x_start.size() != n || q_start.size() != n)
        throw std::invalid_argument("run_flow: initial state dimension mismatch");

    RunReport rep;
    if (scheme == Scheme::modified_stormer_verlet) {
        SecondOrderState seed{x_start, q_start, 0, sched.t0};
        Vector prev = x_start;
        bool have_prev = false;
        rep = detail::run_stopped_iteration(
            p.a, noisy.b_noisy, p.x_exact, rule, x_start,
            [&](std::size_t k, const Vector& x) {
                if (k == 0) {
                    have_prev = true;
                    prev = x;
                    return se_step(seed, p.a, noisy.b_noisy, sched, dt).x;
                }
                if (!have_prev) throw std::logic_error("run_flow: missing msv history");
                Vector next = msv_step(prev, x, p.a, noisy.b_noisy, sched, dt, k);
                prev = x;
                return next;
            });
    } else {
        SecondOrderState st{std::move(x_start), std::move(q_start), 0, sched.t0};
        rep = detail::run_stopped_iteration(
            p.a, noisy.b_noisy, p.x_exact, rule, st.x,
            [&](std::size_t, const Vector&) {
                switch (scheme) {
                    case Scheme::symplectic_euler:
                        st = se_step(st, p.a, noisy.b_noisy, sched, dt);
                        break;
                    case Scheme::stormer_verlet:
                        st = sv_step(st, p.a, noisy.b_noisy, sched, dt);
                        break;
                    default:
                        st = rk4_step(st, p.a, noisy.b_noisy, sched, dt);
                        break;
                }
                return st.x;
            });
    }
    rep.method = to_string(scheme);
    return rep;
}

}  // namespace regflow
