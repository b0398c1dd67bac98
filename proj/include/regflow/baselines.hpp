#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "regflow/linalg.hpp"
#include "regflow/problems.hpp"
#include "regflow/stopping.hpp"

namespace regflow {

/// One gradient-descent step on the least-squares functional.
inline Vector landweber_step(const Vector& x, const Matrix& a, const Vector& b, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("landweber_step: dt must be > 0");
    if (x.size() != a.cols() || b.size() != a.rows())
        throw std::invalid_argument("landweber_step: dimension mismatch");
    Vector g = matvec_t(a, subtract(b, matvec(a, x)));
    Vector next = x;
    axpy(dt, g, next);
    return next;
}

/// Landweber iteration from x = 0 under the discrepancy rule. The step size
/// must satisfy 0 < dt < 2 / sigma_1^2 or gradient descent is unstable;
/// callers that already know sigma_1 can pass it to skip the power iteration.
inline RunReport run_landweber(const TestProblem& p, const NoisyInstance& noisy, double dt,
                               const StopRule& rule,
                               std::optional<double> sigma1_hint = std::nullopt) {
    const double s1 = sigma1_hint ? *sigma1_hint : spectral_norm(p.a);
    if (!(dt > 0.0) || !(dt < 2.0 / (s1 * s1)))
        throw std::invalid_argument("run_landweber: dt outside (0, 2/sigma_1^2)");
    RunReport rep = detail::run_stopped_iteration(
        p.a, noisy.b_noisy, p.x_exact, rule, Vector(p.a.cols(), 0.0),
        [&](std::size_t, const Vector& x) { return landweber_step(x, p.a, noisy.b_noisy, dt); });
    rep.method = "landweber";
    return rep;
}

/// Momentum and gradient weights of the nu-method for the step that produces
/// iterate k (k >= 1). mu_1 = 0, so the first step is a pure gradient step.
struct NuCoefficients {
    double nu = 0.0;
    std::size_t k = 0;
    double mu = 0.0;
    double omega = 0.0;
};

inline NuCoefficients nu_coefficients(double nu, std::size_t k) {
    if (!(nu > 0.0)) throw std::invalid_argument("nu_coefficients: nu must be > 0");
    if (k < 1) throw std::invalid_argument("nu_coefficients: k must be >= 1");
    NuCoefficients co;
    co.nu = nu;
    co.k = k;
    if (k == 1) {
        co.mu = 0.0;
        co.omega = (4.0 * nu + 2.0) / (4.0 * nu + 1.0);
        return co;
    }
    const double kd = static_cast<double>(k);
    co.mu = (kd - 1.0) * (2.0 * kd - 3.0) * (2.0 * kd + 2.0 * nu - 1.0) /
            ((kd + 2.0 * nu - 1.0) * (2.0 * kd + 4.0 * nu - 1.0) * (2.0 * kd + 2.0 * nu - 3.0));
    co.omega = 4.0 * (2.0 * kd + 2.0 * nu - 1.0) * (kd + nu - 1.0) /
               ((kd + 2.0 * nu - 1.0) * (2.0 * kd + 4.0 * nu - 1.0));
    return co;
}

/// nu-method update producing iterate k from the two previous iterates:
///   x_k = x_{k-1} + mu_k (x_{k-1} - x_{k-2}) - omega_norm * omega_k * A^T (A x_{k-1} - b).
/// omega_norm rescales the gradient weight to the unit-norm operator setting
/// the coefficient theory assumes; 1 / sigma_1^2 by default at run level.
inline Vector nu_step(const Vector& prev_x, const Vector& cur_x, const Matrix& a, const Vector& b,
                      double nu, std::size_t k, double omega_norm) {
    if (!(omega_norm > 0.0)) throw std::invalid_argument("nu_step: omega_norm must be > 0");
    if (prev_x.size() != a.cols() || cur_x.size() != a.cols() || b.size() != a.rows())
        throw std::invalid_argument("nu_step: dimension mismatch");
    const NuCoefficients co = nu_coefficients(nu, k);
    Vector next(cur_x.size());
    for (std::size_t i = 0; i < next.size(); ++i)
        next[i] = cur_x[i] + co.mu * (cur_x[i] - prev_x[i]);
    Vector g = matvec_t(a, subtract(b, matvec(a, cur_x)));
    axpy(omega_norm * co.omega, g, next);
    return next;
}

/// nu-method from x = 0 with equal starting history. omega_norm defaults to
/// 1 / sigma_1^2, computed once per run.
inline RunReport run_nu(const TestProblem& p, const NoisyInstance& noisy, double nu,
                        const StopRule& rule,
                        std::optional<double> omega_norm = std::nullopt) {
    if (!(nu > 0.0)) throw std::invalid_argument("run_nu: nu must be > 0");
    double w = 0.0;
    if (omega_norm) {
        w = *omega_norm;
    } else {
        const double s1 = spectral_norm(p.a);
        if (!(s1 > 0.0)) throw std::invalid_argument("run_nu: zero operator");
        w = 1.0 / (s1 * s1);
    }
    Vector prev(p.a.cols(), 0.0);
    RunReport rep = detail::run_stopped_iteration(
        p.a, noisy.b_noisy, p.x_exact, rule, Vector(p.a.cols(), 0.0),
        [&](std::size_t k, const Vector& x) {
            Vector next = nu_step(prev, x, p.a, noisy.b_noisy, nu, k + 1, w);
            prev = x;
            return next;
        });
    rep.method = "nu";
    return rep;
}

struct NesterovConfig {
    double alpha = 3.0;
    double omega = 0.0;
};

/// Accelerated gradient update producing iterate k+1:
///   x_{k+1} = x_k + (k-1)/(k+alpha-1) (x_k - x_{k-1}) - omega * A^T (A x_k - b).
/// At k = 0 the momentum factor is negative, but the equal starting history
/// used by the runs makes that term vanish.
inline Vector nesterov_step(const Vector& prev_x, const Vector& cur_x, const Matrix& a,
                            const Vector& b, const NesterovConfig& cfg, std::size_t k) {
    if (prev_x.size() != a.cols() || cur_x.size() != a.cols() || b.size() != a.rows())
        throw std::invalid_argument("nesterov_step: dimension mismatch");
    const double kd = static_cast<double>(k);
    const double factor = (kd - 1.0) / (kd + cfg.alpha - 1.0);
    Vector next(cur_x.size());
    for (std::size_t i = 0; i < next.size(); ++i)
        next[i] = cur_x[i] + factor * (cur_x[i] - prev_x[i]);
    Vector g = matvec_t(a, subtract(b, matvec(a, cur_x)));
    axpy(cfg.omega, g, next);
    return next;
}

/// Nesterov's scheme from x = 0 with equal starting history. alpha = 3 is the
/// smallest accepted momentum offset; omega must be positive (the stability
/// bound omega <= 1/sigma_1^2 is the caller's responsibility).
inline RunReport run_nesterov(const TestProblem& p, const NoisyInstance& noisy,
                              const NesterovConfig& cfg, const StopRule& rule) {
    if (!(cfg.alpha >= 3.0)) throw std::invalid_argument("run_nesterov: alpha must be >= 3");
    if (!(cfg.omega > 0.0)) throw std::invalid_argument("run_nesterov: omega must be > 0");
    Vector prev(p.a.cols(), 0.0);
    RunReport rep = detail::run_stopped_iteration(
        p.a, noisy.b_noisy, p.x_exact, rule, Vector(p.a.cols(), 0.0),
        [&](std::size_t k, const Vector& x) {
            Vector next = nesterov_step(prev, x, p.a, noisy.b_noisy, cfg, k);
            prev = x;
            return next;
        });
    rep.method = "nesterov";
    return rep;
}

/// Conjugate gradient on the normal equations A^T A x = A^T b without forming
/// A^T A. step() returns false when the search direction degenerates (the
/// least-squares residual equations are already satisfied).
class CglsSolver {
  public:
    CglsSolver(const Matrix& a, const Vector& b, Vector x0) : a_(a), b_(b), x_(std::move(x0)) {
        if (x_.size() != a_.cols() || b_.size() != a_.rows())
            throw std::invalid_argument("CglsSolver: dimension mismatch");
        r_ = subtract(b_, matvec(a_, x_));
        s_ = matvec_t(a_, r_);
        p_ = s_;
        gamma_ = dot(s_, s_);
    }

    bool step() {
        if (breakdown_) return false;
        if (gamma_ == 0.0) {
            breakdown_ = true;
            return false;
        }
        const Vector q = matvec(a_, p_);
        const double qq = dot(q, q);
        if (qq == 0.0) {
            breakdown_ = true;
            return false;
        }
        const double alpha = gamma_ / qq;
        axpy(alpha, p_, x_);
        axpy(-alpha, q, r_);
        s_ = matvec_t(a_, r_);
        const double gamma_next = dot(s_, s_);
        const double beta = gamma_next / gamma_;
        for (std::size_t i = 0; i < p_.size(); ++i) p_[i] = s_[i] + beta * p_[i];
        gamma_ = gamma_next;
        return true;
    }

    const Vector& x() const { return x_; }
    bool broke_down() const { return breakdown_; }

  private:
    const Matrix& a_;
    const Vector& b_;
    Vector x_;
    Vector r_, s_, p_;
    double gamma_ = 0.0;
    bool breakdown_ = false;
};

/// CGLS from x = 0 under the discrepancy rule. Mirrors the shared driver's
/// record/check/step order; a breakdown stops at the current iterate and is
/// flagged in params.
inline RunReport cgls_run(const Matrix& a, const Vector& b, const StopRule& rule,
                          const Vector& x_exact = {}) {
    CglsSolver solver(a, b, Vector(a.cols(), 0.0));
    RunReport rep;
    rep.method = "cg";
    const double x0_norm = 0.0;
    Vector recorded_x = solver.x();

    for (std::size_t k = 0;; ++k) {
        recorded_x = solver.x();
        rep.residual_history.push_back(norm(subtract(matvec(a, recorded_x), b)));
        if (!x_exact.empty()) rep.error_history.push_back(relative_error(recorded_x, x_exact));
        rep.iterN = k;
        if (discrepancy_satisfied(rep.residual_history.back(), rule)) {
            rep.stopped_by = StopReason::discrepancy;
            break;
        }
        if (k == rule.n_max) {
            rep.stopped_by = StopReason::max_iter;
            break;
        }
        if (!solver.step()) {
            rep.stopped_by = StopReason::max_iter;
            rep.params["breakdown"] = "true";
            break;
        }
        if (detail::diverged(solver.x(), x0_norm)) {
            rep.stopped_by = StopReason::divergence;
            break;
        }
    }

    rep.final_residual = rep.residual_history.back();
    if (!rep.error_history.empty()) rep.l2err = rep.error_history.back();
    rep.final_x = std::move(recorded_x);
    return rep;
}

/// Convenience wrapper matching the other run functions.
inline RunReport run_cgls(const TestProblem& p, const NoisyInstance& noisy, const StopRule& rule) {
    return cgls_run(p.a, noisy.b_noisy, rule, p.x_exact);
}

}  // namespace regflow
