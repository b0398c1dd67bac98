#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "regflow/linalg.hpp"

namespace regflow {

/// Morozov discrepancy stopping: stop at the first iterate whose residual
/// norm ||A x_k - b|| falls to tau * delta, where delta is the noise level
/// supplied by the caller. n_max bounds the iteration count.
struct StopRule {
    double tau = 1.03;
    double delta = 0.0;
    std::size_t n_max = 5000;

    StopRule() = default;
    StopRule(double tau_, double delta_, std::size_t n_max_ = 5000)
        : tau(tau_), delta(delta_), n_max(n_max_) {
        if (!(tau > 0.0)) throw std::invalid_argument("StopRule: tau must be > 0");
        if (delta < 0.0) throw std::invalid_argument("StopRule: delta must be >= 0");
        if (n_max < 1) throw std::invalid_argument("StopRule: n_max must be >= 1");
    }

    double threshold() const { return tau * delta; }
};

enum class StopReason { discrepancy, max_iter, divergence };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::discrepancy: return "discrepancy";
        case StopReason::max_iter: return "max_iter";
        case StopReason::divergence: return "divergence";
    }
    return "unknown";
}

/// Everything recorded about one solver run. Histories cover iterates
/// x_0 .. x_iterN inclusive, so their length is iterN + 1.
struct RunReport {
    std::string method;
    std::map<std::string, std::string> params;
    std::size_t iterN = 0;
    double l2err = 0.0;
    double final_residual = 0.0;
    StopReason stopped_by = StopReason::max_iter;
    std::vector<double> residual_history;
    std::vector<double> error_history;
    double wall_ms = 0.0;

    Vector final_x;
};

inline bool discrepancy_satisfied(double residual_norm, const StopRule& rule) {
    return residual_norm <= rule.threshold();
}

/// ||x - x_exact|| / ||x_exact||
inline double relative_error(const Vector& x, const Vector& x_exact) {
    const double nx = norm(x_exact);
    if (nx == 0.0) throw std::invalid_argument("relative_error: x_exact has zero norm");
    return norm(subtract(x, x_exact)) / nx;
}

/// Smallest index k with residual_history[k] <= tau * delta, if any.
inline std::optional<std::size_t> first_stop_index(const std::vector<double>& residual_history,
                                                   const StopRule& rule) {
    for (std::size_t k = 0; k < residual_history.size(); ++k)
        if (discrepancy_satisfied(residual_history[k], rule)) return k;
    return std::nullopt;
}

namespace detail {

inline bool diverged(const Vector& x, double x0_norm) {
    if (!all_finite(x)) return true;
    return norm(x) > 1e12 * (1.0 + x0_norm);
}

/// Shared driver: records the current iterate, checks the stop rule before
/// stepping, advances via step(k) -> next x, and aborts on divergence.
/// x_exact may be empty when no ground truth is available.
template <typename Step>
RunReport run_stopped_iteration(const Matrix& a, const Vector& b, const Vector& x_exact,
                                const StopRule& rule, Vector x0, Step&& step) {
    RunReport rep;
    const double x0_norm = norm(x0);
    Vector x = std::move(x0);

    for (std::size_t k = 0;; ++k) {
        rep.residual_history.push_back(norm(subtract(matvec(a, x), b)));
        if (!x_exact.empty()) rep.error_history.push_back(relative_error(x, x_exact));
        rep.iterN = k;
        if (discrepancy_satisfied(rep.residual_history.back(), rule)) {
            rep.stopped_by = StopReason::discrepancy;
            break;
        }
        if (k == rule.n_max) {
            rep.stopped_by = StopReason::max_iter;
            break;
        }
        Vector next = step(k, x);
        if (diverged(next, x0_norm)) {
            rep.stopped_by = StopReason::divergence;
            break;
        }
        x = std::move(next);
    }

    rep.final_residual = rep.residual_history.back();
    if (!rep.error_history.empty()) rep.l2err = rep.error_history.back();
    rep.final_x = std::move(x);
    return rep;
}

}  // namespace detail

}  // namespace regflow
