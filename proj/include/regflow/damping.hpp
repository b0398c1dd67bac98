#pragma once

#include <cmath>
#include <stdexcept>

namespace regflow {

/// Damping coefficient eta(t) of the second-order flow
///   x'' + eta(t) x' + A^T A x = A^T b.
/// Constant damping integrates from t0 = 0; the time-dependent kinds are
/// singular at t = 0 and integrate from t0 = 1.
struct DampingSchedule {
    enum class Kind { constant, dynamic_over_t, inverse_sqrt };

    Kind kind = Kind::constant;
    double eta = 1.0;  // constant kind
    double s = 1.0;    // dynamic kind: eta(t) = (1 + 2s) / t
    double t0 = 0.0;

    static DampingSchedule constant(double eta) {
        if (!(eta > 0.0)) throw std::invalid_argument("DampingSchedule: eta must be > 0");
        DampingSchedule d;
        d.kind = Kind::constant;
        d.eta = eta;
        d.t0 = 0.0;
        return d;
    }

    static DampingSchedule dynamic(double s) {
        if (!(s > -0.5)) throw std::invalid_argument("DampingSchedule: s must be > -1/2");
        DampingSchedule d;
        d.kind = Kind::dynamic_over_t;
        d.s = s;
        d.t0 = 1.0;
        return d;
    }

    static DampingSchedule inverse_sqrt() {
        DampingSchedule d;
        d.kind = Kind::inverse_sqrt;
        d.t0 = 1.0;
        return d;
    }
};

inline double eta_at(const DampingSchedule& sched, double t) {
    switch (sched.kind) {
        case DampingSchedule::Kind::constant:
            return sched.eta;
        case DampingSchedule::Kind::dynamic_over_t:
            if (!(t > 0.0)) throw std::domain_error("eta_at: t must be > 0 for 1/t damping");
            return (1.0 + 2.0 * sched.s) / t;
        case DampingSchedule::Kind::inverse_sqrt:
            if (!(t > 0.0)) throw std::domain_error("eta_at: t must be > 0 for 1/sqrt(t) damping");
            return 1.0 / std::sqrt(t);
    }
    throw std::logic_error("eta_at: unknown damping kind");
}

}  // namespace regflow
