#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "regflow/linalg.hpp"

namespace regflow {

/// Gamma function by the Lanczos approximation (g = 7, 9 coefficients),
/// with the reflection formula for arguments below 1/2. Relative accuracy
/// is around 1e-13 on the real line away from the poles.
inline double gamma_fn(double x) {
    static const double coeff[9] = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    const double pi = 3.14159265358979323846;

    if (!std::isfinite(x)) throw std::invalid_argument("gamma_fn: non-finite argument");
    if (x < 0.5) {
        // sin(pi*x) only vanishes exactly at x = 0 in floating point, so the
        // poles at negative integers need a structural test.
        if (x == std::floor(x)) throw std::domain_error("gamma_fn: pole at non-positive integer");
        const double s = std::sin(pi * x);
        if (s == 0.0) throw std::domain_error("gamma_fn: pole at non-positive integer");
        return pi / (s * gamma_fn(1.0 - x));
    }
    const double z = x - 1.0;
    double a = coeff[0];
    for (int i = 1; i < 9; ++i) a += coeff[i] / (z + static_cast<double>(i));
    const double t = z + 7.5;
    return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

namespace detail {

/// Switch point between the ascending series and the large-argument
/// asymptotic expansion. The series is summed in long double; beyond
/// this point its alternating terms grow enough to eat double precision,
/// while the asymptotic expansion is already at ~1e-13.
inline constexpr double bessel_z_switch = 18.0;

inline double bessel_series(double s, double z) {
    const long double half = static_cast<long double>(z) / 2.0L;
    const long double q = half * half;
    long double term = std::pow(half, static_cast<long double>(s)) /
                       static_cast<long double>(gamma_fn(s + 1.0));
    long double sum = term;
    for (int m = 1; m <= 300; ++m) {
        term *= -q / (static_cast<long double>(m) * (static_cast<long double>(m) + s));
        sum += term;
        if (std::fabs(static_cast<double>(term)) <=
            1e-18 * (1.0 + std::fabs(static_cast<double>(sum))))
            return static_cast<double>(sum);
    }
    throw std::runtime_error("bessel_j: ascending series did not converge in 300 terms");
}

inline double bessel_asymptotic(double s, double z) {
    const double pi = 3.14159265358979323846;
    const double mu = 4.0 * s * s;
    double p = 1.0, q = 0.0;
    double term = 1.0;
    double prev_mag = 1e300;
    for (int k = 1; k <= 30; ++k) {
        const double odd = 2.0 * static_cast<double>(k) - 1.0;
        term *= (mu - odd * odd) / (static_cast<double>(k) * 8.0 * z);
        if (std::fabs(term) >= prev_mag) break;
        prev_mag = std::fabs(term);
        const int phase = k / 2;
        const double signed_term = (phase % 2 == 0) ? term : -term;
        if (k % 2 == 1)
            q += signed_term;
        else
            p += signed_term;
        if (std::fabs(term) < 1e-17) break;
    }
    const double chi = z - (s / 2.0 + 0.25) * pi;
    return std::sqrt(2.0 / (pi * z)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// Bessel function of the first kind J_s(z) for real order s > -1 and
/// z >= 0. Ascending series up to the switch point, Hankel asymptotic
/// expansion beyond; absolute accuracy around 1e-12 for z <= 50.
inline double bessel_j(double s, double z) {
    if (!(s > -1.0)) throw std::invalid_argument("bessel_j: order must be > -1");
    if (!(z >= 0.0)) throw std::invalid_argument("bessel_j: argument must be >= 0");
    if (z == 0.0) {
        if (s == 0.0) return 1.0;
        if (s > 0.0) return 0.0;
        throw std::domain_error("bessel_j: J_s(0) diverges for s < 0");
    }
    if (z <= detail::bessel_z_switch) return detail::bessel_series(s, z);
    return detail::bessel_asymptotic(s, z);
}

/// Values of the constant-damping filter pair at one (t, lambda) point.
struct FilterEvaluation {
    double t = 0.0;
    double lambda = 0.0;
    double g_value = 0.0;
    double phi_value = 0.0;
};

namespace detail {

inline void check_overdamped(double eta, double lambda) {
    if (!(eta > 0.0)) throw std::invalid_argument("filter_const: eta must be > 0");
    if (lambda < 0.0) throw std::invalid_argument("filter_const: lambda must be >= 0");
    if (lambda == 0.0) return;
    const double disc = eta * eta - 4.0 * lambda;
    if (disc <= 0.0 || disc < 1e-8 * eta * eta)
        throw std::domain_error(
            "filter_const: eta^2 - 4 lambda at or below the overdamped margin");
}

/// 1 - lambda * g(t, lambda), computed without the subtraction:
/// (lambda_1 e^{-lambda_2 t} - lambda_2 e^{-lambda_1 t}) / (lambda_1 - lambda_2).
inline double filter_const_survival(double eta, double t, double lambda) {
    check_overdamped(eta, lambda);
    if (lambda == 0.0) return 1.0;
    const double d = std::sqrt(eta * eta - 4.0 * lambda);
    const double l1 = 0.5 * (eta + d);
    const double l2 = 0.5 * (eta - d);
    return (l1 * std::exp(-l2 * t) - l2 * std::exp(-l1 * t)) / d;
}

}  // namespace detail

/// Closed-form filter functions of the constant-damping flow, overdamped
/// branch (eta^2 > 4 lambda strictly, with a relative margin of 1e-8; the
/// critical region is rejected rather than extrapolated). At lambda = 0 the
/// analytic limits are used. g solves the unit-forcing scalar equation,
/// phi the homogeneous one with unit initial velocity; both vanish at t=0.
inline FilterEvaluation filter_const(double eta, double t, double lambda) {
    detail::check_overdamped(eta, lambda);
    if (!(t >= 0.0)) throw std::invalid_argument("filter_const: t must be >= 0");

    FilterEvaluation fe;
    fe.t = t;
    fe.lambda = lambda;
    if (lambda == 0.0) {
        fe.g_value = t / eta + std::expm1(-eta * t) / (eta * eta);
        fe.phi_value = -std::expm1(-eta * t) / eta;
        return fe;
    }
    const double d = std::sqrt(eta * eta - 4.0 * lambda);
    const double l1 = 0.5 * (eta + d);
    const double l2 = 0.5 * (eta - d);
    fe.g_value = (l1 * (-std::expm1(-l2 * t)) - l2 * (-std::expm1(-l1 * t))) / (lambda * d);
    fe.phi_value = std::exp(-l2 * t) * (-std::expm1(-d * t)) / d;
    return fe;
}

/// Closed-form filter of the dynamic-damping flow eta(t) = (1+2s)/t:
/// g2(t, lambda) = (1 - m(sqrt(lambda) t)) / lambda with
/// m(z) = 2^s Gamma(s+1) J_s(z) / z^s. Small arguments (z < 0.1, including
/// lambda = 0) switch to the ascending series of the same quantity, whose
/// leading term is t^2 / (4(s+1)).
inline double filter_dynamic(double s, double t, double lambda) {
    if (!(s >= 1.0)) throw std::invalid_argument("filter_dynamic: s must be >= 1");
    if (!(t >= 1.0)) throw std::invalid_argument("filter_dynamic: t must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("filter_dynamic: lambda must be >= 0");

    const double z = std::sqrt(lambda) * t;
    if (z < 0.1) {
        const double w = lambda * t * t / 4.0;
        double term = 1.0 / (s + 1.0);
        double sum = term;
        for (int j = 2; j <= 60; ++j) {
            term *= -w / (static_cast<double>(j) * (s + static_cast<double>(j)));
            sum += term;
            if (std::fabs(term) <= 1e-18 * std::fabs(sum)) break;
        }
        return t * t / 4.0 * sum;
    }
    const double m = std::pow(2.0, s) * gamma_fn(s + 1.0) * bessel_j(s, z) / std::pow(z, s);
    return (1.0 - m) / lambda;
}

/// Minimum-norm least-squares solution via the SVD, summing only over
/// singular values above the rank tolerance. A zero-rank matrix yields the
/// zero vector and sets *zero_rank when provided.
inline Vector quasi_solution(const Matrix& a, const Vector& b, bool* zero_rank = nullptr) {
    if (b.size() != a.rows()) throw std::invalid_argument("quasi_solution: dimension mismatch");
    const SvdFactors f = svd(a);
    if (zero_rank) *zero_rank = (f.rank == 0);
    Vector x(a.cols(), 0.0);
    for (std::size_t i = 0; i < f.rank; ++i) {
        double ub = 0.0;
        for (std::size_t r = 0; r < a.rows(); ++r) ub += f.u(r, i) * b[r];
        const double c = ub / f.sigma[i];
        for (std::size_t c_i = 0; c_i < a.cols(); ++c_i) x[c_i] += c * f.v(c_i, i);
    }
    return x;
}

/// Exact solution of the constant-damping flow at time t, assembled in the
/// SVD basis; requires the strictly overdamped regime eta > 2 sigma_1. The
/// component of (x0, xdot0) orthogonal to the row space evolves by the
/// force-free lambda = 0 flow.
inline Vector flow_solution_const(const Matrix& a, const Vector& b, const Vector& x0,
                                  const Vector& xdot0, double eta, double t) {
    const std::size_t n = a.cols();
    if (b.size() != a.rows() || x0.size() != n || xdot0.size() != n)
        throw std::invalid_argument("flow_solution_const: dimension mismatch");
    if (!(t >= 0.0)) throw std::invalid_argument("flow_solution_const: t must be >= 0");

    const SvdFactors f = svd(a);
    const double sigma1 = f.rank > 0 ? f.sigma[0] : 0.0;
    if (!(eta > 2.0 * sigma1))
        throw std::invalid_argument("flow_solution_const: requires eta > 2 sigma_1");

    const std::size_t k = f.v.cols();
    const double phi0 = -std::expm1(-eta * t) / eta;

    Vector x(n, 0.0);
    Vector cx(k, 0.0), cv(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cx[i] += f.v(j, i) * x0[j];
            cv[i] += f.v(j, i) * xdot0[j];
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        double y;
        if (i < f.rank) {
            const double lambda = f.sigma[i] * f.sigma[i];
            const FilterEvaluation fe = filter_const(eta, t, lambda);
            const double survival = detail::filter_const_survival(eta, t, lambda);
            double ub = 0.0;
            for (std::size_t r = 0; r < a.rows(); ++r) ub += f.u(r, i) * b[r];
            y = survival * cx[i] + fe.phi_value * cv[i] + fe.g_value * f.sigma[i] * ub;
        } else {
            y = cx[i] + phi0 * cv[i];
        }
        for (std::size_t j = 0; j < n; ++j) x[j] += y * f.v(j, i);
    }
    // Part of R^n not spanned by the returned right singular vectors
    // (present when rows < cols): force-free evolution as above.
    for (std::size_t j = 0; j < n; ++j) {
        double px = x0[j], pv = xdot0[j];
        for (std::size_t i = 0; i < k; ++i) {
            px -= cx[i] * f.v(j, i);
            pv -= cv[i] * f.v(j, i);
        }
        x[j] += px + phi0 * pv;
    }
    return x;
}

/// Exact solution of the dynamic-damping flow (zero initial velocity) at
/// time t >= 1, assembled in the SVD basis with the g2 filter. Components
/// outside the row space are stationary.
inline Vector flow_solution_dynamic(const Matrix& a, const Vector& b, const Vector& x0, double s,
                                    double t) {
    const std::size_t n = a.cols();
    if (b.size() != a.rows() || x0.size() != n)
        throw std::invalid_argument("flow_solution_dynamic: dimension mismatch");

    const SvdFactors f = svd(a);

    Vector x = x0;
    for (std::size_t i = 0; i < f.rank; ++i) {
        double cx = 0.0, ub = 0.0;
        for (std::size_t j = 0; j < n; ++j) cx += f.v(j, i) * x0[j];
        for (std::size_t r = 0; r < a.rows(); ++r) ub += f.u(r, i) * b[r];
        const double lambda = f.sigma[i] * f.sigma[i];
        const double g2 = filter_dynamic(s, t, lambda);
        const double y = (1.0 - lambda * g2) * cx + g2 * f.sigma[i] * ub;
        for (std::size_t j = 0; j < n; ++j) x[j] += (y - cx) * f.v(j, i);
    }
    return x;
}

}  // namespace regflow
