#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "regflow/rng.hpp"

namespace regflow {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vector& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

/// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector scaled(const Vector& x, double alpha) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
    return y;
}

inline Vector subtract(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("subtract: size mismatch");
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

inline bool all_finite(const Vector& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

/// A * x
inline Vector matvec(const Matrix& a, const Vector& x) {
    if (x.size() != a.cols()) throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

/// A^T * x
inline Vector matvec_t(const Matrix& a, const Vector& x) {
    if (x.size() != a.rows()) throw std::invalid_argument("matvec_t: dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
    }
    return y;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// Thin SVD A = U diag(sigma) V^T with sigma nonincreasing.
/// rank counts singular values above rank_tol * sigma_max.
struct SvdFactors {
    Matrix u;       // rows(A) x k
    Vector sigma;   // k = min(rows, cols), nonincreasing
    Matrix v;       // cols(A) x k
    std::size_t rank = 0;
};

namespace detail {

inline double column_dot(const Matrix& w, std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) s += w(i, p) * w(i, q);
    return s;
}

inline void rotate_columns(Matrix& w, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double wp = w(i, p);
        const double wq = w(i, q);
        w(i, p) = c * wp - s * wq;
        w(i, q) = s * wp + c * wq;
    }
}

/// One-sided Jacobi on the columns of w (rows >= cols); accumulates the
/// right-hand rotations in v. Returns the number of sweeps used.
inline std::size_t jacobi_orthogonalize(Matrix& w, Matrix& v) {
    constexpr std::size_t max_sweeps = 60;
    constexpr double tol = 1e-14;
    const std::size_t n = w.cols();
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = column_dot(w, p, q);
                const double app = column_dot(w, p, p);
                const double aqq = column_dot(w, q, q);
                if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_columns(w, p, q, c, s);
                rotate_columns(v, p, q, c, s);
            }
        }
        if (!rotated) return sweep + 1;
    }
    throw std::runtime_error("svd: Jacobi iteration did not converge after " +
                             std::to_string(max_sweeps) + " sweeps");
}

/// Replaces column j of u with a unit vector orthogonal to columns [0, j).
/// Used for directions whose singular value is too small to define one.
inline void complete_column(Matrix& u, std::size_t j) {
    const std::size_t m = u.rows();
    for (std::size_t attempt = 0; attempt < m; ++attempt) {
        Vector cand(m, 0.0);
        cand[(j + attempt) % m] = 1.0;
        for (std::size_t c = 0; c < j; ++c) {
            double proj = 0.0;
            for (std::size_t i = 0; i < m; ++i) proj += cand[i] * u(i, c);
            for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, c);
        }
        const double nrm = norm(cand);
        if (nrm > 0.5) {
            for (std::size_t i = 0; i < m; ++i) u(i, j) = cand[i] / nrm;
            return;
        }
    }
    throw std::runtime_error("svd: failed to complete an orthonormal basis");
}

}  // namespace detail

/// One-sided Jacobi SVD. Accurate for severely ill-conditioned matrices,
/// which is the regime this library exists for.
inline SvdFactors svd(const Matrix& a, double rank_tol = 1e-12) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd: empty matrix");
    for (double x : a.data())
        if (!std::isfinite(x)) throw std::invalid_argument("svd: non-finite entry");
    if (rank_tol < 0.0) throw std::invalid_argument("svd: rank_tol must be >= 0");

    const bool transposed = a.rows() < a.cols();
    Matrix w = transposed ? transpose(a) : a;
    const std::size_t k = w.cols();

    Matrix v = Matrix::identity(k);
    detail::jacobi_orthogonalize(w, v);

    Vector sigma(k);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.rows(); ++i) s += w(i, j) * w(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    SvdFactors f;
    f.u = Matrix(w.rows(), k);
    f.v = Matrix(k, k);
    f.sigma.resize(k);
    for (std::size_t jj = 0; jj < k; ++jj) {
        const std::size_t src = order[jj];
        f.sigma[jj] = sigma[src];
        for (std::size_t i = 0; i < k; ++i) f.v(i, jj) = v(i, src);
        if (sigma[src] > 0.0)
            for (std::size_t i = 0; i < w.rows(); ++i) f.u(i, jj) = w(i, src) / sigma[src];
    }
    const double smax = f.sigma.empty() ? 0.0 : f.sigma[0];
    for (std::size_t jj = 0; jj < k; ++jj)
        if (f.sigma[jj] <= smax * 1e-13 || f.sigma[jj] == 0.0) detail::complete_column(f.u, jj);

    f.rank = 0;
    for (double s : f.sigma)
        if (s > rank_tol * smax && s > 0.0) ++f.rank;

    if (transposed) std::swap(f.u, f.v);
    return f;
}

/// Largest singular value via power iteration on A^T A.
/// Deterministic start; the relative tolerance is normally reached long
/// before the 10 000 iteration cap.
inline double spectral_norm(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("spectral_norm: empty matrix");
    double amax = 0.0;
    for (double x : a.data()) {
        if (!std::isfinite(x)) throw std::invalid_argument("spectral_norm: non-finite entry");
        amax = std::max(amax, std::abs(x));
    }
    if (amax == 0.0) return 0.0;

    constexpr std::size_t max_iter = 10000;
    SplitMix64 rng(0x5eedbeefULL);
    Vector v(a.cols());
    for (std::size_t restart = 0; restart < 8; ++restart) {
        for (auto& x : v) x = rng.next_symmetric();
        const double vn = norm(v);
        if (vn == 0.0) continue;
        for (auto& x : v) x /= vn;

        double lambda_prev = 0.0;
        for (std::size_t it = 0; it < max_iter; ++it) {
            Vector w = matvec_t(a, matvec(a, v));
            const double wn = norm(w);
            if (wn == 0.0) break;  // v fell in the null space; restart
            const double lambda = dot(v, w);
            for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / wn;
            if (it > 0 && std::abs(lambda - lambda_prev) <= 1e-12 * std::abs(lambda))
                return std::sqrt(std::max(lambda, 0.0));
            lambda_prev = lambda;
        }
        if (lambda_prev > 0.0) return std::sqrt(lambda_prev);
    }
    return 0.0;
}

/// sigma_max / sigma_min with a flag for numerically singular matrices
/// (ratio still reported; it is just dominated by roundoff).
struct ConditionReport {
    double value = 0.0;
    bool numerically_singular = false;
};

inline ConditionReport condition_number(const Matrix& a, double rank_tol = 1e-12) {
    const SvdFactors f = svd(a, rank_tol);
    const double smax = f.sigma.front();
    const double smin = f.sigma.back();
    ConditionReport r;
    if (smin <= 0.0) {
        r.value = std::numeric_limits<double>::infinity();
        r.numerically_singular = true;
        return r;
    }
    r.value = smax / smin;
    r.numerically_singular = smin <= rank_tol * smax;
    return r;
}

}  // namespace regflow
