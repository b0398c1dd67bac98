#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "regflow/linalg.hpp"
#include "regflow/rng.hpp"

namespace regflow {

/// A linear system with known exact solution, so that reconstruction error
/// can be measured. b_exact = A * x_exact by construction.
struct TestProblem {
    std::string name;
    Matrix a;
    Vector x_exact;
    Vector b_exact;
};

/// Perturbed right-hand side together with the level of the perturbation.
/// delta is the realized noise norm ||b_noisy - b_exact||; noise_level() is
/// the a priori bound delta_prime * ||b_exact|| used by discrepancy stopping
/// in the benchmarks (per-entry relative noise never exceeds delta_prime).
struct NoisyInstance {
    Vector b_noisy;
    double delta = 0.0;
    double delta_prime = 0.0;
    std::uint64_t seed = 0;
    double b_exact_norm = 0.0;

    double noise_level() const { return delta_prime * b_exact_norm; }
};

/// Discretized convolution with a Gaussian kernel on [0, 1]:
/// A_ij = h * c * exp(-((i - j) h)^2 / (2 gamma^2)), h = 1/n, exact solution
/// identically one. Severely ill-conditioned already for moderate n.
inline TestProblem gaussian_convolution_problem(std::size_t n, double gamma = 0.05,
                                                double c = 20.0) {
    if (n < 2) throw std::invalid_argument("gaussian_convolution_problem: n must be >= 2");
    if (!(gamma > 0.0)) throw std::invalid_argument("gaussian_convolution_problem: gamma must be > 0");
    if (!(c > 0.0)) throw std::invalid_argument("gaussian_convolution_problem: c must be > 0");

    TestProblem p;
    p.name = "conv";
    const double h = 1.0 / static_cast<double>(n);
    p.a = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = (static_cast<double>(i) - static_cast<double>(j)) * h;
            p.a(i, j) = h * c * std::exp(-d * d / (2.0 * gamma * gamma));
        }
    }
    p.x_exact = Vector(n, 1.0);
    p.b_exact = matvec(p.a, p.x_exact);
    return p;
}

/// Hilbert matrix A_ij = 1 / (i + j - 1) (1-based), exact solution all ones.
inline TestProblem hilbert_problem(std::size_t n) {
    if (n < 2) throw std::invalid_argument("hilbert_problem: n must be >= 2");
    TestProblem p;
    p.name = "hilbert";
    p.a = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            p.a(i, j) = 1.0 / static_cast<double>(i + j + 1);
    p.x_exact = Vector(n, 1.0);
    p.b_exact = matvec(p.a, p.x_exact);
    return p;
}

namespace detail {

/// Core of the noise model with an injectable draw sequence, so the formula
/// can be checked against degenerate generators in tests.
template <typename NextUnit>
NoisyInstance perturb_multiplicative(const Vector& b_exact, double delta_prime,
                                     std::uint64_t seed, NextUnit&& next_unit) {
    NoisyInstance inst;
    inst.delta_prime = delta_prime;
    inst.seed = seed;
    inst.b_exact_norm = norm(b_exact);
    inst.b_noisy.resize(b_exact.size());
    for (std::size_t i = 0; i < b_exact.size(); ++i) {
        const double u = next_unit();
        inst.b_noisy[i] = (1.0 + 2.0 * (u - 0.5) * delta_prime) * b_exact[i];
    }
    inst.delta = norm(subtract(inst.b_noisy, b_exact));
    return inst;
}

}  // namespace detail

/// b_noisy_i = (1 + 2 (u_i - 0.5) delta_prime) * b_exact_i with u_i drawn
/// per component from SplitMix64(seed). delta is recomputed from the draw.
inline NoisyInstance add_multiplicative_noise(const TestProblem& p, double delta_prime,
                                              std::uint64_t seed) {
    if (delta_prime < 0.0)
        throw std::invalid_argument("add_multiplicative_noise: delta_prime must be >= 0");
    SplitMix64 rng(seed);
    return detail::perturb_multiplicative(p.b_exact, delta_prime, seed,
                                          [&rng] { return rng.next_unit(); });
}

}  // namespace regflow
