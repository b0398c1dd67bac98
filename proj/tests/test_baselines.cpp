#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "regflow/baselines.hpp"
#include "regflow/problems.hpp"

using namespace regflow;
using Catch::Approx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Gaussian elimination with partial pivoting for tiny reference solves.
Vector solve_dense(Matrix m, Vector rhs) {
    const std::size_t n = m.rows();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(c, j), m(piv, j));
            std::swap(rhs[c], rhs[piv]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m(r, c) / m(c, c);
            for (std::size_t j = c; j < n; ++j) m(r, j) -= f * m(c, j);
            rhs[r] -= f * rhs[c];
        }
    }
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
        x[i] = s / m(i, i);
    }
    return x;
}

}  // namespace

TEST_CASE("landweber step and run") {
    SECTION("single step arithmetic") {
        Matrix a(1, 1);
        a(0, 0) = 2.0;
        const Vector next = landweber_step(Vector{0.0}, a, Vector{1.0}, 0.1);
        // g = A^T (b - A x) = 2 * 1; x + 0.1 * g = 0.2.
        CHECK(next[0] == Approx(0.2));

        CHECK_THROWS_AS(landweber_step(Vector{0.0}, a, Vector{1.0}, 0.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(landweber_step(Vector{0.0, 1.0}, a, Vector{1.0}, 0.1),
                        std::invalid_argument);
    }

    SECTION("solution of the system is a fixed point") {
        const Matrix a = Matrix::identity(3);
        const Vector b{1.0, -2.0, 0.5};
        const Vector next = landweber_step(b, a, b, 0.7);
        for (std::size_t i = 0; i < 3; ++i) CHECK(next[i] == Approx(b[i]));
    }

    SECTION("step size window is enforced") {
        const TestProblem p = gaussian_convolution_problem(16);
        const NoisyInstance noisy = add_multiplicative_noise(p, 0.01, 1);
        const double s1 = spectral_norm(p.a);
        const StopRule rule(1.03, noisy.noise_level(), 5000);

        CHECK_THROWS_AS(run_landweber(p, noisy, 2.0 / (s1 * s1), rule),
                        std::invalid_argument);
        CHECK_THROWS_AS(run_landweber(p, noisy, -0.1, rule), std::invalid_argument);

        const RunReport rep = run_landweber(p, noisy, 1.0 / (s1 * s1), rule, s1);
        CHECK(rep.method == "landweber");
        CHECK(rep.stopped_by == StopReason::discrepancy);
        CHECK(rep.iterN >= 1);
        // Gradient descent on the least-squares functional cannot increase
        // the residual at a stable step size.
        for (std::size_t k = 1; k < rep.residual_history.size(); ++k)
            REQUIRE(rep.residual_history[k] <= rep.residual_history[k - 1] + 1e-12);
    }
}

TEST_CASE("nu-method coefficients") {
    SECTION("closed-form anchors") {
        const auto c1 = nu_coefficients(1.0, 1);
        CHECK(c1.mu == 0.0);
        CHECK_THAT(c1.omega, WithinRel(6.0 / 5.0, 1e-15));

        const auto c2 = nu_coefficients(1.0, 2);
        CHECK_THAT(c2.mu, WithinRel(5.0 / 63.0, 1e-15));
        CHECK_THAT(c2.omega, WithinRel(40.0 / 21.0, 1e-15));

        // First gradient weight for general nu.
        for (const double nu : {0.5, 0.7, 1.5, 2.0})
            CHECK_THAT(nu_coefficients(nu, 1).omega,
                       WithinRel((4.0 * nu + 2.0) / (4.0 * nu + 1.0), 1e-15));
    }

    SECTION("ranges over a long horizon") {
        for (const double nu : {0.5, 0.7, 1.0, 1.5, 2.0}) {
            for (std::size_t k = 1; k <= 1000; ++k) {
                const auto co = nu_coefficients(nu, k);
                REQUIRE(co.mu >= 0.0);
                REQUIRE(co.mu < 1.0);
                REQUIRE(co.omega > 0.0);
                REQUIRE(co.omega < 4.0);
            }
            // Momentum saturates toward one.
            CHECK(nu_coefficients(nu, 1000).mu > 0.98);
        }
    }

    SECTION("validation") {
        CHECK_THROWS_AS(nu_coefficients(0.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(nu_coefficients(-1.0, 2), std::invalid_argument);
        CHECK_THROWS_AS(nu_coefficients(1.0, 0), std::invalid_argument);
    }
}

TEST_CASE("nu-method step and run") {
    Matrix a(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = 1.0;
    const Vector b{2.0, 1.0};

    SECTION("equal history gives a pure gradient step") {
        const Vector x{0.25, 0.5};
        const Vector got = nu_step(x, x, a, b, 1.0, 1, 0.5);
        const Vector g = matvec_t(a, subtract(b, matvec(a, x)));
        for (std::size_t i = 0; i < 2; ++i)
            CHECK_THAT(got[i], WithinAbs(x[i] + 0.5 * (6.0 / 5.0) * g[i], 1e-15));
    }

    SECTION("run matches a hand-rolled recurrence") {
        TestProblem p;
        p.name = "diag";
        p.a = a;
        p.x_exact = Vector{1.0, 1.0};
        p.b_exact = b;
        NoisyInstance noisy;
        noisy.b_noisy = b;
        noisy.delta_prime = 0.0;
        noisy.b_exact_norm = norm(b);

        const double w = 0.2;
        const RunReport rep = run_nu(p, noisy, 1.0, StopRule(1.03, 0.0, 3), w);
        REQUIRE(rep.iterN == 3);
        CHECK(rep.stopped_by == StopReason::max_iter);
        CHECK(rep.method == "nu");

        // Iterate j is produced with coefficients (mu_j, omega_j).
        Vector prev{0.0, 0.0};
        Vector cur{0.0, 0.0};
        for (std::size_t j = 1; j <= 3; ++j) {
            const auto co = nu_coefficients(1.0, j);
            const Vector g = matvec_t(a, subtract(b, matvec(a, cur)));
            Vector next(2);
            for (std::size_t i = 0; i < 2; ++i)
                next[i] = cur[i] + co.mu * (cur[i] - prev[i]) + w * co.omega * g[i];
            prev = cur;
            cur = next;
        }
        for (std::size_t i = 0; i < 2; ++i)
            REQUIRE_THAT(rep.final_x[i], WithinAbs(cur[i], 1e-14));
    }

    SECTION("validation") {
        const Vector x{0.0, 0.0};
        CHECK_THROWS_AS(nu_step(x, x, a, b, 1.0, 1, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(nu_step(Vector{0.0}, x, a, b, 1.0, 1, 1.0), std::invalid_argument);
    }
}

TEST_CASE("nesterov step and run") {
    SECTION("momentum factor at k = 5 with alpha = 3") {
        // Zero operator isolates the momentum arithmetic: factor is
        // (k - 1) / (k + alpha - 1) = 4/7.
        const Matrix a(2, 2);
        const Vector b{0.0, 0.0};
        const NesterovConfig cfg{3.0, 0.3};
        const Vector got = nesterov_step(Vector{0.0, 0.0}, Vector{1.0, 2.0}, a, b, cfg, 5);
        CHECK_THAT(got[0], WithinRel(1.0 + 4.0 / 7.0, 1e-15));
        CHECK_THAT(got[1], WithinRel(2.0 * (1.0 + 4.0 / 7.0), 1e-15));
    }

    SECTION("equal history cancels the negative factor at k = 0") {
        Matrix a(1, 1);
        a(0, 0) = 1.0;
        const Vector b{1.0};
        const NesterovConfig cfg{3.0, 0.5};
        const Vector got = nesterov_step(Vector{0.2}, Vector{0.2}, a, b, cfg, 0);
        CHECK(got[0] == Approx(0.2 + 0.5 * 0.8));
    }

    SECTION("run on the convolution benchmark") {
        const TestProblem p = gaussian_convolution_problem(20);
        const NoisyInstance noisy = add_multiplicative_noise(p, 0.01, 2);
        const double s1 = spectral_norm(p.a);
        const StopRule rule(1.03, noisy.noise_level(), 5000);

        const RunReport rep = run_nesterov(p, noisy, {3.0, 1.0 / (s1 * s1)}, rule);
        CHECK(rep.method == "nesterov");
        CHECK(rep.stopped_by == StopReason::discrepancy);
        CHECK(rep.iterN >= 1);
        CHECK(rep.l2err < 0.5);

        CHECK_THROWS_AS(run_nesterov(p, noisy, {2.9, 0.1}, rule), std::invalid_argument);
        CHECK_THROWS_AS(run_nesterov(p, noisy, {3.0, 0.0}, rule), std::invalid_argument);
    }
}

TEST_CASE("cgls solver") {
    SECTION("identity system solves in one step") {
        const Matrix a = Matrix::identity(3);
        const Vector b{1.0, 2.0, 3.0};
        const RunReport rep = cgls_run(a, b, StopRule(1.0, 1e-12));
        CHECK(rep.iterN == 1);
        CHECK(rep.stopped_by == StopReason::discrepancy);
        for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(rep.final_x[i], WithinRel(b[i], 1e-12));
    }

    SECTION("rectangular least squares against a direct normal solve") {
        Matrix a(4, 3);
        const double entries[4][3] = {
            {1.0, 2.0, 0.0}, {0.0, 1.0, -1.0}, {2.0, 0.0, 1.0}, {1.0, 1.0, 1.0}};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 3; ++j) a(i, j) = entries[i][j];
        const Vector b{1.0, 0.5, -1.0, 2.0};

        // b is not in the range of a, so the residual floor is positive;
        // stop on the iteration cap after n = 3 steps (exact termination).
        const RunReport rep = cgls_run(a, b, StopRule(1.0, 0.0, 3));
        CHECK(rep.stopped_by == StopReason::max_iter);

        Matrix ata(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                double s = 0.0;
                for (std::size_t r = 0; r < 4; ++r) s += a(r, i) * a(r, j);
                ata(i, j) = s;
            }
        const Vector x_ref = solve_dense(ata, matvec_t(a, b));
        for (std::size_t i = 0; i < 3; ++i)
            REQUIRE_THAT(rep.final_x[i], WithinAbs(x_ref[i], 1e-10));
    }

    SECTION("residual never increases") {
        const TestProblem p = gaussian_convolution_problem(20);
        const NoisyInstance noisy = add_multiplicative_noise(p, 0.01, 4);
        const RunReport rep = run_cgls(p, noisy, StopRule(1.03, noisy.noise_level(), 5000));
        CHECK(rep.method == "cg");
        CHECK(rep.stopped_by == StopReason::discrepancy);
        for (std::size_t k = 1; k < rep.residual_history.size(); ++k)
            REQUIRE(rep.residual_history[k] <= rep.residual_history[k - 1] + 1e-12);
    }

    SECTION("breakdown when the normal residual starts at zero") {
        // b is orthogonal to the range of a, so s = A^T r = 0 immediately.
        Matrix a(2, 2);
        a(0, 0) = 1.0;
        const Vector b{0.0, 1.0};
        const RunReport rep = cgls_run(a, b, StopRule(1.0, 1e-12));
        CHECK(rep.iterN == 0);
        CHECK(rep.stopped_by == StopReason::max_iter);
        REQUIRE(rep.params.count("breakdown") == 1);
        CHECK(rep.params.at("breakdown") == "true");
        CHECK(rep.final_x == Vector{0.0, 0.0});
    }

    SECTION("breakdown flag is not raised on normal runs") {
        const Matrix a = Matrix::identity(2);
        const RunReport rep = cgls_run(a, Vector{1.0, 1.0}, StopRule(1.0, 1e-12));
        CHECK(rep.params.count("breakdown") == 0);
    }

    SECTION("solver object validation and state") {
        const Matrix a = Matrix::identity(2);
        CHECK_THROWS_AS(CglsSolver(a, Vector{1.0, 1.0}, Vector{0.0}), std::invalid_argument);

        CglsSolver s(a, Vector{1.0, 1.0}, Vector{0.0, 0.0});
        CHECK_FALSE(s.broke_down());
        REQUIRE(s.step());
        CHECK_THAT(s.x()[0], WithinRel(1.0, 1e-12));
        // Exact solution reached: the next step degenerates.
        CHECK_FALSE(s.step());
        CHECK(s.broke_down());
    }
}
