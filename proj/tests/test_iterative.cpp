#include <cmath>
#include <sstream>

#include "asv/iterative.hpp"
#include "asv/random.hpp"
#include "doctest.h"

using namespace asv;

namespace {

// (D + L)^{-1} with L the strict lower triangle of A.
Matrix gauss_seidel(const Matrix& a) {
    Matrix dl(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j <= i; ++j) dl(i, j) = a(i, j);
    return invert(dl);
}

}  // namespace

TEST_CASE("step") {
    Vector u{1.0, -2.0, 0.5};
    StationaryScheme one_shot{SymOperator{Matrix::identity(3)}, Matrix::identity(3), u};
    CHECK(norm2(step(one_shot, Vector(3, 0.0)) - u) == 0.0);

    StationaryScheme frozen{SymOperator{Matrix::identity(3)}, Matrix(3, 3), u};
    Vector u0{4.0, 4.0, 4.0};
    CHECK(norm2(step(frozen, u0) - u0) == 0.0);

    // Jacobi on tridiag(-1,2,-1), f = (1,0,1), u0 = 0 -> D^{-1} f
    StationaryScheme jacobi{SymOperator{dirichlet_laplacian_1d(3)}, 0.5 * Matrix::identity(3),
                            {1.0, 0.0, 1.0}};
    Vector u1 = step(jacobi, Vector(3, 0.0));
    CHECK(u1[0] == doctest::Approx(0.5));
    CHECK(u1[1] == doctest::Approx(0.0));
    CHECK(u1[2] == doctest::Approx(0.5));
}

TEST_CASE("step error propagation") {
    Rng rng(53);
    SymOperator a = random_spd(5, rng);
    Matrix b = random_convergent_smoother(a, rng, false);
    Vector f = random_vector(5, rng);
    StationaryScheme s{a, b, f};
    Matrix e = Matrix::identity(5) - b * a.entries();
    Vector u_exact = a.pseudo_solve(f);
    Vector u = random_vector(5, rng);
    for (int m = 0; m < 10; ++m) {
        Vector err = u_exact - u;
        Vector u_next = step(s, u);
        CHECK(norm2((u_exact - u_next) - e.apply(err)) <= 1e-12 * (1.0 + norm2(err)));
        u = u_next;
    }
}

TEST_CASE("symmetrize") {
    Rng rng(59);
    SymOperator a = random_spd(4, rng);
    Matrix b = a.inverse();
    CHECK((symmetrize(a, b).entries() - b).max_abs() <= 1e-11 * b.max_abs());

    CHECK(symmetrize(a, Matrix(4, 4)).entries().max_abs() == 0.0);

    SymOperator lap{dirichlet_laplacian_1d(3)};
    Matrix dinv = 0.5 * Matrix::identity(3);
    Matrix expect = 2.0 * dinv - dinv * lap.entries() * dinv;
    CHECK((symmetrize(lap, dinv).entries() - expect).max_abs() < 1e-14);
}

TEST_CASE("convergence_certificate, exact solver") {
    Rng rng(61);
    SymOperator a = random_spd(4, rng);
    ConvergenceCertificate c = convergence_certificate(a, a.inverse());
    CHECK(c.spectral_radius < 1e-9);
    CHECK(c.is_convergent);
    CHECK(c.identity_available);
    CHECK(std::abs(c.norm_identity_left) < 1e-10);
    CHECK(std::abs(c.norm_identity_right) < 1e-10);
}

TEST_CASE("convergence_certificate, Richardson closed form") {
    SymOperator a{dirichlet_laplacian_1d(3)};
    ConvergenceCertificate c = convergence_certificate(a, 0.25 * Matrix::identity(3));
    const double norm = (2.0 + std::sqrt(2.0)) / 4.0;
    CHECK(c.identity_available);
    CHECK(c.norm_identity_left == doctest::Approx(norm * norm).epsilon(1e-10));
    CHECK(c.norm_identity_right == doctest::Approx(norm * norm).epsilon(1e-10));
    CHECK(std::abs(c.norm_identity_left - c.norm_identity_right) <= 1e-10);
    CHECK(c.is_convergent);
}

TEST_CASE("convergence_certificate, Gauss-Seidel on a singular system") {
    SymOperator a{neumann_laplacian_1d(4)};
    Matrix b = gauss_seidel(a.entries());
    ConvergenceCertificate c = convergence_certificate(a, b);
    CHECK(c.identity_available);
    CHECK(std::abs(c.norm_identity_left - c.norm_identity_right) <=
          1e-10 * (1.0 + c.norm_identity_right));
    CHECK(c.norm_identity_left < 1.0);
    CHECK(c.is_convergent);
    CHECK(c.spectral_radius <= std::sqrt(c.norm_identity_left) + 1e-9);
}

TEST_CASE("SPD norm identity and invertibility over random instances") {
    Rng rng(67);
    for (int trial = 0; trial < 20; ++trial) {
        int dim = rng.uniform_int(3, 8);
        SymOperator a = random_spd(dim, rng);
        Matrix b = random_convergent_smoother(a, rng, trial % 2 == 0);
        ConvergenceCertificate c = convergence_certificate(a, b);
        REQUIRE(c.identity_available);
        CHECK(std::abs(c.norm_identity_left - c.norm_identity_right) <=
              1e-9 * (1.0 + std::abs(c.norm_identity_right)));
        // a convergent symmetrization certifies invertibility of B
        Vector sv = singular_values(b);
        CHECK(sv.back() > dim * 1e-16 * sv.front());
    }
}

TEST_CASE("eigenvalue reciprocity for SPD preconditioners") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        int dim = rng.uniform_int(3, 7);
        SymOperator a = random_spd(dim, rng);
        SymOperator b = random_spd(dim, rng);
        // spectrum of BA on the full space
        PencilExtremes ba = pencil_extremes(SymOperator{a.entries() * b.entries() * a.entries()},
                                            a, Subspace::full(dim));
        // sup/inf of (B^{-1} v, v) over the A-unit sphere
        PencilExtremes forms =
            pencil_extremes(SymOperator{b.inverse()}, a, Subspace::full(dim));
        CHECK(ba.lambda_min * forms.lambda_max == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(ba.lambda_max * forms.lambda_min == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("seminorm of the error operator equals its range restriction") {
    Rng rng(73);
    for (int trial = 0; trial < 10; ++trial) {
        SymOperator a = random_semi_spd(6, 2, rng);
        Matrix b = random_convergent_smoother(a, rng, false);
        Matrix e = Matrix::identity(6) - b * a.entries();
        double full_norm = operator_seminorm(e, a);

        Matrix q = a.range_basis().transpose();
        Matrix e_q = q * e * q.transpose();
        SymOperator a_q{q * a.entries() * q.transpose()};
        double restricted = operator_seminorm(e_q, a_q);
        CHECK(std::abs(full_norm - restricted) <= 1e-10 * std::max(1.0, full_norm));
    }
}

TEST_CASE("pcg trivial cases") {
    SymOperator id{Matrix::identity(3)};
    Vector f{1.0, 2.0, 3.0};
    IterationTrace t = pcg_solve(id, id, f, Vector(3, 0.0), 1e-12, -1);
    CHECK(t.converged);
    CHECK(t.iterates.size() <= 2);  // one iteration
    CHECK(norm2(t.iterates.back() - f) < 1e-12);

    SymOperator a{Matrix::diagonal({1.0, 2.0})};
    IterationTrace t2 = pcg_solve(a, SymOperator{Matrix::identity(2)}, {1.0, 1.0},
                                  Vector(2, 0.0), 1e-12, -1);
    CHECK(t2.converged);
    CHECK(t2.iterates.size() <= 3);  // two distinct eigenvalues
    CHECK(std::abs(t2.iterates.back()[0] - 1.0) < 1e-10);
    CHECK(std::abs(t2.iterates.back()[1] - 0.5) < 1e-10);
}

TEST_CASE("pcg finite termination counts distinct eigenvalues") {
    Rng rng(79);
    SymOperator a{Matrix::diagonal({1.0, 1.0, 3.0, 3.0, 3.0, 7.0})};
    Vector f = random_vector(6, rng);
    IterationTrace t = pcg_solve(a, SymOperator{Matrix::identity(6)}, f, Vector(6, 0.0),
                                 1e-12, -1);
    CHECK(t.converged);
    CHECK(static_cast<int>(t.energy_errors.size()) - 1 <= 3);
}

TEST_CASE("pcg on a singular Neumann system with the energy bound") {
    Rng rng(83);
    SymOperator a{neumann_laplacian_1d(8)};
    Vector f = a.apply(random_vector(8, rng));
    IterationTrace t = pcg_solve(a, SymOperator{Matrix::identity(8)}, f, Vector(8, 0.0),
                                 1e-12, -1);
    CHECK(t.converged);
    CHECK(t.projected_errors.back() <= 1e-9 * (1.0 + t.projected_errors.front()));

    Subspace range{8, a.range_basis()};
    PencilExtremes ext = pencil_extremes(a, SymOperator{Matrix::identity(8)}, range);
    double kappa = ext.lambda_max / ext.lambda_min;
    double rate = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);
    double factor = 1.0;
    for (std::size_t m = 0; m < t.energy_errors.size(); ++m) {
        CHECK(t.energy_errors[m] <= 2.0 * factor * t.energy_errors[0] * (1.0 + 1e-9) + 1e-13);
        factor *= rate;
    }
    // both monitored sequences vanish together
    CHECK(t.energy_errors.back() <= 1e-8 * (1.0 + t.energy_errors.front()));
}

TEST_CASE("pcg rejects data outside the range") {
    SymOperator a{neumann_laplacian_1d(4)};
    CHECK_THROWS(pcg_solve(a, SymOperator{Matrix::identity(4)}, Vector(4, 1.0), Vector(4, 0.0),
                           1e-10, -1));
    CHECK_THROWS(StationaryScheme(a, Matrix::identity(4), Vector(4, 1.0)));
}

TEST_CASE("trace CSV export") {
    SymOperator a{Matrix::diagonal({1.0, 2.0})};
    IterationTrace t = pcg_solve(a, SymOperator{Matrix::identity(2)}, {1.0, 1.0},
                                 Vector(2, 0.0), 1e-12, -1);
    std::stringstream ss;
    write_trace_csv(ss, t);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "iter,energy_error,projected_error");
    int rows = 0;
    std::string line;
    while (std::getline(ss, line)) ++rows;
    CHECK(rows == static_cast<int>(t.energy_errors.size()));
}
