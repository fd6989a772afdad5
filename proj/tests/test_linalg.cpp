#include <cmath>
#include <sstream>

#include "asv/constrained.hpp"
#include "asv/eig.hpp"
#include "asv/random.hpp"
#include "asv/sym_operator.hpp"
#include "doctest.h"

using namespace asv;

TEST_CASE("eig_sym reconstructs the input matrix") {
    Rng rng(42);
    for (int dim : {1, 2, 5, 9}) {
        Matrix g = random_matrix(dim, dim, rng);
        Matrix m = g + g.transpose();
        EigenSym e = eig_sym(m);
        Matrix rec(dim, dim);
        for (int k = 0; k < dim; ++k) {
            Vector u = e.vectors.column(k);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) rec(i, j) += e.values[k] * u[i] * u[j];
        }
        double lmax = std::abs(e.values.front());
        for (double v : e.values) lmax = std::max(lmax, std::abs(v));
        CHECK((rec - m).max_abs() <= 1e-12 * (1.0 + lmax));
        // orthonormality
        CHECK((e.vectors.transpose() * e.vectors - Matrix::identity(dim)).max_abs() < 1e-13);
        // sorted nonincreasing
        for (int k = 1; k < dim; ++k) CHECK(e.values[k - 1] >= e.values[k]);
    }
}

TEST_CASE("singular values match the Gram spectrum") {
    Rng rng(7);
    Matrix m = random_matrix(3, 6, rng);
    Vector sv = singular_values(m);
    Vector lam = eig_sym(m * m.transpose()).values;
    REQUIRE(sv.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(sv[k] == doctest::Approx(std::sqrt(lam[k])).epsilon(1e-12));
}

TEST_CASE("spectral radius of simple operators") {
    Matrix d = Matrix::diagonal({0.9, -0.3, 0.5});
    CHECK(spectral_radius(d) == doctest::Approx(0.9).epsilon(1e-9));
    Matrix nilpotent(2, 2);
    nilpotent(0, 1) = 3.0;
    CHECK(spectral_radius(nilpotent) == doctest::Approx(0.0).epsilon(1e-9));
    // rotation-like block: complex pair of modulus sqrt(2)
    Matrix rot(2, 2);
    rot(0, 0) = 1.0;
    rot(0, 1) = -1.0;
    rot(1, 0) = 1.0;
    rot(1, 1) = 1.0;
    CHECK(spectral_radius(rot) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("seminorm") {
    SymOperator t01{Matrix::diagonal({0.0, 1.0})};
    CHECK(seminorm(t01, {5.0, 2.0}) == doctest::Approx(2.0));
    SymOperator id3{Matrix::identity(3)};
    CHECK(seminorm(id3, {1.0, 2.0, 2.0}) == doctest::Approx(3.0));

    Rng rng(7);
    SymOperator t = random_spd(4, rng);
    Vector ones(4, 1.0);
    double direct = std::sqrt(dot(t.entries().apply(ones), ones));
    CHECK(seminorm(t, ones) == doctest::Approx(direct).epsilon(1e-14));

    CHECK_THROWS(seminorm(t01, {1.0, 2.0, 3.0}));
}

TEST_CASE("seminorm is invariant under null shifts") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        SymOperator t = random_semi_spd(6, 2, rng);
        Vector v = random_vector(6, rng);
        Matrix nb = t.null_basis();
        REQUIRE(nb.cols() == 2);
        double base = seminorm(t, v);
        for (int j = 0; j < nb.cols(); ++j) {
            Vector shifted = v + nb.column(j);
            CHECK(std::abs(seminorm(t, shifted) - base) <= 1e-10 * (1.0 + norm2(v)));
        }
    }
}

TEST_CASE("operator seminorm") {
    Rng rng(5);
    SymOperator t = random_spd(4, rng);
    CHECK(operator_seminorm(Matrix::identity(4), t) == doctest::Approx(1.0).epsilon(1e-12));

    // Richardson on tridiag(-1,2,-1), dim 3: eigenvalues 2 -+ sqrt(2), 2.
    SymOperator a{dirichlet_laplacian_1d(3)};
    Matrix s = Matrix::identity(3) - 0.25 * a.entries();
    CHECK(operator_seminorm(s, a) == doctest::Approx((2.0 + std::sqrt(2.0)) / 4.0).epsilon(1e-12));

    // S annihilates R(T).
    SymOperator t10{Matrix::diagonal({1.0, 0.0})};
    CHECK(operator_seminorm(Matrix::diagonal({0.0, 3.7}), t10) == doctest::Approx(0.0));

    // precondition violated: S smears the null direction into R(T)
    Matrix bad(2, 2);
    bad(0, 1) = 1.0;
    CHECK_THROWS(operator_seminorm(bad, t10));
}

TEST_CASE("operator seminorm is basis independent") {
    Rng rng(11);
    SymOperator t = random_semi_spd(5, 1, rng);
    Matrix g = random_matrix(5, 5, rng);
    Matrix s = Matrix::identity(5) - 0.05 * (t.entries() * g.transpose() * g * t.entries());
    // S = I - c*A*G'GA keeps N(T) fixed, so the seminorm is defined.
    double v1 = operator_seminorm(s, t);

    // Recompute with a rotated orthonormal basis of R(T).
    Matrix p = t.range_basis();
    EigenSym rot = eig_sym(random_spd(p.cols(), rng).entries());
    Matrix p2 = p * rot.vectors;
    Matrix sp = s * p2;
    Vector ev = eig_pencil(sp.transpose() * t.entries() * sp, p2.transpose() * t.entries() * p2);
    double v2 = std::sqrt(std::max(0.0, ev.front()));
    CHECK(std::abs(v1 - v2) <= 1e-10 * std::max(1.0, v1));
}

TEST_CASE("range/null split") {
    SymOperator d20{Matrix::diagonal({2.0, 0.0})};
    RangeNullSplit s = range_null_split(d20);
    CHECK(s.range.dim() == 1);
    CHECK(std::abs(std::abs(s.range.basis()(0, 0)) - 1.0) < 1e-14);
    CHECK(s.null_space.dim() == 1);
    CHECK(std::abs(std::abs(s.null_space.basis()(1, 0)) - 1.0) < 1e-14);
    CHECK(s.q.rows() == 1);

    SymOperator id4{Matrix::identity(4)};
    RangeNullSplit s2 = range_null_split(id4);
    CHECK(s2.null_space.dim() == 0);
    CHECK((s2.q.entries() * s2.q.entries().transpose() - Matrix::identity(4)).max_abs() < 1e-12);

    // 1D Neumann Laplacian: constants span the kernel.
    SymOperator nl{neumann_laplacian_1d(5)};
    Vector ones(5, 1.0);
    CHECK(norm2(nl.apply(ones)) < 1e-14);
    RangeNullSplit s3 = range_null_split(nl);
    REQUIRE(s3.null_space.dim() == 1);
    Vector nb = s3.null_space.basis().column(0);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(nb[i]) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("range/null split invariants") {
    Rng rng(19);
    for (int trial = 0; trial < 5; ++trial) {
        SymOperator a = random_semi_spd(7, 2, rng);
        RangeNullSplit s = range_null_split(a);
        const Matrix& q = s.q.entries();
        CHECK((q * q.transpose() - Matrix::identity(q.rows())).max_abs() < 1e-12);
        Matrix proj = q.transpose() * q;
        CHECK((a.entries() * proj - a.entries()).max_abs() <= 1e-12 * a.lambda_max());
    }
}

TEST_CASE("constrained_inf basic cases") {
    SymOperator id2{Matrix::identity(2)};
    LinearMap c_id{Matrix::identity(2)};
    Vector v{3.0, -1.0};
    ConstrainedMin r = constrained_inf(id2, c_id, v);
    CHECK(r.value == doctest::Approx(dot(v, v)).epsilon(1e-13));
    CHECK(norm2(r.minimizer - v) < 1e-12);

    Matrix c(1, 2);
    c(0, 0) = 1.0;
    c(0, 1) = 1.0;
    ConstrainedMin r2 = constrained_inf(id2, LinearMap{c}, {1.0});
    CHECK(r2.value == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(r2.minimizer[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r2.minimizer[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("constrained_inf matches the closed form") {
    // random seed 11, C: 5 -> 3 surjective
    Rng rng(11);
    LinearMap c = random_surjective(3, 5, rng);
    SymOperator bt = random_spd(5, rng);
    Vector v = random_vector(3, rng);
    ConstrainedMin r = constrained_inf(bt, c, v);
    Matrix closed = invert(c.entries() * bt.entries() * c.entries().transpose());
    double expect = dot(closed.apply(v), v);
    CHECK(std::abs(r.value - expect) <= 1e-10 * std::abs(expect));
    CHECK(norm2(c.apply(r.minimizer) - v) < 1e-10 * (1.0 + norm2(v)));
}

TEST_CASE("constrained_inf closed-form property over 100 draws") {
    Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        int cols = rng.uniform_int(3, 8);
        int rows = rng.uniform_int(1, cols - 1);
        LinearMap c = random_surjective(rows, cols, rng);
        SymOperator bt = random_spd(cols, rng);
        Vector v = random_vector(rows, rng);
        ConstrainedMin r = constrained_inf(bt, c, v);
        Matrix closed = invert(c.entries() * bt.entries() * c.entries().transpose());
        double expect = dot(closed.apply(v), v);
        CHECK(std::abs(r.value - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
    }
}

TEST_CASE("constrained_inf rejects bad inputs") {
    Rng rng(2);
    SymOperator bt = random_spd(3, rng);
    Matrix tall(4, 3);
    CHECK_THROWS(constrained_inf(bt, LinearMap{tall}, {1, 2, 3, 4}));
    SymOperator semi = random_semi_spd(3, 1, rng);
    CHECK_THROWS(constrained_inf(semi, LinearMap{Matrix::identity(3)}, {1, 2, 3}));
}

TEST_CASE("pencil extremes") {
    Rng rng(13);
    SymOperator t = random_spd(4, rng);
    PencilExtremes e = pencil_extremes(t, t, Subspace::full(4));
    CHECK(e.lambda_min == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(e.lambda_max == doctest::Approx(1.0).epsilon(1e-11));

    PencilExtremes e2 = pencil_extremes(SymOperator{Matrix::diagonal({1.0, 4.0})},
                                        SymOperator{Matrix::identity(2)}, Subspace::full(2));
    CHECK(e2.lambda_min == doctest::Approx(1.0));
    CHECK(e2.lambda_max == doctest::Approx(4.0));

    // Jacobi symmetrization pencil on tridiag(-1,2,-1), dim 4, matches the
    // dense eigen oracle on D^{-1/2} A D^{-1/2}.
    SymOperator a{dirichlet_laplacian_1d(4)};
    Matrix dinv = 0.5 * Matrix::identity(4);
    SymOperator ada{a.entries() * dinv * a.entries()};
    PencilExtremes e3 = pencil_extremes(ada, a, Subspace::full(4));
    Vector oracle = eig_sym(0.5 * a.entries()).values;  // D^{-1/2} A D^{-1/2} = A/2
    CHECK(e3.lambda_max == doctest::Approx(oracle.front()).epsilon(1e-11));
    CHECK(e3.lambda_min == doctest::Approx(oracle.back()).epsilon(1e-11));
}

TEST_CASE("matrix text format round trip") {
    Rng rng(23);
    Matrix m = random_matrix(4, 7, rng);
    std::stringstream ss;
    save_matrix(ss, m);
    Matrix back = load_matrix(ss);
    REQUIRE(back.rows() == 4);
    REQUIRE(back.cols() == 7);
    CHECK((back - m).max_abs() == 0.0);  // 17 significant digits is lossless
}

TEST_CASE("SymOperator classification") {
    Rng rng(31);
    CHECK(random_spd(5, rng).is_spd());
    SymOperator semi = random_semi_spd(5, 2, rng);
    CHECK(semi.is_semi_spd());
    CHECK(!semi.is_spd());
    CHECK(semi.rank() == 3);
    Matrix indef = Matrix::diagonal({1.0, -1.0});
    CHECK(!SymOperator{indef}.is_semi_spd());
    CHECK(SymOperator{Matrix(3, 3)}.is_zero());
}

TEST_CASE("LinearMap surjectivity certificate") {
    Rng rng(37);
    CHECK(random_surjective(3, 5, rng).is_surjective());
    Matrix rank_deficient(2, 4);
    for (int j = 0; j < 4; ++j) {
        rank_deficient(0, j) = j + 1.0;
        rank_deficient(1, j) = 2.0 * (j + 1.0);
    }
    CHECK(!LinearMap{rank_deficient}.is_surjective());
}
