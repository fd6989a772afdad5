#include "asv/iterative.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace asv {

namespace {

// f must lie in R(A) up to the null threshold.
void check_rhs_in_range(const SymOperator& a, const Vector& f) {
    const Matrix nb = a.null_basis();
    const double nf = norm2(f);
    for (int j = 0; j < nb.cols(); ++j) {
        if (std::abs(dot(nb.column(j), f)) > 1e3 * a.null_threshold() * std::max(1.0, nf))
            throw std::invalid_argument("right-hand side is not in the range of A");
    }
}

}  // namespace

StationaryScheme::StationaryScheme(SymOperator a_in, Matrix b_in, Vector f_in)
    : a(std::move(a_in)), b(std::move(b_in)), f(std::move(f_in)) {
    if (b.rows() != a.dim() || b.cols() != a.dim() || static_cast<int>(f.size()) != a.dim())
        throw std::invalid_argument("StationaryScheme: dimension mismatch");
    if (!a.is_semi_spd()) throw std::invalid_argument("StationaryScheme: A is not semi-SPD");
    check_rhs_in_range(a, f);
}

Vector step(const StationaryScheme& s, const Vector& u) {
    if (u.size() != s.f.size()) throw std::invalid_argument("step: dimension mismatch");
    const Vector r = s.f - s.a.apply(u);
    return u + s.b.apply(r);
}

SymOperator symmetrize(const SymOperator& a, const Matrix& b) {
    if (b.rows() != a.dim() || b.cols() != a.dim())
        throw std::invalid_argument("symmetrize: dimension mismatch");
    const Matrix bt = b.transpose();
    return SymOperator{b + bt - bt * a.entries() * b};
}

ConvergenceCertificate convergence_certificate(const SymOperator& a, const Matrix& b) {
    if (!a.is_semi_spd()) throw std::invalid_argument("convergence_certificate: A not semi-SPD");
    const Matrix e = Matrix::identity(a.dim()) - b * a.entries();
    const Matrix q = a.range_basis().transpose();  // rank x dim
    const Matrix e_q = q * e * q.transpose();

    ConvergenceCertificate cert{};
    cert.spectral_radius = spectral_radius(e_q);
    cert.norm_identity_left = 0.0;
    cert.norm_identity_right = 0.0;

    const double left = operator_seminorm(e, a);
    cert.norm_identity_left = left * left;

    const SymOperator bbar = symmetrize(a, b);
    const SymOperator bbar_q{q * bbar.entries() * q.transpose()};
    cert.identity_available = bbar_q.is_spd();
    if (cert.identity_available) {
        const SymOperator a_q{q * a.entries() * q.transpose()};
        const PencilExtremes ext =
            pencil_extremes(SymOperator{bbar_q.inverse()}, a_q, Subspace::full(a_q.dim()));
        cert.norm_identity_right = 1.0 - 1.0 / ext.lambda_max;
        cert.is_convergent = cert.norm_identity_left < 1.0;
    } else {
        cert.is_convergent = cert.spectral_radius < 1.0;
    }
    return cert;
}

IterationTrace pcg_solve(const SymOperator& a, const SymOperator& b, const Vector& f,
                         const Vector& u0, double tol, int max_iter) {
    if (b.dim() != a.dim() || static_cast<int>(f.size()) != a.dim() ||
        static_cast<int>(u0.size()) != a.dim())
        throw std::invalid_argument("pcg_solve: dimension mismatch");
    if (!a.is_semi_spd()) throw std::invalid_argument("pcg_solve: A is not semi-SPD");
    check_rhs_in_range(a, f);
    if (max_iter < 0) max_iter = 10 * a.dim();

    const Matrix q = a.range_basis().transpose();
    const SymOperator b_q{q * b.entries() * q.transpose()};
    if (!b_q.is_spd()) throw std::runtime_error("pcg_solve: preconditioner is not SPD on R(A)");

    const Vector u_ref = a.pseudo_solve(f);  // minimum-norm reference solution

    IterationTrace trace;
    auto record = [&](const Vector& u) {
        trace.iterates.push_back(u);
        const Vector e = u_ref - u;
        trace.energy_errors.push_back(seminorm(a, e));
        trace.projected_errors.push_back(norm2(q.apply(e)));
    };

    Vector u = u0;
    Vector r = f - a.apply(u);
    Vector p = b.apply(r);
    record(u);
    const double r0_proj = norm2(q.apply(r));
    if (r0_proj == 0.0) {
        trace.converged = true;
        return trace;
    }
    double brr = dot(b.apply(r), r);
    for (int m = 0; m < max_iter; ++m) {
        const Vector ap = a.apply(p);
        const double pap = dot(ap, p);
        if (pap <= a.null_threshold() * dot(p, p)) {
            trace.breakdown_at = m;
            return trace;
        }
        const double alpha = dot(r, r) / pap;
        axpy(alpha, p, u);
        axpy(-alpha, ap, r);
        record(u);
        if (norm2(q.apply(r)) <= tol * r0_proj) {
            trace.converged = true;
            return trace;
        }
        const Vector br = b.apply(r);
        const double brr_new = dot(br, r);
        if (brr_new <= 0.0) throw std::runtime_error("pcg_solve: (Br, r) <= 0, B not SPD");
        const double beta = brr_new / brr;
        brr = brr_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = br[i] + beta * p[i];
    }
    return trace;
}

void write_trace_csv(std::ostream& os, const IterationTrace& trace) {
    os << "iter,energy_error,projected_error\n";
    char buf[128];
    for (std::size_t m = 0; m < trace.energy_errors.size(); ++m) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", m, trace.energy_errors[m],
                      trace.projected_errors[m]);
        os << buf;
    }
}

}  // namespace asv
