#include "asv/auxspace.hpp"

#include <cmath>
#include <stdexcept>

namespace asv {

AuxSystem make_aux_system(SymOperator a, LinearMap pi, Matrix bt) {
    if (pi.rows() != a.dim()) throw std::invalid_argument("make_aux_system: Pi/A dimension mismatch");
    if (bt.rows() != pi.cols() || bt.cols() != pi.cols())
        throw std::invalid_argument("make_aux_system: Bt must be square on the auxiliary space");
    if (!pi.is_surjective()) throw std::invalid_argument("make_aux_system: Pi is not surjective");
    if (!a.is_semi_spd()) throw std::invalid_argument("make_aux_system: A is not semi-SPD");

    SymOperator a_tilde{pi.entries().transpose() * a.entries() * pi.entries()};

    // N(At) must contain N(Pi).
    const Matrix pi_null = SymOperator{pi.entries().transpose() * pi.entries()}.null_basis();
    const double scale = a.lambda_max() * pi.sigma_max() * pi.sigma_max();
    for (int j = 0; j < pi_null.cols(); ++j) {
        if (norm2(a_tilde.apply(pi_null.column(j))) > 1e-10 * std::max(1.0, scale))
            throw std::logic_error("make_aux_system: N(Pi) escapes N(At)");
    }
    return AuxSystem{std::move(a), std::move(pi), std::move(bt), std::move(a_tilde)};
}

RestrictedAux make_restricted(const AuxSystem& aux, Subspace w) {
    if (w.ambient_dim() != aux.dim_vt())
        throw std::invalid_argument("make_restricted: subspace lives in the wrong space");
    // W must contain R(At).
    const Matrix range = aux.a_tilde.range_basis();
    const Matrix& wb = w.basis();
    for (int j = 0; j < range.cols(); ++j) {
        Vector v = range.column(j);
        const Vector coeff = wb.apply_transpose(v);
        axpy(-1.0, wb.apply(coeff), v);
        if (norm2(v) > 1e2 * aux.a_tilde.null_threshold() + 1e-12)
            throw std::invalid_argument("make_restricted: W does not contain the range of At");
    }
    LinearMap qt{wb.transpose()};
    return RestrictedAux{std::move(w), std::move(qt)};
}

RestrictedAux full_restriction(const AuxSystem& aux) {
    return make_restricted(aux, Subspace::full(aux.dim_vt()));
}

RestrictedAux range_restriction(const AuxSystem& aux) {
    return make_restricted(aux, Subspace{aux.dim_vt(), aux.a_tilde.range_basis()});
}

Matrix compose(const AuxSystem& aux) {
    return aux.pi.entries() * aux.bt * aux.pi.entries().transpose();
}

LiftedTraces lift_iterates(const AuxSystem& aux, const Vector& f, const Vector& u0, int steps) {
    if (static_cast<int>(f.size()) != aux.dim_v() || static_cast<int>(u0.size()) != aux.dim_v())
        throw std::invalid_argument("lift_iterates: dimension mismatch");
    const Matrix& p = aux.pi.entries();
    const Matrix b = compose(aux);
    const Vector f_tilde = p.apply_transpose(f);
    // Minimum-norm preimage map Pi^t (Pi Pi^t)^{-1}.
    const Matrix preimage = p.transpose() * SymOperator{p * p.transpose()}.inverse();

    LiftedTraces out;
    Vector u = u0;
    Vector ubar = preimage.apply(u);    // per-step preimage of u^m
    Vector drift(aux.dim_vt(), 0.0);    // accumulated N(Pi) corrections
    out.trace_v.push_back(u);
    out.trace_vt.push_back(ubar);
    for (int m = 0; m < steps; ++m) {
        const Vector bt_step = aux.bt.apply(f_tilde - aux.a_tilde.apply(ubar));
        u = u + b.apply(f - aux.a.apply(u));
        const Vector ubar_next = preimage.apply(u);
        // phi^{m+1} = ubar^{m+1} - ubar^m - Bt(f~ - At ubar^m), an N(Pi) element.
        drift = drift + (ubar_next - ubar - bt_step);
        ubar = ubar_next;
        out.trace_v.push_back(u);
        out.trace_vt.push_back(ubar - drift);
    }
    return out;
}

PencilExtremes lift_pencil(const SymOperator& a, const LinearMap& pi, const LinearMap& qt,
                           const SymOperator& t_w) {
    if (!t_w.is_spd()) throw std::invalid_argument("lift_pencil: operator is not SPD on W");
    const RangeNullSplit split = range_null_split(a);
    const Matrix constraint = split.q.entries() * pi.entries() * qt.entries().transpose();
    ConstrainedQuadraticForm form{t_w.inverse(), constraint};
    const SymOperator a_q{split.q.entries() * a.entries() * split.q.entries().transpose()};
    return pencil_extremes(SymOperator{form.schur_form()}, a_q, Subspace::full(a_q.dim()));
}

namespace {

RestrictedAux resolve(const AuxSystem& aux, const std::optional<RestrictedAux>& restricted) {
    return restricted ? *restricted : full_restriction(aux);
}

}  // namespace

IdentityRecord identity_error_norm(const AuxSystem& aux,
                                   const std::optional<RestrictedAux>& restricted) {
    const RestrictedAux r = resolve(aux, restricted);
    // Symmetrize on the auxiliary space first, then project onto W.
    const Matrix& bt = aux.bt;
    const Matrix bbar = bt + bt.transpose() - bt.transpose() * aux.a_tilde.entries() * bt;
    const SymOperator bbar_w{r.qt.entries() * bbar * r.qt.entries().transpose()};
    if (!bbar_w.is_spd())
        throw std::invalid_argument("identity_error_norm: symmetrized operator is not SPD on W");

    IdentityRecord rec;
    const Matrix err = Matrix::identity(aux.dim_v()) - compose(aux) * aux.a.entries();
    const double s = operator_seminorm(err, aux.a);
    rec.lhs = s * s;
    const PencilExtremes ext = lift_pencil(aux.a, aux.pi, r.qt, bbar_w);
    rec.rhs = 1.0 - 1.0 / ext.lambda_max;
    rec.pass = std::abs(rec.lhs - rec.rhs) <= 1e-8 * (1.0 + std::abs(rec.rhs));
    return rec;
}

IdentityEigs identity_eigs(const AuxSystem& aux, const std::optional<RestrictedAux>& restricted) {
    const RestrictedAux r = resolve(aux, restricted);
    if ((aux.bt - aux.bt.transpose()).max_abs() > 1e-12 * (1.0 + aux.bt.max_abs()))
        throw std::invalid_argument("identity_eigs: Bt must be symmetric");
    const SymOperator bt_w{r.qt.entries() * aux.bt * r.qt.entries().transpose()};
    if (!bt_w.is_spd()) throw std::invalid_argument("identity_eigs: Bt is not SPD on W");

    const RangeNullSplit split = range_null_split(aux.a);
    const Matrix& q = split.q.entries();
    const Matrix a_q = q * aux.a.entries() * q.transpose();
    const Matrix b_q = q * compose(aux) * q.transpose();
    const PencilExtremes lhs = pencil_extremes(SymOperator{a_q * b_q * a_q}, SymOperator{a_q},
                                               Subspace::full(a_q.rows()));
    const PencilExtremes rhs = lift_pencil(aux.a, aux.pi, r.qt, bt_w);

    IdentityEigs out;
    out.lambda_min_lhs = lhs.lambda_min;
    out.lambda_max_lhs = lhs.lambda_max;
    out.lambda_min_rhs = 1.0 / rhs.lambda_max;
    out.lambda_max_rhs = 1.0 / rhs.lambda_min;
    return out;
}

AuxSystem restrict_range(const SymOperator& a) {
    if (a.is_zero()) throw std::invalid_argument("restrict_range: zero operator has empty range");
    if (!a.is_semi_spd()) throw std::invalid_argument("restrict_range: A is not semi-SPD");
    const RangeNullSplit split = range_null_split(a);
    const Matrix& q = split.q.entries();
    SymOperator a_q{q * a.entries() * q.transpose()};
    return make_aux_system(std::move(a_q), LinearMap{q}, Matrix::identity(a.dim()));
}

}  // namespace asv
