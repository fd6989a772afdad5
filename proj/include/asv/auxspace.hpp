#pragma once

#include <optional>
#include <vector>

#include "asv/constrained.hpp"
#include "asv/sym_operator.hpp"

namespace asv {

/// Auxiliary system: a space Vt mapped onto V by a surjective Pi, together
/// with a preconditioner Bt on Vt. The induced operator on V is
/// B = Pi Bt Pi^t and the auxiliary operator is At = Pi^t A Pi.
struct AuxSystem {
    SymOperator a;     // on V, semi-SPD
    LinearMap pi;      // Vt -> V, surjective
    Matrix bt;         // square on Vt, not necessarily symmetric
    SymOperator a_tilde;  // Pi^t A Pi

    int dim_v() const { return a.dim(); }
    int dim_vt() const { return pi.cols(); }
};

/// Validates surjectivity, dimension agreement, and N(At) >= N(Pi).
AuxSystem make_aux_system(SymOperator a, LinearMap pi, Matrix bt);

/// A subspace W of Vt containing R(At), with the orthogonal projection
/// onto W in coordinates (qt has orthonormal rows spanning W).
struct RestrictedAux {
    Subspace w;
    LinearMap qt;  // dim(W) x dim(Vt)
};

/// Validates that W contains R(At): the component of an R(At) basis
/// orthogonal to W must be below the null threshold.
RestrictedAux make_restricted(const AuxSystem& aux, Subspace w);
RestrictedAux full_restriction(const AuxSystem& aux);   // W = Vt
RestrictedAux range_restriction(const AuxSystem& aux);  // W = R(At)

/// B = Pi Bt Pi^t on V.
Matrix compose(const AuxSystem& aux);

struct LiftedTraces {
    std::vector<Vector> trace_v;   // iterates on V
    std::vector<Vector> trace_vt;  // lifted iterates on Vt, Pi u~^m = u^m
};

/// Runs u^{m+1} = u^m + B(f - A u^m) with B = Pi Bt Pi^t, and constructs
/// matching auxiliary iterates: per-step minimum-norm preimages, with the
/// accumulated N(Pi) drift subtracted so the lifted sequence itself obeys
/// u~^{m+1} = u~^m + Bt(f~ - At u~^m).
LiftedTraces lift_iterates(const AuxSystem& aux, const Vector& f, const Vector& u0, int steps);

struct IdentityRecord {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// Convergence-norm identity: lhs = |I - BA|_A^2 by the dense seminorm
/// route; rhs = 1 - 1/sup_v inf_lifts (Bbar_W^{-1} w, w) by the pencil
/// route, with the infimum taken jointly over null shifts of v and lifts in
/// W. pass iff |lhs - rhs| <= 1e-8 * (1 + |rhs|).
IdentityRecord identity_error_norm(const AuxSystem& aux,
                                   const std::optional<RestrictedAux>& restricted = std::nullopt);

struct IdentityEigs {
    double lambda_min_lhs = 0.0;
    double lambda_min_rhs = 0.0;
    double lambda_max_lhs = 0.0;
    double lambda_max_rhs = 0.0;
};

/// Extreme eigenvalue identities for BA on R(A): lhs from the pencil of
/// (A_Q B_Q A_Q, A_Q); rhs as reciprocals of the extremes of the lifted
/// constrained-infimum form. Requires Bt symmetric and SPD on W.
IdentityEigs identity_eigs(const AuxSystem& aux,
                           const std::optional<RestrictedAux>& restricted = std::nullopt);

/// The original system viewed as an auxiliary system over its own range:
/// V <- R(A) coordinates, Vt <- V, Pi <- Q. Rejects the zero operator.
AuxSystem restrict_range(const SymOperator& a);

/// Extremes against A_Q of the Schur form of
///     inf { (T_W^{-1} w, w) : Q Pi Qt^t w = Q v },  v in R(A),
/// the common right-hand-side engine of the identity evaluators.
PencilExtremes lift_pencil(const SymOperator& a, const LinearMap& pi, const LinearMap& qt,
                           const SymOperator& t_w);

}  // namespace asv
