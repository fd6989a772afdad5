#include "asv/report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "asv/auxspace.hpp"
#include "asv/constrained.hpp"
#include "asv/iterative.hpp"
#include "asv/random.hpp"
#include "asv/subspace_correction.hpp"

namespace asv {
namespace {

/// Tracks the instance with the worst relative discrepancy of a family.
struct Worst {
    double lhs = 0.0;
    double rhs = 0.0;
    double err = -1.0;

    void consider(double l, double r) {
        const double e = std::abs(l - r) / (1.0 + std::abs(r));
        if (e > err) {
            err = e;
            lhs = l;
            rhs = r;
        }
    }

    CheckResult result(const std::string& theorem, double tol) const {
        return CheckResult{theorem, lhs, rhs, tol, err >= 0.0 && err <= tol};
    }
};

/// Halves a candidate smoother until its symmetrization is SPD on the whole
/// space, which the error-norm identities require.
Matrix tame_smoother(const SymOperator& at, Matrix bt) {
    for (int k = 0; k < 60; ++k) {
        const Matrix bar = bt + bt.transpose() - bt.transpose() * at.entries() * bt;
        if (SymOperator(bar).is_spd()) return bt;
        bt *= 0.5;
    }
    throw std::runtime_error("tame_smoother: no convergent scaling found");
}

AuxSystem random_aux(int dim, Rng& rng, bool semi, bool tame) {
    SymOperator a = semi ? random_semi_spd(dim, 1, rng) : random_spd(dim, rng);
    LinearMap pi = random_surjective(dim, dim + 2, rng);
    SymOperator a_tilde{pi.entries().transpose() * a.entries() * pi.entries()};
    Matrix bt = random_spd(dim + 2, rng).entries();
    if (tame) bt = tame_smoother(a_tilde, bt);
    return make_aux_system(std::move(a), std::move(pi), std::move(bt));
}

double max_abs_vec(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

VerifyReport run_verify(std::uint64_t seed, const std::vector<int>& dims, double tol_scale) {
    if (dims.empty()) throw std::invalid_argument("run_verify: empty dimension list");
    for (int d : dims)
        if (d < 3) throw std::invalid_argument("run_verify: dimensions must be at least 3");

    VerifyReport report;
    report.seed = seed;
    report.dims = dims;
    auto add = [&report, tol_scale](const Worst& w, const std::string& tag, double tol) {
        report.checks.push_back(w.result(tag, tol * tol_scale));
    };

    // Norm identity of the symmetrized stationary scheme: the operator
    // seminorm of I - BA against 1 - 1/sup of the inverse-form quadratic.
    {
        Rng rng(seed * 1000 + 1);
        Worst w;
        for (int d : dims)
            for (int rep = 0; rep < 8; ++rep) {
                const SymOperator a = random_spd(d, rng);
                const Matrix b = random_convergent_smoother(a, rng, rep % 2 == 0);
                const ConvergenceCertificate c = convergence_certificate(a, b);
                if (!c.identity_available) continue;
                w.consider(c.norm_identity_left, c.norm_identity_right);
            }
        add(w, "stationary-norm-identity", 1e-8);
    }

    // Extreme eigenvalues of BA are reciprocals of the extremes of the
    // inverse-form quadratic over the energy unit sphere.
    {
        Rng rng(seed * 1000 + 2);
        Worst wmin, wmax;
        for (int d : dims)
            for (int rep = 0; rep < 8; ++rep) {
                const SymOperator a = random_spd(d, rng);
                const SymOperator b = random_spd(d, rng);
                const PencilExtremes ba =
                    pencil_extremes(SymOperator{a.entries() * b.entries() * a.entries()}, a,
                                    Subspace::full(d));
                const PencilExtremes forms =
                    pencil_extremes(SymOperator{b.inverse()}, a, Subspace::full(d));
                wmin.consider(ba.lambda_min * forms.lambda_max, 1.0);
                wmax.consider(ba.lambda_max * forms.lambda_min, 1.0);
            }
        add(wmin, "eigenvalue-reciprocity-min", 1e-8);
        add(wmax, "eigenvalue-reciprocity-max", 1e-8);
    }

    // Constrained infimum of the inverse form equals the closed-form Schur
    // quadratic (C Bt C^t)^{-1}.
    {
        Rng rng(seed * 1000 + 3);
        Worst w;
        for (int d : dims)
            for (int rep = 0; rep < 10; ++rep) {
                const SymOperator bt = random_spd(d + 2, rng);
                const LinearMap c = random_surjective(d, d + 2, rng);
                const Vector v = random_vector(d, rng);
                const double lhs = constrained_inf(bt, c, v).value;
                const Matrix schur =
                    invert(c.entries() * bt.entries() * c.entries().transpose());
                w.consider(lhs, dot(v, schur.apply(v)));
            }
        add(w, "aux-lemma-closed-form", 1e-9);
    }

    // Lifted auxiliary iterates project back onto the original iterates.
    {
        Rng rng(seed * 1000 + 4);
        Worst w;
        for (int d : dims)
            for (int rep = 0; rep < 5; ++rep) {
                const AuxSystem aux = random_aux(d, rng, rep % 2 == 1, true);
                const Vector f = aux.a.apply(random_vector(d, rng));
                const Vector u0 = random_vector(d, rng);
                const LiftedTraces traces = lift_iterates(aux, f, u0, 8);
                double dev = 0.0;
                double scale = 1.0;
                for (std::size_t m = 0; m < traces.trace_v.size(); ++m) {
                    dev = std::max(
                        dev, max_abs_vec(aux.pi.apply(traces.trace_vt[m]) - traces.trace_v[m]));
                    scale = std::max(scale, max_abs_vec(traces.trace_v[m]));
                }
                w.consider(dev / scale, 0.0);
            }
        add(w, "lifted-iterates-consistency", 1e-11);
    }

    // Error-norm identity for composed auxiliary preconditioners, on the
    // full auxiliary space and restricted to the range of the auxiliary
    // operator.
    {
        Rng rng(seed * 1000 + 5);
        Worst wfull, wrange;
        for (int d : dims)
            for (int rep = 0; rep < 5; ++rep) {
                const AuxSystem aux = random_aux(d, rng, rep % 2 == 1, true);
                const IdentityRecord full = identity_error_norm(aux);
                wfull.consider(full.lhs, full.rhs);
                const IdentityRecord ranged = identity_error_norm(aux, range_restriction(aux));
                wrange.consider(ranged.lhs, ranged.rhs);
            }
        add(wfull, "aux-error-norm-identity", 1e-8);
        add(wrange, "aux-error-norm-restricted", 1e-8);
    }

    // Eigenvalue identities for composed auxiliary preconditioners.
    {
        Rng rng(seed * 1000 + 6);
        Worst wmin, wmax;
        for (int d : dims)
            for (int rep = 0; rep < 5; ++rep) {
                const AuxSystem aux = random_aux(d, rng, rep % 2 == 1, false);
                const IdentityEigs eigs = identity_eigs(aux);
                wmin.consider(eigs.lambda_min_lhs, eigs.lambda_min_rhs);
                wmax.consider(eigs.lambda_max_lhs, eigs.lambda_max_rhs);
            }
        add(wmin, "aux-eigs-min", 1e-8);
        add(wmax, "aux-eigs-max", 1e-8);
    }

    // The smallest eigenvalue of BA is invariant under restriction of the
    // pencil to range coordinates.
    {
        Rng rng(seed * 1000 + 7);
        Worst w;
        for (int d : dims)
            for (int rep = 0; rep < 8; ++rep) {
                const SymOperator a = random_semi_spd(d, 1 + rep % 2, rng);
                const SymOperator b = random_spd(d, rng);
                const PencilExtremes direct =
                    pencil_extremes(SymOperator{a.entries() * b.entries() * a.entries()}, a,
                                    Subspace{d, a.range_basis()});
                const Matrix p = a.range_basis();
                const Matrix aq = p.transpose() * a.entries() * p;
                const Matrix bq = p.transpose() * b.entries() * p;
                const SymOperator aq_op{aq};
                const PencilExtremes restricted = pencil_extremes(
                    SymOperator{aq * bq * aq}, aq_op, Subspace::full(aq.rows()));
                w.consider(direct.lambda_min, restricted.lambda_min);
            }
        add(w, "range-restriction-lambda-min", 1e-9);
    }

    // Additive preconditioner equals the composition through the expanded
    // block-diagonal system.
    {
        Rng rng(seed * 1000 + 8);
        Worst w;
        for (int d : dims)
            for (int rep = 0; rep < 5; ++rep) {
                const Decomposition dec = coordinate_decomposition(random_spd(d, rng));
                const Matrix psc = build_psc(dec);
                const Matrix pi_cat = concatenated_pi(dec);
                const ExpandedSystem ex = expanded_system(dec);
                const Matrix via_expanded = pi_cat * ex.r_t * pi_cat.transpose();
                w.consider((psc - via_expanded).max_abs() / (1.0 + psc.max_abs()), 0.0);
            }
        add(w, "psc-expanded-composition", 1e-10);
    }

    // Multiplicative error operator equals its product form.
    {
        Rng rng(seed * 1000 + 9);
        Worst w;
        for (int d : dims)
            for (int rep = 0; rep < 5; ++rep) {
                const Decomposition dec = coordinate_decomposition(random_spd(d, rng));
                const SscResult ssc = build_ssc(dec, rep % 2 == 1);
                const Matrix direct =
                    Matrix::identity(d) - ssc.b_ssc * dec.a.entries();
                w.consider((direct - ssc.error_op).max_abs() / (1.0 + direct.max_abs()), 0.0);
            }
        add(w, "ssc-product-form", 1e-10);
    }

    // Block lower triangular inverse: forward substitution against the
    // alternating-sign chain formula.
    {
        Rng rng(seed * 1000 + 10);
        Worst w;
        for (int rep = 0; rep < 10; ++rep) {
            const int j_count = 1 + rep % 4;
            std::vector<int> sizes;
            for (int j = 0; j < j_count; ++j) sizes.push_back(rng.uniform_int(1, 3));
            BlockMatrix m(static_cast<std::size_t>(j_count));
            for (int i = 0; i < j_count; ++i) {
                m[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(j_count));
                for (int j = 0; j <= i; ++j)
                    m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                        (i == j) ? random_spd(sizes[static_cast<std::size_t>(i)], rng).entries()
                                 : random_matrix(sizes[static_cast<std::size_t>(i)],
                                                 sizes[static_cast<std::size_t>(j)], rng);
            }
            const BlockMatrix sub = block_lower_inverse(m, BlockInverseMode::substitution);
            const BlockMatrix form = block_lower_inverse(m, BlockInverseMode::formula);
            double dev = 0.0;
            double scale = 1.0;
            for (int i = 0; i < j_count; ++i)
                for (int j = 0; j <= i; ++j) {
                    dev = std::max(dev, (sub[static_cast<std::size_t>(i)]
                                            [static_cast<std::size_t>(j)] -
                                         form[static_cast<std::size_t>(i)]
                                             [static_cast<std::size_t>(j)])
                                            .max_abs());
                    scale = std::max(scale, sub[static_cast<std::size_t>(i)]
                                               [static_cast<std::size_t>(j)].max_abs());
                }
            w.consider(dev / scale, 0.0);
        }
        add(w, "block-triangular-inverse", 1e-11);
    }

    // Infimum-over-splittings formula for the inverse of the additive
    // preconditioner, including null-space shifts on singular systems.
    {
        Rng rng(seed * 1000 + 11);
        Worst wspd, wsemi;
        for (int d : dims) {
            for (int rep = 0; rep < 4; ++rep) {
                const Decomposition dec =
                    overlapping_two_block(random_spd(d, rng), d / 2, 1);
                const Vector v = random_vector(d, rng);
                const Matrix psc_inv = invert(build_psc(dec));
                wspd.consider(lions_formula(dec, v), dot(v, psc_inv.apply(v)));
            }
            const SymOperator a{neumann_laplacian_1d(d)};
            const Decomposition dec = coordinate_decomposition(a);
            const Matrix psc_inv = invert(build_psc(dec));
            // Partial minimization over null shifts v + phi, phi in N(A),
            // gives the closed form as a Schur complement against the
            // inverse form on the null basis.
            const Matrix nb = a.null_basis();
            const Matrix cross = nb.transpose() * psc_inv;
            const Matrix gram_inv = invert(cross * nb);
            for (int rep = 0; rep < 4; ++rep) {
                const Vector v = a.apply(random_vector(d, rng));
                const Vector cv = cross.apply(v);
                const double closed = dot(v, psc_inv.apply(v)) - dot(cv, gram_inv.apply(cv));
                wsemi.consider(lions_formula(dec, v), closed);
            }
        }
        add(wspd, "lions-infimum-spd", 1e-8);
        add(wsemi, "lions-infimum-semi-spd", 1e-8);
    }

    // Sharp multiplicative constants: the direct error norm against both
    // closed forms, and the vanishing constant in the energy-orthogonal case.
    {
        Rng rng(seed * 1000 + 12);
        Worst wident, wc0, wexact;
        for (int d : dims)
            for (int rep = 0; rep < 4; ++rep) {
                const SymOperator a =
                    rep % 2 == 0 ? random_spd(d, rng) : SymOperator{neumann_laplacian_1d(d)};
                const XZConstants xz = xz_constants(coordinate_decomposition(a));
                wident.consider(xz.norm_sq_direct, xz.norm_sq_identity);
                wc0.consider(xz.norm_sq_direct, 1.0 - 1.0 / (1.0 + xz.c0));
            }
        for (int rep = 0; rep < 4; ++rep) {
            const SymOperator a = random_spd(6, rng);
            const XZConstants xz = xz_constants(a_orthogonal_decomposition(a, {3, 3}));
            wexact.consider(std::max(xz.c0, xz.c1 - 1.0), 0.0);
        }
        add(wident, "xz-identity", 1e-8);
        add(wc0, "xz-c0-form", 1e-8);
        add(wexact, "xz-exact-solver", 1e-10);
    }

    // Richardson on the 1D Dirichlet Laplacian of size 3: the error norm has
    // the closed form (2 + sqrt 2)/4 from the analytic spectrum {2, 2±sqrt 2}.
    {
        Worst w;
        const SymOperator a{dirichlet_laplacian_1d(3)};
        const ConvergenceCertificate c = convergence_certificate(a, 0.25 * Matrix::identity(3));
        const double norm = (2.0 + std::sqrt(2.0)) / 4.0;
        w.consider(std::sqrt(c.norm_identity_left), norm);
        add(w, "richardson-closed-form", 1e-12);
    }

    // Conjugate gradients terminate within the number of distinct
    // eigenvalues and obey the energy-error bound at every iteration.
    {
        Rng rng(seed * 1000 + 13);
        Worst wterm, wbound;
        {
            const SymOperator a{Matrix::diagonal({1.0, 1.0, 3.0, 3.0, 3.0, 7.0})};
            const Vector f = random_vector(6, rng);
            const IterationTrace t =
                pcg_solve(a, SymOperator{Matrix::identity(6)}, f, Vector(6, 0.0), 1e-12, -1);
            const double iters = static_cast<double>(t.energy_errors.size()) - 1.0;
            wterm.consider(std::max(0.0, iters - 3.0), 0.0);
        }
        for (int d : dims)
            for (int rep = 0; rep < 4; ++rep) {
                const SymOperator a = random_semi_spd(d, 1, rng);
                const SymOperator b{Matrix::identity(d)};
                const Vector f = a.apply(random_vector(d, rng));
                const IterationTrace t = pcg_solve(a, b, f, Vector(static_cast<std::size_t>(d), 0.0),
                                                   1e-12, -1);
                const Subspace range{d, a.range_basis()};
                const PencilExtremes ext = pencil_extremes(a, b, range);
                const double kappa = ext.lambda_max / ext.lambda_min;
                const double rate = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);
                double factor = 1.0;
                double violation = 0.0;
                for (std::size_t m = 0; m < t.energy_errors.size(); ++m) {
                    const double bound = 2.0 * factor * t.energy_errors[0] + 1e-13;
                    violation = std::max(violation, t.energy_errors[m] / bound - 1.0);
                    factor *= rate;
                }
                wbound.consider(std::max(0.0, violation), 0.0);
            }
        add(wterm, "pcg-finite-termination", 1e-12);
        add(wbound, "pcg-energy-bound", 1e-9);
    }

    report.all_pass = std::all_of(report.checks.begin(), report.checks.end(),
                                  [](const CheckResult& c) { return c.pass; });
    return report;
}

std::string to_json(const VerifyReport& report) {
    nlohmann::ordered_json j;
    j["command"] = "verify";
    j["seed"] = report.seed;
    j["dims"] = report.dims;
    j["checks"] = nlohmann::ordered_json::array();
    for (const CheckResult& c : report.checks) {
        nlohmann::ordered_json e;
        e["theorem"] = c.theorem;
        e["lhs"] = c.lhs;
        e["rhs"] = c.rhs;
        e["tol"] = c.tol;
        e["pass"] = c.pass;
        j["checks"].push_back(e);
    }
    j["all_pass"] = report.all_pass;
    return j.dump(2) + "\n";
}

StudyReport run_study(const std::vector<TriMesh>& meshes, double alpha, StudyMode mode,
                      double gate) {
    if (meshes.empty()) throw std::invalid_argument("run_study: empty mesh family");
    StudyReport report;
    switch (mode) {
        case StudyMode::exact_inverse: report.mode = "exact"; break;
        case StudyMode::jacobi_only: report.mode = "jacobi"; break;
        case StudyMode::aux_exact: report.mode = "aux-exact"; break;
        case StudyMode::aux_jacobi_b0: report.mode = "aux-jacobi"; break;
    }
    report.alpha = alpha;
    report.gate = gate;
    for (const TriMesh& mesh : meshes) report.levels.push_back(kappa_level(mesh, alpha, mode));
    report.gate_pass = true;
    for (std::size_t l = 1; l < report.levels.size(); ++l) {
        const double ratio = report.levels[l].kappa_ba / report.levels[l - 1].kappa_ba;
        report.ratios.push_back(ratio);
        if (!(ratio <= gate)) report.gate_pass = false;
    }
    return report;
}

std::string to_json(const StudyReport& report) {
    nlohmann::ordered_json j;
    j["command"] = "auxgrid";
    j["mode"] = report.mode;
    j["alpha"] = report.alpha;
    j["gate"] = report.gate;
    j["levels"] = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < report.levels.size(); ++l) {
        const KappaLevel& lvl = report.levels[l];
        nlohmann::ordered_json e;
        e["h"] = lvl.h;
        e["dim"] = lvl.dim;
        e["kappa_BA"] = lvl.kappa_ba;
        if (lvl.kappa_b0a0 > 0.0)
            e["kappa_B0A0"] = lvl.kappa_b0a0;
        else
            e["kappa_B0A0"] = nullptr;
        if (l == 0)
            e["ratio"] = nullptr;
        else
            e["ratio"] = report.ratios[l - 1];
        j["levels"].push_back(e);
    }
    j["gate_pass"] = report.gate_pass;
    return j.dump(2) + "\n";
}

}  // namespace asv
