#include "asv/subspace_correction.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include "asv/constrained.hpp"
#include "json.hpp"

namespace asv {

namespace {

void insert_block(Matrix& dest, const Matrix& src, int row0, int col0) {
    for (int i = 0; i < src.rows(); ++i)
        for (int j = 0; j < src.cols(); ++j) dest(row0 + i, col0 + j) = src(i, j);
}

Matrix extract_block(const Matrix& src, int row0, int rows, int col0, int cols) {
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) out(i, j) = src(row0 + i, col0 + j);
    return out;
}

// Offsets of the restricted product space prod_j R(A_j).
std::vector<int> w_offsets(const Decomposition& d) {
    std::vector<int> off{0};
    for (const LocalPiece& p : d.pieces) off.push_back(off.back() + p.q_j.rows());
    return off;
}

// blockdiag(Q_1, ..., Q_J): W coordinates from product-space coordinates.
Matrix w_projection(const Decomposition& d) {
    const std::vector<int> woff = w_offsets(d);
    int cols = 0;
    for (const LocalPiece& p : d.pieces) cols += p.pi.cols();
    Matrix q(woff.back(), cols);
    int c = 0;
    for (int j = 0; j < d.count(); ++j) {
        insert_block(q, d.pieces[j].q_j, woff[j], c);
        c += d.pieces[j].pi.cols();
    }
    return q;
}

struct WSystem {
    std::vector<int> off;  // block offsets in W
    Matrix a_w;            // Q~ A~ Q~^t
    Matrix r_w;            // blockdiag of restricted solvers
    Matrix c;              // constraint Q Pi Q~^t
    Matrix a_q;            // Q A Q^t
};

WSystem w_system(const Decomposition& d) {
    WSystem s;
    s.off = w_offsets(d);
    const Matrix pi = concatenated_pi(d);
    const Matrix qw = w_projection(d);
    s.a_w = qw * (pi.transpose() * d.a.entries() * pi) * qw.transpose();
    s.r_w = Matrix(s.off.back(), s.off.back());
    for (int j = 0; j < d.count(); ++j) insert_block(s.r_w, d.pieces[j].r_w, s.off[j], s.off[j]);
    const Matrix q = d.a.range_basis().transpose();
    s.c = q * pi * qw.transpose();
    s.a_q = q * d.a.entries() * q.transpose();
    return s;
}

Matrix t_op(const Decomposition& d, int j) {
    const Matrix& p = d.pieces[j].pi.entries();
    return p * d.pieces[j].r * p.transpose() * d.a.entries();
}

Decomposition reversed(const Decomposition& d) {
    std::vector<std::pair<LinearMap, Matrix>> pieces;
    for (int j = d.count() - 1; j >= 0; --j) pieces.emplace_back(d.pieces[j].pi, d.pieces[j].r);
    return make_decomposition(d.a, std::move(pieces));
}

}  // namespace

Decomposition make_decomposition(SymOperator a,
                                 std::vector<std::pair<LinearMap, Matrix>> pieces) {
    if (pieces.empty()) throw std::invalid_argument("make_decomposition: no pieces");
    if (!a.is_semi_spd()) throw std::invalid_argument("make_decomposition: A is not semi-SPD");
    Decomposition d{std::move(a), {}};
    int total_cols = 0;
    for (auto& [pi, r] : pieces) {
        if (pi.rows() != d.a.dim())
            throw std::invalid_argument("make_decomposition: Pi_j has the wrong row count");
        if (r.rows() != pi.cols() || r.cols() != pi.cols())
            throw std::invalid_argument("make_decomposition: R_j/Pi_j dimension mismatch");
        total_cols += pi.cols();
        SymOperator a_j{pi.entries().transpose() * d.a.entries() * pi.entries()};
        if (a_j.rank() == 0)
            throw std::invalid_argument("make_decomposition: a piece maps into the null space");
        Matrix q_j = a_j.range_basis().transpose();
        SymOperator a_w{q_j * a_j.entries() * q_j.transpose()};
        Matrix r_w = q_j * r * q_j.transpose();
        d.pieces.push_back(LocalPiece{std::move(pi), std::move(r), std::move(a_j),
                                      std::move(q_j), std::move(a_w), std::move(r_w)});
    }
    // covering: [Pi_1, ..., Pi_J] surjective
    Matrix cat(d.a.dim(), total_cols);
    int c = 0;
    for (const LocalPiece& p : d.pieces) {
        insert_block(cat, p.pi.entries(), 0, c);
        c += p.pi.cols();
    }
    if (!LinearMap{cat}.is_surjective())
        throw std::invalid_argument("make_decomposition: the pieces do not cover the space");
    return d;
}

Matrix concatenated_pi(const Decomposition& d) {
    int cols = 0;
    for (const LocalPiece& p : d.pieces) cols += p.pi.cols();
    Matrix cat(d.dim(), cols);
    int c = 0;
    for (const LocalPiece& p : d.pieces) {
        insert_block(cat, p.pi.entries(), 0, c);
        c += p.pi.cols();
    }
    return cat;
}

ExpandedSystem expanded_system(const Decomposition& d) {
    ExpandedSystem s;
    s.offsets = {0};
    for (const LocalPiece& p : d.pieces) s.offsets.push_back(s.offsets.back() + p.pi.cols());
    const int n = s.offsets.back();
    const Matrix pi = concatenated_pi(d);
    s.a_blocks = pi.transpose() * d.a.entries() * pi;
    s.d_t = Matrix(n, n);
    s.l_t = Matrix(n, n);
    s.r_t = Matrix(n, n);
    for (int j = 0; j < d.count(); ++j) {
        const int o = s.offsets[j];
        const int nj = d.pieces[j].pi.cols();
        insert_block(s.d_t, extract_block(s.a_blocks, o, nj, o, nj), o, o);
        insert_block(s.r_t, d.pieces[j].r, o, o);
        for (int i = j + 1; i < d.count(); ++i) {
            const int oi = s.offsets[i];
            const int ni = d.pieces[i].pi.cols();
            insert_block(s.l_t, extract_block(s.a_blocks, oi, ni, o, nj), oi, o);
        }
    }
    return s;
}

Matrix build_psc(const Decomposition& d) {
    Matrix b(d.dim(), d.dim());
    for (const LocalPiece& p : d.pieces) {
        const Matrix& e = p.pi.entries();
        b += e * p.r * e.transpose();
    }
    // block-diagonal solver on the expanded system composes to the same map
    const ExpandedSystem s = expanded_system(d);
    const Matrix pi = concatenated_pi(d);
    const Matrix composed = pi * s.r_t * pi.transpose();
    if ((b - composed).max_abs() > 1e-12 * std::max(1.0, b.max_abs()))
        throw std::logic_error("build_psc: expanded-system equivalence failed");
    return b;
}

SscResult build_ssc(const Decomposition& d, bool reverse) {
    if (reverse) return build_ssc(reversed(d), false);
    const int n = d.dim();
    Matrix error = Matrix::identity(n);
    for (int j = 0; j < d.count(); ++j)
        error = (Matrix::identity(n) - t_op(d, j)) * error;

    // (R~^{-1} + L~)^{-1} by formal forward substitution: only the R_j appear,
    // so singular local solvers are fine.
    const ExpandedSystem s = expanded_system(d);
    const int nt = s.offsets.back();
    Matrix x(nt, nt);
    for (int j = 0; j < d.count(); ++j) {
        insert_block(x, d.pieces[j].r, s.offsets[j], s.offsets[j]);
        const int nj = d.pieces[j].pi.cols();
        for (int i = j + 1; i < d.count(); ++i) {
            const int ni = d.pieces[i].pi.cols();
            Matrix acc(ni, nj);
            for (int k = j; k < i; ++k) {
                const int nk = d.pieces[k].pi.cols();
                Matrix a_ik = extract_block(s.a_blocks, s.offsets[i], ni, s.offsets[k], nk);
                Matrix x_kj = extract_block(x, s.offsets[k], nk, s.offsets[j], nj);
                acc += a_ik * x_kj;
            }
            insert_block(x, (-1.0) * (d.pieces[i].r * acc), s.offsets[i], s.offsets[j]);
        }
    }
    const Matrix pi = concatenated_pi(d);
    Matrix b_ssc = pi * x * pi.transpose();

    const Matrix check = Matrix::identity(n) - b_ssc * d.a.entries();
    if ((check - error).max_abs() > 1e-10 * std::max(1.0, error.max_abs()))
        throw std::logic_error("build_ssc: triangular-inverse representative check failed");
    return SscResult{std::move(error), std::move(b_ssc)};
}

BlockMatrix block_lower_inverse(const BlockMatrix& m, BlockInverseMode mode) {
    const int j_count = static_cast<int>(m.size());
    std::vector<Matrix> inv_diag;
    for (int i = 0; i < j_count; ++i) {
        try {
            inv_diag.push_back(invert(m[i][i]));
        } catch (const std::exception&) {
            throw std::invalid_argument("block_lower_inverse: singular diagonal block " +
                                        std::to_string(i));
        }
    }
    BlockMatrix x(j_count, std::vector<Matrix>(j_count));
    for (int i = 0; i < j_count; ++i) {
        x[i][i] = inv_diag[i];
        for (int j = 0; j < i; ++j) x[i][j] = Matrix(m[i][i].rows(), m[j][j].cols());
        for (int j = i + 1; j < j_count; ++j) x[i][j] = Matrix(m[i][i].rows(), m[j][j].cols());
    }
    if (mode == BlockInverseMode::substitution) {
        for (int j = 0; j < j_count; ++j)
            for (int i = j + 1; i < j_count; ++i) {
                Matrix acc(m[i][i].rows(), m[j][j].cols());
                for (int k = j; k < i; ++k) acc += m[i][k] * x[k][j];
                x[i][j] = (-1.0) * (inv_diag[i] * acc);
            }
        return x;
    }
    // alternating-sign sum over strictly decreasing index chains i -> j
    for (int i = 0; i < j_count; ++i) {
        for (int j = 0; j < i; ++j) {
            Matrix sum(m[i][i].rows(), m[j][j].cols());
            std::function<void(int, const Matrix&, double)> walk =
                [&](int cur, const Matrix& acc, double sign) {
                    for (int p = j; p < cur; ++p) {
                        Matrix next = acc * m[cur][p] * inv_diag[p];
                        if (p == j)
                            sum += (-sign) * next;
                        else
                            walk(p, next, -sign);
                    }
                };
            walk(i, inv_diag[i], 1.0);
            x[i][j] = std::move(sum);
        }
    }
    return x;
}

double lions_formula(const Decomposition& d, const Vector& v) {
    if (static_cast<int>(v.size()) != d.dim())
        throw std::invalid_argument("lions_formula: dimension mismatch");
    for (int j = 0; j < d.count(); ++j) {
        const Matrix& rw = d.pieces[j].r_w;
        if ((rw - rw.transpose()).max_abs() > 1e-12 * (1.0 + rw.max_abs()) ||
            !SymOperator{rw}.is_spd())
            throw std::invalid_argument("lions_formula: restricted solver " + std::to_string(j) +
                                        " is not SPD");
    }
    const WSystem s = w_system(d);
    Matrix m_inv(s.off.back(), s.off.back());
    for (int j = 0; j < d.count(); ++j)
        insert_block(m_inv, SymOperator{d.pieces[j].r_w}.inverse(), s.off[j], s.off[j]);

    const Matrix q = d.a.range_basis().transpose();
    Vector v_range = q.apply_transpose(q.apply(v));
    if (norm2(v - v_range) > 1e2 * d.a.null_threshold() * (1.0 + norm2(v)))
        throw std::invalid_argument("lions_formula: v is not in the range of A");

    ConstrainedQuadraticForm form{m_inv, s.c};
    const double value = form.value(q.apply(v));

    // reference: the additive preconditioner inverted on R(A)
    const Matrix b_q = q * build_psc(d) * q.transpose();
    const Vector qv = q.apply(v);
    const double ref = dot(invert(b_q).apply(qv), qv);
    if (std::abs(value - ref) > 1e-9 * std::max(1.0, std::abs(ref)))
        throw std::logic_error("lions_formula: splitting infimum disagrees with the preconditioner");
    return value;
}

Matrix local_a_projection(const Decomposition& d, int j) {
    const LocalPiece& p = d.pieces[j];
    return p.a_w.inverse() * p.q_j * p.pi.entries().transpose() * d.a.entries();
}

XZConstants xz_constants(const Decomposition& d, bool reverse) {
    if (reverse) return xz_constants(reversed(d), false);
    const WSystem s = w_system(d);
    const int nw = s.off.back();

    Matrix rbar_inv(nw, nw);
    for (int j = 0; j < d.count(); ++j) {
        const LocalPiece& p = d.pieces[j];
        SymOperator rbar{p.r_w + p.r_w.transpose() - p.r_w.transpose() * p.a_w.entries() * p.r_w};
        if (!rbar.is_spd())
            throw std::invalid_argument("xz_constants: symmetrized local solver " +
                                        std::to_string(j) + " is not SPD");
        insert_block(rbar_inv, rbar.inverse(), s.off[j], s.off[j]);
    }
    const Matrix r_inv_t = invert(s.r_w).transpose();

    // lower-including-diagonal block part of the restricted expanded operator
    Matrix ld(nw, nw);
    for (int i = 0; i < d.count(); ++i)
        for (int j = 0; j <= i; ++j)
            insert_block(ld,
                         extract_block(s.a_w, s.off[i], s.off[i + 1] - s.off[i], s.off[j],
                                       s.off[j + 1] - s.off[j]),
                         s.off[i], s.off[j]);
    const Matrix l_hat = ld - r_inv_t;
    const Matrix m0 = l_hat * s.r_w * rbar_inv * s.r_w.transpose() * l_hat.transpose();
    const Matrix m1 = s.a_w + m0;

    const SymOperator a_q{s.a_q};
    ConstrainedQuadraticForm f1{m1, s.c};
    ConstrainedQuadraticForm f0{m0, s.c};
    XZConstants out;
    out.c1 = pencil_extremes(SymOperator{f1.schur_form()}, a_q, Subspace::full(a_q.dim()))
                 .lambda_max;
    out.c0 = pencil_extremes(SymOperator{f0.schur_form()}, a_q, Subspace::full(a_q.dim()))
                 .lambda_max;
    out.norm_sq_identity = 1.0 - 1.0 / out.c1;

    const double via_c0 = 1.0 - 1.0 / (1.0 + out.c0);
    if (std::abs(out.norm_sq_identity - via_c0) > 1e-8 * (1.0 + std::abs(via_c0)))
        throw std::logic_error("xz_constants: the two constant routes disagree");

    const double norm = operator_seminorm(build_ssc(d).error_op, d.a);
    out.norm_sq_direct = norm * norm;
    return out;
}

Decomposition coordinate_decomposition(const SymOperator& a) {
    std::vector<std::pair<LinearMap, Matrix>> pieces;
    for (int j = 0; j < a.dim(); ++j) {
        if (a.entries()(j, j) <= 0.0)
            throw std::invalid_argument("coordinate_decomposition: nonpositive diagonal entry");
        Matrix e(a.dim(), 1);
        e(j, 0) = 1.0;
        Matrix r(1, 1);
        r(0, 0) = 1.0 / a.entries()(j, j);
        pieces.emplace_back(LinearMap{std::move(e)}, std::move(r));
    }
    return make_decomposition(a, std::move(pieces));
}

namespace {

std::pair<LinearMap, Matrix> index_piece(const SymOperator& a, int first, int last) {
    Matrix pi(a.dim(), last - first);
    for (int k = first; k < last; ++k) pi(k, k - first) = 1.0;
    SymOperator a_j{pi.transpose() * a.entries() * pi};
    return {LinearMap{std::move(pi)}, a_j.pseudo_inverse()};
}

}  // namespace

Decomposition overlapping_two_block(const SymOperator& a, int split, int overlap) {
    if (split <= 0 || split >= a.dim() || overlap < 0 || split - overlap < 0)
        throw std::invalid_argument("overlapping_two_block: bad split");
    std::vector<std::pair<LinearMap, Matrix>> pieces;
    pieces.push_back(index_piece(a, 0, split));
    pieces.push_back(index_piece(a, split - overlap, a.dim()));
    return make_decomposition(a, std::move(pieces));
}

Decomposition a_orthogonal_decomposition(const SymOperator& a,
                                         const std::vector<int>& group_sizes) {
    int total = 0;
    for (int g : group_sizes) total += g;
    if (total != a.dim())
        throw std::invalid_argument("a_orthogonal_decomposition: group sizes must cover");
    const Matrix& vec = a.eigenvectors();
    std::vector<std::pair<LinearMap, Matrix>> pieces;
    int col = 0;
    for (int g : group_sizes) {
        Matrix pi(a.dim(), g);
        for (int k = 0; k < g; ++k)
            for (int i = 0; i < a.dim(); ++i) pi(i, k) = vec(i, col + k);
        col += g;
        SymOperator a_j{pi.transpose() * a.entries() * pi};
        pieces.emplace_back(LinearMap{std::move(pi)}, a_j.pseudo_inverse());
    }
    return make_decomposition(a, std::move(pieces));
}

Decomposition duplicated_space(const SymOperator& a) {
    std::vector<std::pair<LinearMap, Matrix>> pieces;
    pieces.emplace_back(LinearMap{Matrix::identity(a.dim())}, Matrix::identity(a.dim()));
    pieces.emplace_back(LinearMap{Matrix::identity(a.dim())}, Matrix::identity(a.dim()));
    return make_decomposition(a, std::move(pieces));
}

Decomposition load_decomposition(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("load_decomposition: cannot open " + file.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    const auto base = file.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path q(p);
        return q.is_absolute() ? q : base / q;
    };
    SymOperator a{load_matrix(resolve(doc.at("matrix").get<std::string>()))};
    std::vector<std::pair<LinearMap, Matrix>> pieces;
    for (const auto& entry : doc.at("pieces")) {
        LinearMap pi{load_matrix(resolve(entry.at("pi").get<std::string>()))};
        SymOperator a_j{pi.entries().transpose() * a.entries() * pi.entries()};
        const std::string solver = entry.at("solver").get<std::string>();
        Matrix r(pi.cols(), pi.cols());
        if (solver == "exact") {
            r = a_j.pseudo_inverse();
        } else if (solver == "jacobi") {
            for (int i = 0; i < pi.cols(); ++i) {
                if (a_j.entries()(i, i) <= 0.0)
                    throw std::runtime_error("load_decomposition: zero diagonal in jacobi solver");
                r(i, i) = 1.0 / a_j.entries()(i, i);
            }
        } else {
            r = load_matrix(resolve(solver));
        }
        pieces.emplace_back(std::move(pi), std::move(r));
    }
    return make_decomposition(std::move(a), std::move(pieces));
}

}  // namespace asv
