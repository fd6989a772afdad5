#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "asv/sym_operator.hpp"

namespace asv {

/// One local space V_j: an embedding Pi_j into V and a local solver R_j,
/// together with derived data on R(A_j).
struct LocalPiece {
    LinearMap pi;      // V_j -> V
    Matrix r;          // local solver on V_j
    SymOperator a_j;   // Pi_j^t A Pi_j
    Matrix q_j;        // rank(A_j) x dim(V_j), orthonormal rows spanning R(A_j)
    SymOperator a_w;   // Q_j A_j Q_j^t, SPD
    Matrix r_w;        // Q_j R_j Q_j^t
};

/// A space decomposition V = sum_j Pi_j V_j with local solvers.
struct Decomposition {
    SymOperator a;
    std::vector<LocalPiece> pieces;

    int dim() const { return a.dim(); }
    int count() const { return static_cast<int>(pieces.size()); }
};

/// Validates the covering property: [Pi_1, ..., Pi_J] must be surjective.
Decomposition make_decomposition(SymOperator a,
                                 std::vector<std::pair<LinearMap, Matrix>> pieces);

/// [Pi_1, ..., Pi_J] as a dense map onto V.
Matrix concatenated_pi(const Decomposition& d);

/// The expanded system on the product of the local spaces.
struct ExpandedSystem {
    std::vector<int> offsets;  // J + 1 block offsets
    Matrix a_blocks;           // [Pi_i^t A Pi_j]
    Matrix d_t;                // block diagonal part
    Matrix l_t;                // block strictly lower part
    Matrix r_t;                // blockdiag(R_1, ..., R_J)
};
ExpandedSystem expanded_system(const Decomposition& d);

/// Additive preconditioner sum_j Pi_j R_j Pi_j^t; certifies that it equals
/// the composition of the expanded block-diagonal solver.
Matrix build_psc(const Decomposition& d);

struct SscResult {
    Matrix error_op;  // (I - T_J) ... (I - T_1)
    Matrix b_ssc;     // concrete representative with I - b_ssc A = error_op
};

/// Multiplicative method; the representative is Pi (R~^{-1} + L~)^{-1} Pi^t
/// with the block triangular inverse formed by the formal forward
/// substitution, which never inverts an R_j. reverse applies the pieces in
/// the opposite order.
SscResult build_ssc(const Decomposition& d, bool reverse = false);

/// J x J table of blocks; entries above the diagonal are ignored.
using BlockMatrix = std::vector<std::vector<Matrix>>;

enum class BlockInverseMode { substitution, formula };

/// Inverse of a block lower triangular operator, either by blockwise forward
/// substitution or by the alternating-sign sum over index chains.
BlockMatrix block_lower_inverse(const BlockMatrix& m, BlockInverseMode mode);

/// inf over null shifts and splittings v + phi = sum_j Pi_j v_j of
/// sum_j (R_j^{-1} v_j, v_j), with each v_j in R(A_j); asserted against the
/// additive preconditioner inverted on R(A).
double lions_formula(const Decomposition& d, const Vector& v);

struct XZConstants {
    double c0 = 0.0;
    double c1 = 0.0;
    double norm_sq_direct = 0.0;    // |I - B_ssc A|_A^2 by the dense route
    double norm_sq_identity = 0.0;  // 1 - 1/c1 by the pencil route
};

/// Sharp multiplicative convergence constants through the expanded-system
/// route; throws if some symmetrized restricted solver fails to be SPD or
/// if 1 - 1/c1 and 1 - 1/(1 + c0) disagree beyond 1e-8.
XZConstants xz_constants(const Decomposition& d, bool reverse = false);

/// A-orthogonal projection P_j onto R(A_j) in Q_j coordinates
/// (rank(A_j) x dim(V)), solving A_j P_j = Q_j Pi_j^t A.
Matrix local_a_projection(const Decomposition& d, int j);

// Decomposition generators used across the tests and the CLI.
Decomposition coordinate_decomposition(const SymOperator& a);  // Jacobi/Gauss-Seidel pieces
Decomposition overlapping_two_block(const SymOperator& a, int split, int overlap);
Decomposition a_orthogonal_decomposition(const SymOperator& a,
                                         const std::vector<int>& group_sizes);
Decomposition duplicated_space(const SymOperator& a);  // Pi = [I, I], R_j = I

/// JSON description: {matrix: path, pieces: [{pi: path, solver: "exact"|"jacobi"|path}]}.
/// Paths are resolved relative to the description file.
Decomposition load_decomposition(const std::filesystem::path& file);

}  // namespace asv
