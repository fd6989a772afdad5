#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "asv/sym_operator.hpp"

namespace asv {

/// 2D conforming triangulation. Boundary nodes are detected topologically
/// (nodes on edges shared by exactly one triangle).
struct TriMesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;  // positively oriented
    std::vector<bool> boundary;
    double h = 0.0;                 // max element diameter
    double quasi_uniformity = 1.0;  // max diameter / min diameter
};

/// Triangle-format .node/.ele reader (2D, attributes ignored, 0- or 1-based).
TriMesh load_tri_mesh(const std::filesystem::path& node_file,
                      const std::filesystem::path& ele_file);

/// Uniform triangulation of the unit square, each cell split along a diagonal.
TriMesh structured_unit_square(int cells_per_side);

enum class BoundaryCondition { dirichlet, neumann };

/// Node indices of the unknowns: interior nodes for dirichlet, all nodes
/// otherwise.
std::vector<int> active_dofs(const TriMesh& mesh, BoundaryCondition bc);

/// P1 stiffness matrix on the active dofs. Dirichlet: SPD; Neumann: semi-SPD
/// with the constants in the kernel.
SymOperator assemble_p1(const TriMesh& mesh, BoundaryCondition bc);

/// Axis-aligned square grid covering part of the meshed domain: the cells
/// whose four corners all lie strictly inside it (a 1e-12 band around the
/// boundary counts as outside).
struct QuadGrid {
    std::array<double, 2> origin{};
    double h0 = 0.0;
    std::vector<std::array<int, 2>> cells;         // lower-left corner indices
    std::vector<std::array<int, 2>> active_nodes;  // integer grid coordinates
    std::map<std::array<int, 2>, int> node_index;  // grid coordinate -> dof

    bool empty() const { return cells.empty(); }
    int dim() const { return static_cast<int>(active_nodes.size()); }
};

QuadGrid build_quad_grid(const TriMesh& mesh, double h0);

/// Active grid nodes all four of whose surrounding cells are retained, i.e.
/// the nodes away from the boundary of the covered region.
std::vector<int> interior_grid_nodes(const QuadGrid& grid);

/// Q1 stiffness on the active grid nodes; natural boundary, semi-SPD with
/// the constants in the kernel.
SymOperator assemble_q1(const QuadGrid& grid);

/// Nodal interpolation from the grid space onto the dirichlet dofs of the
/// mesh. Rows of covered nodes are convex combinations of the four corners
/// of the containing cell; uncovered nodes get zero rows.
LinearMap nodal_interpolation(const QuadGrid& grid, const TriMesh& mesh);

/// Fraction of dirichlet dofs not covered by any retained cell.
double uncovered_fraction(const QuadGrid& grid, const TriMesh& mesh);

/// Nodal values of a mesh function (given on the dirichlet dofs, zero on the
/// boundary) at the active grid nodes. Used by the stable-splitting
/// diagnostic v = (v - Pi_h Pi_0 v) + Pi_h Pi_0 v.
LinearMap mesh_to_grid_interpolation(const TriMesh& mesh, const QuadGrid& grid);

/// B = D^{-1} + Pi_h B0 Pi_h^t on the dirichlet dofs. B0 defaults to the
/// exact solve of the grid stiffness restricted to the interior grid nodes,
/// extended by zero: constraining the trace on the boundary of the covered
/// region keeps the zero-extension of coarse functions uniformly stable in
/// energy, which an unconstrained coarse solve does not. An empty grid
/// degenerates to the Jacobi smoother alone.
struct AuxGridPreconditioner {
    Matrix b;
    std::optional<LinearMap> pi_h;
    std::optional<SymOperator> a0;
    std::optional<Matrix> b0;
};

AuxGridPreconditioner auxgrid_preconditioner(const SymOperator& a, const QuadGrid& grid,
                                             const TriMesh& mesh,
                                             const std::optional<Matrix>& b0 = std::nullopt);

enum class StudyMode {
    exact_inverse,  // B = A^{-1}, reference
    jacobi_only,    // B = D^{-1}, classical h^{-2} growth
    aux_exact,      // grid correction with an exact coarse solve
    aux_jacobi_b0   // grid correction with a diagonal coarse solver
};

struct KappaLevel {
    double h = 0.0;
    int dim = 0;
    double kappa_ba = 0.0;
    double kappa_b0a0 = 0.0;
};

/// One level of the study. Small systems use the dense pencil; large ones a
/// Lanczos iteration in the energy inner product with full
/// reorthogonalization.
KappaLevel kappa_level(const TriMesh& mesh, double alpha, StudyMode mode);

/// Refinement study of the preconditioned condition number with h0 = alpha*h;
/// requires at least three levels.
std::vector<KappaLevel> kappa_study(const std::vector<TriMesh>& meshes, double alpha,
                                    StudyMode mode);

}  // namespace asv
