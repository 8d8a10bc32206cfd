#pragma once

#include "eitlab/geometry.hpp"
#include "eitlab/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace eitlab {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Conductivity value per triangle: k on triangles inside cond.polygon, 1
/// elsewhere. Throws AssemblyError when the mesh has no interface matching the
/// polygon.
std::vector<double> element_conductivity(const TriMesh& mesh, const PiecewiseConductivity& cond);

/// P1 stiffness matrix of the form sum_T gamma_T int_T grad(phi_i) . grad(phi_j).
SparseMatrix assemble_stiffness(const TriMesh& mesh, const std::vector<double>& gamma);
SparseMatrix assemble_stiffness(const TriMesh& mesh, const PiecewiseConductivity& cond);

/// P1 matrix of the form sum_T area_T grad(phi_i) . (A_T grad(phi_j)) for a
/// per-triangle 2x2 tensor (triangles with a zero tensor are skipped).
SparseMatrix assemble_tensor_form(const TriMesh& mesh, const std::vector<Eigen::Matrix2d>& A);

/// Nodal values of a Dirichlet datum on the boundary nodes, in trace order.
struct BoundaryTrace {
    std::vector<double> values;
    std::vector<double> arclength;

    std::size_t size() const { return values.size(); }
    Eigen::VectorXd vector() const { return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size()); }
    BoundaryTrace scaled(double c) const;
};

BoundaryTrace trace_from_function(const TriMesh& mesh, const std::function<double(Vec2)>& f);
BoundaryTrace trace_from_vector(const TriMesh& mesh, const Eigen::VectorXd& v);
/// Named traces: "const", "x", "y", "cos:m", "sin:m" (m-th arclength Fourier
/// mode over the whole boundary).
BoundaryTrace trace_mode(const TriMesh& mesh, const std::string& name);

/// Sparse Cholesky factorization of the interior block of a stiffness matrix,
/// reused across boundary data. Immutable after construction; solve() is const.
class DirichletSolver {
public:
    DirichletSolver(const TriMesh& mesh, std::vector<double> gamma);
    DirichletSolver(const TriMesh& mesh, const PiecewiseConductivity& cond);

    const TriMesh& mesh() const noexcept { return *mesh_; }
    const std::vector<double>& gamma() const noexcept { return gamma_; }
    const SparseMatrix& stiffness() const noexcept { return K_; }

    /// Nodal solution for boundary values g (trace order).
    Eigen::VectorXd solve(const Eigen::VectorXd& g) const;
    /// Nodal solution with interior load `rhs_interior` (interior-node order)
    /// and boundary values g.
    Eigen::VectorXd solve(const Eigen::VectorXd& g, const Eigen::VectorXd& rhs_interior) const;

    /// Boundary Schur complement K_BB - K_BI K_II^{-1} K_IB (trace order).
    Eigen::MatrixXd schur_complement() const;
    /// E^T B E for the discrete harmonic extension E of boundary data.
    Eigen::MatrixXd extension_form(const SparseMatrix& B) const;

    /// Relative residual of the interior equations for a nodal vector u.
    double interior_residual(const Eigen::VectorXd& u) const;

private:
    const TriMesh* mesh_;
    std::vector<double> gamma_;
    SparseMatrix K_, K_II_, K_IB_, K_BB_;
    std::vector<int> interior_pos_;
    std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> chol_;
};

/// Discrete potential together with per-triangle gradients.
struct FemSolution {
    const TriMesh* mesh = nullptr;
    std::vector<double> gamma;
    Eigen::VectorXd u;
    std::vector<Vec2> grad;
    double residual = 0.0;
    /// max(0, min f - min u, max u - max f).
    double max_principle_defect = 0.0;

    double energy() const;
    /// int gamma grad(u) . grad(other).
    double energy_product(const FemSolution& other) const;
};

FemSolution make_solution(const TriMesh& mesh, std::vector<double> gamma, Eigen::VectorXd u);
FemSolution solve_dirichlet(const DirichletSolver& solver, const BoundaryTrace& f);
/// One-off solve; throws SolverError when the interior block is not definite.
FemSolution solve_dirichlet(const TriMesh& mesh, const PiecewiseConductivity& cond, const BoundaryTrace& f);

enum class Side { inside, outside };

/// One-sided gradient trace on each interface edge of polygon `polygon`.
std::vector<Vec2> interior_gradient_on_interface(const FemSolution& sol, Side side, std::size_t polygon = 0);

struct InterfaceJumpReport {
    double max_tangential_jump = 0.0;
    /// max over edges of |k (d_nu u)_in - (d_nu u)_out|.
    double max_flux_defect = 0.0;
    /// Edge-length weighted L2 average of the flux defect.
    double l2_flux_defect = 0.0;
};

InterfaceJumpReport interface_jumps(const FemSolution& sol, double k, std::size_t polygon = 0);

}  // namespace eitlab
