#pragma once

#include "eitlab/fem.hpp"
#include "eitlab/mesh.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace eitlab {

/// Discrete Dirichlet-to-Neumann map on the boundary nodal basis (trace order).
struct DtnMatrix {
    Eigen::MatrixXd L;
    std::vector<double> arclength;
    std::uint64_t mesh_id = 0;

    Eigen::Index size() const { return L.rows(); }
};

/// Name of the H^{1/2} realisation; echoed into every result file.
inline constexpr const char* kHalfNormRealization =
    "H1/2 norm: harmonic-extension Dirichlet energy (gamma=1 DtN) plus lumped boundary mass";

/// Gram matrix N = Lambda_0 + M_b of an H^{1/2}(boundary) inner product, with
/// its inverse square root cached for whitening.
struct HalfGram {
    Eigen::MatrixXd N;
    Eigen::MatrixXd inv_sqrt;
    double min_eigenvalue = 0.0;
    std::uint64_t mesh_id = 0;

    double norm(const Eigen::VectorXd& f) const { return std::sqrt(f.dot(N * f)); }
};

DtnMatrix assemble_dtn(const DirichletSolver& solver);
DtnMatrix assemble_dtn(const TriMesh& mesh, const PiecewiseConductivity& cond);
/// DtN map of the homogeneous problem (gamma = 1).
DtnMatrix assemble_dtn_homogeneous(const TriMesh& mesh);

HalfGram assemble_half_gram(const TriMesh& mesh);
HalfGram half_gram_from(const DtnMatrix& homogeneous, const TriMesh& mesh);

/// Diagonal of the lumped boundary mass matrix (trace order).
Eigen::VectorXd boundary_lumped_mass(const TriMesh& mesh);

/// Largest singular value of N^{-1/2} (L1 - L2) N^{-1/2}, i.e. the
/// H^{1/2} -> H^{-1/2} operator norm of the difference.
double op_norm_diff(const DtnMatrix& L1, const DtnMatrix& L2, const HalfGram& N);
/// Same for an arbitrary symmetric boundary operator.
double whitened_norm(const Eigen::MatrixXd& D, const HalfGram& N);

/// psi^T L phi.
double pairing(const DtnMatrix& L, const BoundaryTrace& phi, const BoundaryTrace& psi);

struct DtnStructure {
    double asymmetry = 0.0;      ///< max |L - L^T| / max |L|
    double max_row_sum = 0.0;    ///< max |row sum| / max |L|
    double min_mean_zero_eig = 0.0;  ///< smallest eigenvalue on the mean-zero subspace / max |L|
};
DtnStructure check_structure(const DtnMatrix& L);

/// Dense text dump: header with the arclength of every boundary node, then rows.
void write_dtn(std::ostream& out, const DtnMatrix& L, const std::string& comment = {});

}  // namespace eitlab
