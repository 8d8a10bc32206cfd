#pragma once

#include "eitlab/deformation.hpp"
#include "eitlab/fem.hpp"
#include "eitlab/geometry.hpp"
#include "eitlab/mesh.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace eitlab {

/// Straight path from (P1, k1) to (P2, k2): the inclusion is Phi_{ht}(P1) and
/// the conductivity k1 + t (k2 - k1). The field h lives on a mesh conforming to P1.
struct PerturbationPath {
    PiecewiseConductivity base;
    PiecewiseConductivity target;
    DeformationField h;

    double k_diff() const { return target.k - base.k; }
    double k_at(double t) const { return base.k + t * k_diff(); }
    /// Sum of vertex displacement lengths.
    double vertex_motion() const;
};

/// Matches the vertices of the two polygons and builds h on `mesh` (which must
/// conform to base.polygon) with the given taper distance.
PerturbationPath make_path(const PiecewiseConductivity& base, const PiecewiseConductivity& target,
                           const TriMesh& mesh, double taper);

/// Path with prescribed vertex displacements V and conductivity increment dk.
PerturbationPath make_path(const PiecewiseConductivity& base, const std::vector<Vec2>& V, double dk,
                           const TriMesh& mesh, double taper);

/// True when k_{1+t} stays admissible for every t in [0, 1].
bool path_conductivity_admissible(const PerturbationPath& path, const PriorInfo& pi);

/// Per interface edge: tau tau^T + (1/k1) nu nu^T.
std::vector<Eigen::Matrix2d> interface_matrix_M(const TriMesh& mesh, double k1, std::size_t polygon = 0);

/// A(t) = (I + t h')^{-1} (I + t h'^T)^{-1} (1 + t div h + t^2 det h'). Throws
/// JacobianSingular when I + t h' is not invertible.
Eigen::Matrix2d A_of_t(const Eigen::Matrix2d& hprime, double t);
/// (div h) I - h' - h'^T.
Eigen::Matrix2d calA_h(const Eigen::Matrix2d& hprime);

/// Point forms: h' is taken from the mesh triangle containing x.
Eigen::Matrix2d A_of_t(const DeformationField& h, const TriMesh& mesh, double t, Vec2 x);
Eigen::Matrix2d calA_h(const DeformationField& h, const TriMesh& mesh, Vec2 x);

/// Mesh at time t: nodes moved by t h, inclusion Phi_{ht}(P1). Throws
/// FlowDegenerate when the flowed polygon or a transported triangle degenerates.
TriMesh flowed_mesh(const PerturbationPath& path, const TriMesh& base_mesh, double t);

/// F(t, phi, psi) = <Lambda_{k_{1+t}}^{P_{1+t}} phi, psi> on the transported mesh.
/// Negative t extends the path linearly backwards.
double F_of_t(const PerturbationPath& path, const TriMesh& base_mesh, double t, const BoundaryTrace& phi,
              const BoundaryTrace& psi);

/// Where the one-sided gradients at the interface are taken.
enum class TraceConvention {
    outside,       ///< both components from the outside triangle
    flux_average,  ///< tangential averaged, normal from the averaged flux (k1 g_in + g_out) / 2
};

struct DerivativeParts {
    double interface_term = 0.0;  ///< (k1 - 1) int (h.nu) grad u . M grad v
    double volume_term = 0.0;     ///< k int_{P1} grad u . grad v
    double total() const { return interface_term + volume_term; }
};

/// Nodal bilinear form B with dF/dt|_0 = u_psi^T B u_phi for discrete solutions.
SparseMatrix derivative_form(const PerturbationPath& path, const TriMesh& mesh,
                             TraceConvention conv = TraceConvention::outside);

DerivativeParts dF_dt0_parts(const PerturbationPath& path, const FemSolution& u, const FemSolution& v,
                             TraceConvention conv = TraceConvention::outside);
DerivativeParts dF_dt0_parts(const PerturbationPath& path, const BoundaryTrace& phi, const BoundaryTrace& psi,
                             const TriMesh& mesh, TraceConvention conv = TraceConvention::outside);
/// Analytic derivative of F at t = 0.
double dF_dt0(const PerturbationPath& path, const BoundaryTrace& phi, const BoundaryTrace& psi, const TriMesh& mesh,
              TraceConvention conv = TraceConvention::outside);

/// Centered difference (F(dt) - F(-dt)) / (2 dt) on the transported mesh.
double dF_dt_fd(const PerturbationPath& path, const TriMesh& base_mesh, double t, const BoundaryTrace& phi,
                const BoundaryTrace& psi, double dt = 1e-3);

struct VolumeIdentity {
    double volume_side = 0.0;     ///< int gamma grad u . (calA_h grad v)
    double interface_side = 0.0;  ///< (k1 - 1) int (h.nu) grad u . (M grad v)
    double defect = 0.0;          ///< relative difference
};

VolumeIdentity volume_identity_check(const PerturbationPath& path, const BoundaryTrace& phi,
                                     const BoundaryTrace& psi, const TriMesh& mesh,
                                     TraceConvention conv = TraceConvention::outside);

struct ContinuityProbe {
    std::vector<double> t;
    std::vector<double> dF;      ///< centered-difference dF/dt at each t
    std::vector<double> change;  ///< |dF/dt(t) - dF/dt(0)|
    double dF0 = 0.0;
    double slope = 0.0;     ///< log-log slope of change against t
    double constant = 0.0;  ///< median of change / t
};

/// Requires at least four grid points in (0, 1].
ContinuityProbe continuity_modulus_probe(const PerturbationPath& path, const TriMesh& base_mesh,
                                         const BoundaryTrace& phi, const BoundaryTrace& psi,
                                         const std::vector<double>& t_grid, double dt = 1e-3);

struct MaterialShapeCheck {
    double shape = 0.0;      ///< d/dt u_{1+t}(x0) at a fixed point
    double material = 0.0;   ///< d/dt u_{1+t}(Phi_{ht}(x0))
    double transport = 0.0;  ///< h(x0) . grad u_1(x0)
    double defect = 0.0;     ///< |material - shape - transport| / |material|
};

/// Compares the material derivative with shape derivative plus transport at x0.
MaterialShapeCheck material_shape_check(const PerturbationPath& path, const TriMesh& base_mesh,
                                        const BoundaryTrace& phi, Vec2 x0, double dt = 1e-3);

}  // namespace eitlab
