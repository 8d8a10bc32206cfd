#pragma once

#include "eitlab/geometry.hpp"
#include "eitlab/mesh.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace eitlab {

/// Piecewise-linear vector field h on a mesh extending prescribed vertex
/// displacements V of a polygon P. On each side h is the affine interpolant of
/// the endpoint displacements; it tapers linearly to zero across a band of
/// width `taper` on both sides of P, bounded by the mitered offsets of P.
class DeformationField {
public:
    DeformationField() = default;

    const Polygon& source() const noexcept { return source_; }
    const std::vector<Vec2>& displacements() const noexcept { return V_; }
    double taper() const noexcept { return taper_; }
    const std::vector<Vec2>& outer_offset() const noexcept { return outer_; }
    const std::vector<Vec2>& inner_offset() const noexcept { return inner_; }

    /// Nodal values on the mesh the field was built for.
    const std::vector<Vec2>& values() const noexcept { return values_; }
    std::uint64_t mesh_id() const noexcept { return mesh_id_; }

    /// The band field itself at an arbitrary point (zero outside the band).
    Vec2 evaluate(Vec2 x) const;

    /// h' (rows: components of h, columns: partial derivatives) on a triangle
    /// of `mesh`, which must be the mesh the field was built for or a mesh
    /// with identical connectivity.
    Eigen::Matrix2d jacobian(const TriMesh& mesh, std::size_t tri) const;

    double sup_norm() const noexcept { return sup_; }
    /// Largest spectral norm of h' over the mesh.
    double lipschitz() const noexcept { return lip_; }
    /// ||h||_{W^{1,inf}} realised as max(sup |h|, sup |h'|).
    double w1inf() const noexcept { return sup_ > lip_ ? sup_ : lip_; }
    bool is_zero() const;

    /// Polygon with vertices x_i + t V_i; at t = 1 the exact target vertices
    /// are returned when the field was built from a correspondence.
    Polygon flowed(double t) const;

    /// The field multiplied by c (the exact target is dropped unless c == 1).
    DeformationField scaled(double c) const;

    /// Same displacements re-evaluated on another mesh.
    DeformationField on_mesh(const TriMesh& mesh) const;

private:
    friend DeformationField build_deformation(const Polygon&, const std::vector<Vec2>&, const TriMesh&, double,
                                              const Domain*);
    friend DeformationField build_deformation(const VertexCorrespondence&, const TriMesh&, double);
    void sample(const TriMesh& mesh);

    Polygon source_;
    std::vector<Vec2> V_;
    std::optional<Polygon> target_;
    double taper_ = 0.0;
    std::vector<Vec2> outer_, inner_;
    std::vector<Vec2> values_;
    std::uint64_t mesh_id_ = 0;
    double sup_ = 0.0, lip_ = 0.0;
};

/// Field with h(x_i) = V_i. Throws OffsetError naming the vertex at which an
/// offset polygon degenerates or leaves `omega` (when given).
DeformationField build_deformation(const Polygon& P, const std::vector<Vec2>& V, const TriMesh& mesh, double taper,
                                   const Domain* omega = nullptr);

/// Field moving corr.first onto corr.second, so that flowed(1) equals the
/// matched vertex list of the target exactly.
DeformationField build_deformation(const VertexCorrespondence& corr, const TriMesh& mesh, double taper);

/// Flow of P under h: the polygon Phi_{ht}(P). Throws FlowDegenerate when the
/// result is not simple.
Polygon apply_flow(const DeformationField& h, double t);

}  // namespace eitlab
