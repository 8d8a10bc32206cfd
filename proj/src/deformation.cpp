#include "eitlab/deformation.hpp"

#include "eitlab/errors.hpp"

#include <algorithm>
#include <string>

namespace eitlab {

Vec2 DeformationField::evaluate(Vec2 x) const {
    const std::size_t n = source_.size();
    if (n == 0 || taper_ <= 0.0) return {};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const Vec2 a = source_.vertex(i), b = source_.vertex(j);
        const double r = dot(x - a, source_.outward_normal(i)) / taper_;
        if (r < -1.0 || r > 1.0) continue;
        const std::vector<Vec2>& off = r >= 0.0 ? outer_ : inner_;
        const double w = std::abs(r);
        // Lines of constant r are parallel to the side, so s is a plain projection.
        const Vec2 A = a + w * (off[i] - a), B = b + w * (off[j] - b);
        const Vec2 d = B - A;
        const double s = dot(x - A, d) / dot(d, d);
        if (s < -1e-12 || s > 1.0 + 1e-12) continue;
        const double sc = std::clamp(s, 0.0, 1.0);
        return (1.0 - w) * ((1.0 - sc) * V_[i] + sc * V_[j]);
    }
    return {};
}

Eigen::Matrix2d DeformationField::jacobian(const TriMesh& mesh, std::size_t tri) const {
    if (values_.size() != mesh.num_nodes()) throw DimensionError("deformation field does not match the mesh");
    const auto g = mesh.hat_gradients(tri);
    const auto& T = mesh.triangles()[tri];
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    for (int k = 0; k < 3; ++k) {
        const Vec2 v = values_[T[k]];
        J(0, 0) += v.x * g[k].x;
        J(0, 1) += v.x * g[k].y;
        J(1, 0) += v.y * g[k].x;
        J(1, 1) += v.y * g[k].y;
    }
    return J;
}

bool DeformationField::is_zero() const {
    return std::all_of(V_.begin(), V_.end(), [](Vec2 v) { return v.x == 0.0 && v.y == 0.0; });
}

void DeformationField::sample(const TriMesh& mesh) {
    values_.resize(mesh.num_nodes());
    sup_ = 0.0;
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        values_[i] = evaluate(mesh.nodes()[i]);
        sup_ = std::max(sup_, norm(values_[i]));
    }
    // Vertex values are imposed exactly; the band evaluation reproduces them up to rounding.
    for (std::size_t k = 0; k < source_.size(); ++k)
        for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
            if (mesh.nodes()[i] == source_.vertex(k)) values_[i] = V_[k];
    lip_ = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Eigen::Matrix2d J = jacobian(mesh, t);
        if (J.isZero(0.0)) continue;
        lip_ = std::max(lip_, Eigen::JacobiSVD<Eigen::Matrix2d>(J).singularValues()(0));
    }
    mesh_id_ = mesh.id();
}

Polygon DeformationField::flowed(double t) const {
    if (t == 1.0 && target_) return *target_;
    std::vector<Vec2> v(source_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = source_.vertex(i) + t * V_[i];
    if (signed_area(v) <= 0.0) throw FlowDegenerate("flowed polygon lost its orientation at t=" + std::to_string(t));
    try {
        return Polygon(std::move(v));
    } catch (const GeometryError& e) {
        throw FlowDegenerate(std::string("flowed polygon is degenerate: ") + e.what());
    }
}

DeformationField DeformationField::scaled(double c) const {
    DeformationField out = *this;
    if (c != 1.0) out.target_.reset();
    for (Vec2& v : out.V_) v *= c;
    for (Vec2& v : out.values_) v *= c;
    out.sup_ *= std::abs(c);
    out.lip_ *= std::abs(c);
    return out;
}

DeformationField DeformationField::on_mesh(const TriMesh& mesh) const {
    DeformationField out = *this;
    out.sample(mesh);
    return out;
}

DeformationField build_deformation(const Polygon& P, const std::vector<Vec2>& V, const TriMesh& mesh, double taper,
                                   const Domain* omega) {
    if (V.size() != P.size()) throw DimensionError("one displacement per polygon vertex is required");
    if (!(taper > 0.0)) throw PreconditionError("taper distance must be positive");
    DeformationField h;
    h.source_ = P;
    h.V_ = V;
    h.taper_ = taper;
    h.outer_ = mitered_offset(P, taper);
    h.inner_ = mitered_offset(P, -taper);
    if (omega) {
        const Polygon& B = omega->boundary();
        for (std::size_t i = 0; i < h.outer_.size(); ++i) {
            const Vec2 o = h.outer_[i], o2 = h.outer_[(i + 1) % h.outer_.size()];
            bool leaves = !B.contains(o) || B.boundary_distance(o) <= kGeomEps;
            for (std::size_t k = 0; k < B.size() && !leaves; ++k)
                leaves = segments_intersect(o, o2, B.side_start(k), B.side_end(k));
            if (leaves)
                throw OffsetError("outer offset leaves the domain at vertex " + std::to_string(i), static_cast<int>(i));
        }
    }
    h.sample(mesh);
    return h;
}

DeformationField build_deformation(const VertexCorrespondence& corr, const TriMesh& mesh, double taper) {
    std::vector<Vec2> V(corr.size());
    for (std::size_t i = 0; i < corr.size(); ++i) V[i] = corr.displacement(i);
    DeformationField h = build_deformation(corr.first, V, mesh, taper, &mesh.domain());
    h.target_ = corr.aligned_second();
    return h;
}

Polygon apply_flow(const DeformationField& h, double t) { return h.flowed(t); }

}  // namespace eitlab
