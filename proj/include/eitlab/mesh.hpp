#pragma once

#include "eitlab/geometry.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace eitlab {

/// Mesh edge lying on a side of one of the interface polygons.
struct InterfaceEdge {
    int a = -1;  ///< start node; a -> b runs counterclockwise along the polygon
    int b = -1;
    int polygon = -1;
    int side = -1;
    int inside_tri = -1;
    int outside_tri = -1;
    Vec2 tangent;  ///< unit, counterclockwise along the polygon
    Vec2 normal;   ///< unit, pointing out of the polygon
    double length = 0.0;
};

/// Mesh edge on the outer boundary; a -> b runs counterclockwise.
struct BoundaryEdge {
    int a = -1;
    int b = -1;
    int tri = -1;
};

/// Local refinement request: element diameter at most `size` within `radius` of
/// `center`, relaxing linearly (slope MeshOptions::size_slope) further out.
struct SizeSpot {
    Vec2 center;
    double radius = 0.0;
    double size = 0.0;
};

struct MeshOptions {
    double target_h = 0.1;
    /// Elements within corner_radius of a polygon vertex have diameter <= target_h / grading.
    double grading = 1.0;
    double corner_radius = 0.025;
    double size_slope = 0.5;
    std::vector<SizeSpot> spots;
    std::size_t max_nodes = 2'000'000;
};

/// Conforming triangulation of a polygonal domain with polygonal interfaces.
///
/// Immutable after construction. Triangles are counterclockwise; each carries a
/// bit mask of the interface polygons containing it. Boundary nodes are ordered
/// counterclockwise starting from the domain's vertex 0 and define the trace basis.
class TriMesh {
public:
    TriMesh(Domain domain, std::vector<Polygon> interfaces, std::vector<Vec2> nodes,
            std::vector<std::array<int, 3>> triangles);

    const Domain& domain() const noexcept { return domain_; }
    const std::vector<Polygon>& interfaces() const noexcept { return interfaces_; }
    const std::vector<Vec2>& nodes() const noexcept { return nodes_; }
    const std::vector<std::array<int, 3>>& triangles() const noexcept { return tris_; }
    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    std::size_t num_triangles() const noexcept { return tris_.size(); }

    bool inside(std::size_t tri, std::size_t polygon) const { return (masks_[tri] >> polygon) & 1u; }
    std::uint32_t mask(std::size_t tri) const { return masks_[tri]; }

    double area(std::size_t tri) const;
    double diameter(std::size_t tri) const;
    Vec2 centroid(std::size_t tri) const;
    /// Gradients of the three barycentric (hat) functions, constant on the triangle.
    std::array<Vec2, 3> hat_gradients(std::size_t tri) const;
    double h_max() const noexcept { return h_max_; }
    double min_angle_deg() const;

    const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return boundary_edges_; }
    /// Boundary nodes in trace order.
    const std::vector<int>& boundary_nodes() const noexcept { return boundary_nodes_; }
    /// Arclength coordinate of each boundary node (same order as boundary_nodes()).
    const std::vector<double>& boundary_arclength() const noexcept { return boundary_arclength_; }
    /// Position of a node in the trace order, or -1 for interior nodes.
    int boundary_index(int node) const { return boundary_index_[node]; }
    const std::vector<int>& interior_nodes() const noexcept { return interior_nodes_; }

    /// Interface edges of polygon p, ordered counterclockwise from its vertex 0.
    const std::vector<InterfaceEdge>& interface_edges(std::size_t p = 0) const { return interface_edges_.at(p); }

    /// Index of an interface with the same shape as P, if any.
    std::optional<std::size_t> find_interface(const Polygon& P, double tol = 1e-9) const;

    /// Content hash of nodes and connectivity.
    std::uint64_t id() const noexcept { return id_; }

    /// Same connectivity with node i moved to nodes[i] + displacement[i]; the
    /// interface list is replaced by `moved_interfaces`.
    TriMesh transported(const std::vector<Vec2>& displacement, std::vector<Polygon> moved_interfaces) const;

private:
    void build_topology();

    Domain domain_;
    std::vector<Polygon> interfaces_;
    std::vector<Vec2> nodes_;
    std::vector<std::array<int, 3>> tris_;
    std::vector<std::uint32_t> masks_;
    std::vector<BoundaryEdge> boundary_edges_;
    std::vector<int> boundary_nodes_;
    std::vector<double> boundary_arclength_;
    std::vector<int> boundary_index_;
    std::vector<int> interior_nodes_;
    std::vector<std::vector<InterfaceEdge>> interface_edges_;
    double h_max_ = 0.0;
    std::uint64_t id_ = 0;
};

/// Delaunay-refined triangulation conforming to the domain boundary and to every
/// interface polygon (crossing interfaces are split at their intersections).
/// Postconditions: diameter <= target_h everywhere, <= target_h / grading within
/// corner_radius of any interface vertex, minimum angle >= 20 degrees except in
/// wedges cut by input segments meeting at less than 60 degrees. Throws
/// MeshQualityError when max_nodes is exhausted.
struct MeshReport {
    std::size_t steiner_points = 0;
    double min_angle_deg = 0.0;
    /// Triangles under 20 degrees that sit in a small-angle wedge of the input.
    std::size_t exempt_triangles = 0;
    /// Triangles under 20 degrees anywhere else (zero unless the node budget ran out).
    std::size_t bad_triangles = 0;
};

TriMesh triangulate(const Domain& omega, const std::vector<Polygon>& interfaces, const MeshOptions& opts,
                    MeshReport* report = nullptr);
TriMesh triangulate(const Domain& omega, const Polygon& P, const MeshOptions& opts, MeshReport* report = nullptr);

/// Uniform red refinement: every triangle split into four through edge midpoints.
TriMesh refine(const TriMesh& mesh);

/// Plain-text mesh dump (format documented in the README).
void write_mesh(std::ostream& out, const TriMesh& mesh, const std::vector<double>* nodal_values = nullptr);

/// Point location by bucketing triangle bounding boxes on a uniform grid.
class MeshLocator {
public:
    explicit MeshLocator(const TriMesh& mesh);
    struct Hit {
        int tri = -1;
        std::array<double, 3> bary{};
    };
    /// Triangle containing p (boundary points included), or tri == -1.
    Hit locate(Vec2 p) const;

private:
    const TriMesh* mesh_;
    Vec2 lo_;
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> buckets_;
};

}  // namespace eitlab
