#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eitlab {

/// Vertex-welding tolerance used by every geometric construction.
inline constexpr double kGeomEps = 1e-12;

/// Tolerance on the interior-angle admissibility window.
inline constexpr double kAngleTol = 1e-9;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
/// Rotation by -90 degrees: the outward normal of a counterclockwise edge direction.
constexpr Vec2 perp_cw(Vec2 a) { return {a.y, -a.x}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Exact-sign orientation of (a, b, c): >0 counterclockwise, <0 clockwise, 0 collinear.
double orient(Vec2 a, Vec2 b, Vec2 c);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);
double segment_segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d);
/// Zero when p lies in the closed triangle.
double point_triangle_distance(Vec2 p, Vec2 a, Vec2 b, Vec2 c);
/// True when closed segments [a,b] and [c,d] share at least one point.
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

double signed_area(std::span<const Vec2> ring);

/// Simple polygon with counterclockwise vertex order.
///
/// Construction validates the structural invariants (at least three vertices,
/// no coincident consecutive vertices, no self-intersection) and throws
/// GeometryError otherwise. Clockwise input is reversed, keeping vertex 0 first.
class Polygon {
public:
    Polygon() = default;
    explicit Polygon(std::vector<Vec2> vertices);

    std::size_t size() const noexcept { return vertices_.size(); }
    const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
    Vec2 vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }
    /// Interior angle at vertex i, in (0, 2*pi).
    double angle(std::size_t i) const { return angles_[i]; }
    const std::vector<double>& angles() const noexcept { return angles_; }

    double area() const;
    double perimeter() const;
    double min_side() const;
    Vec2 side_start(std::size_t i) const { return vertex(i); }
    Vec2 side_end(std::size_t i) const { return vertex(i + 1); }
    /// Unit outward normal of side i.
    Vec2 outward_normal(std::size_t i) const;

    /// Winding-number test; points on the boundary count as inside.
    bool contains(Vec2 p) const;
    /// Distance from p to the boundary curve.
    double boundary_distance(Vec2 p) const;

    /// Same point set and same cyclic vertex sequence (any starting vertex), within tol.
    bool same_shape(const Polygon& other, double tol = kGeomEps) const;

private:
    std::vector<Vec2> vertices_;
    std::vector<double> angles_;
};

/// Outer boundary of the conductor.
class Domain {
public:
    Domain() = default;
    explicit Domain(Polygon boundary);
    static Domain box(double xmin, double ymin, double xmax, double ymax);

    const Polygon& boundary() const noexcept { return boundary_; }
    double diameter() const noexcept { return diameter_; }
    double area() const { return boundary_.area(); }
    double perimeter() const { return boundary_.perimeter(); }

    /// Domain whose boundary is this boundary pushed outward by `margin` (mitered).
    Domain dilated(double margin) const;

private:
    Polygon boundary_;
    double diameter_ = 0.0;
};

/// A-priori bounds describing the admissible class of inclusions and conductivities.
struct PriorInfo {
    int N0 = 10;
    double alpha0 = 0.78539816339744828;
    double d0 = 0.1;
    double r0 = 0.1;
    double K0 = 1.0;
    double lambda0 = 10.0;
    double lambda1 = 10.0;
    double L = 4.0;

    /// Throws ConfigError when a field violates its invariant.
    void validate() const;
    std::map<std::string, std::string> to_map() const;
    static PriorInfo from_map(const std::map<std::string, std::string>& kv);
};

struct PiecewiseConductivity {
    Polygon polygon;
    double k = 1.0;

    /// Value of the conductivity at x: k inside the closed polygon, 1 outside.
    double value(Vec2 x) const { return polygon.contains(x) ? k : 1.0; }
};

struct AdmissibilityClause {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double bound = 0.0;
};

struct AdmissibilityReport {
    std::vector<AdmissibilityClause> clauses;

    bool admissible() const;
    const AdmissibilityClause* find(const std::string& name) const;
    std::vector<std::string> failed() const;
};

/// Checks vertex count, angle window, minimum side length, distance to the outer
/// boundary and containment.
AdmissibilityReport validate_polygon(const Polygon& P, const Domain& omega, const PriorInfo& pi);

bool validate_conductivity(double k, const PriorInfo& pi);

struct BooleanAreas {
    double first_minus_second = 0.0;
    double second_minus_first = 0.0;
    double intersection = 0.0;
    double symmetric_difference() const { return first_minus_second + second_minus_first; }
};

/// Areas of P1\P2, P2\P1 and P1 cap P2.
BooleanAreas boolean_areas(const Polygon& P1, const Polygon& P2);
double intersection_area(const Polygon& P1, const Polygon& P2);
double symmetric_difference_area(const Polygon& P1, const Polygon& P2);

/// Symmetric Hausdorff distance between the two boundary curves.
double hausdorff_boundary(const Polygon& P1, const Polygon& P2);
/// One-sided part: sup over the boundary of A of the distance to the boundary of B.
double directed_hausdorff_boundary(const Polygon& A, const Polygon& B);

/// Cyclic, orientation-preserving pairing of the vertices of two polygons.
struct VertexCorrespondence {
    Polygon first;
    Polygon second;
    /// Vertex i of `first` is paired with vertex (i + shift) % n of `second`.
    std::size_t shift = 0;
    double max_distance = 0.0;
    double sum_distance = 0.0;

    std::size_t size() const { return first.size(); }
    Vec2 source(std::size_t i) const { return first.vertex(i); }
    Vec2 target(std::size_t i) const { return second.vertex(i + shift); }
    Vec2 displacement(std::size_t i) const { return target(i) - source(i); }
    /// `second` re-indexed so that its i-th vertex is the partner of first's i-th.
    Polygon aligned_second() const;
};

/// Minimises the maximum paired distance; ties go to the smaller sum, then the
/// smaller shift. Throws MatchImpossible on a vertex-count mismatch.
VertexCorrespondence match_vertices(const Polygon& P1, const Polygon& P2);

/// Sum of Euclidean distances between paired vertices.
double total_vertex_displacement(const VertexCorrespondence& corr);

struct DiffNorms {
    double l1 = 0.0;
    double l2 = 0.0;
};

/// Exact L1 and L2 norms of the difference of two piecewise-constant conductivities.
DiffNorms conductivity_diff_norms(const PiecewiseConductivity& c1, const PiecewiseConductivity& c2);

/// Moves each vertex x_i of corr.first to x_i + t (y_i - x_i). Throws
/// FlowDegenerate when the result is not a simple polygon.
Polygon apply_flow(const VertexCorrespondence& corr, double t);

/// Offset of a counterclockwise polygon by signed distance d (d > 0 outward),
/// each side shifted parallel and consecutive lines intersected. Throws
/// OffsetError naming the first vertex at which the offset degenerates.
std::vector<Vec2> mitered_offset(const Polygon& P, double d);

/// Plain-text polygon exchange: one "x y" record per line, '#' comments.
Polygon read_polygon(std::istream& in);
Polygon read_polygon_file(const std::string& path);
void write_polygon(std::ostream& out, const Polygon& P);

}  // namespace eitlab
