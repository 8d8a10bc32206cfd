#include "eitlab/mesh.hpp"

#include "delaunay.hpp"
#include "eitlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace eitlab {
namespace {

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

// Triangles on either side of an undirected edge: `fwd` holds the edge as
// min -> max in its counterclockwise order, `bwd` as max -> min.
struct EdgeSides {
    int fwd = -1;
    int bwd = -1;
};

std::unordered_map<std::uint64_t, EdgeSides> edge_sides(const std::vector<std::array<int, 3>>& tris) {
    std::unordered_map<std::uint64_t, EdgeSides> map;
    map.reserve(tris.size() * 2);
    for (std::size_t t = 0; t < tris.size(); ++t) {
        for (int i = 0; i < 3; ++i) {
            const int a = tris[t][i], b = tris[t][(i + 1) % 3];
            EdgeSides& s = map[edge_key(a, b)];
            int& slot = a < b ? s.fwd : s.bwd;
            if (slot != -1) throw MeshQualityError("edge shared by two triangles with the same orientation");
            slot = static_cast<int>(t);
        }
    }
    return map;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

struct Welder {
    std::vector<Vec2> points;
    int add(Vec2 p) {
        for (std::size_t i = 0; i < points.size(); ++i)
            if (distance(points[i], p) <= kGeomEps) return static_cast<int>(i);
        points.push_back(p);
        return static_cast<int>(points.size()) - 1;
    }
};

struct RawSegment {
    Vec2 a, b;
    bool outer;
};

// Points where segment s meets segment o (crossings, touchings, collinear overlaps).
void meeting_points(const RawSegment& s, const RawSegment& o, std::vector<Vec2>& out) {
    const double o1 = orient(s.a, s.b, o.a), o2 = orient(s.a, s.b, o.b);
    const double o3 = orient(o.a, o.b, s.a), o4 = orient(o.a, o.b, s.b);
    auto on_s = [&](Vec2 p) {
        const Vec2 d = s.b - s.a;
        const double t = dot(p - s.a, d) / dot(d, d);
        return t >= 0.0 && t <= 1.0;
    };
    if (o1 == 0.0 && o2 == 0.0) {
        if (on_s(o.a)) out.push_back(o.a);
        if (on_s(o.b)) out.push_back(o.b);
        return;
    }
    if ((o1 > 0.0 && o2 > 0.0) || (o1 < 0.0 && o2 < 0.0)) return;
    if ((o3 > 0.0 && o4 > 0.0) || (o3 < 0.0 && o4 < 0.0)) return;
    if (o1 == 0.0) out.push_back(o.a);
    else if (o2 == 0.0) out.push_back(o.b);
    else if (o3 == 0.0) out.push_back(s.a);
    else if (o4 == 0.0) out.push_back(s.b);
    else {
        const Vec2 r = s.b - s.a, q = o.b - o.a;
        const double t = cross(o.a - s.a, q) / cross(r, q);
        out.push_back(s.a + t * r);
    }
}

class SizeField {
public:
    SizeField(const MeshOptions& opts, const std::vector<Polygon>& interfaces) : opts_(opts), spots_(opts.spots) {
        if (opts.grading > 1.0) {
            for (const Polygon& P : interfaces)
                for (Vec2 v : P.vertices()) spots_.push_back({v, opts.corner_radius, opts.target_h / opts.grading});
        }
    }

    double operator()(Vec2 a, Vec2 b, Vec2 c) const {
        double s = opts_.target_h;
        for (const SizeSpot& sp : spots_) {
            const double d = point_triangle_distance(sp.center, a, b, c);
            s = std::min(s, sp.size + opts_.size_slope * std::max(0.0, d - sp.radius));
        }
        return s;
    }

    double smallest() const {
        double s = opts_.target_h;
        for (const SizeSpot& sp : spots_) s = std::min(s, sp.size);
        return s;
    }

private:
    const MeshOptions& opts_;
    std::vector<SizeSpot> spots_;
};

detail::Pslg build_pslg(const Domain& omega, const std::vector<Polygon>& interfaces, const SizeField& size) {
    std::vector<RawSegment> raw;
    const Polygon& outer = omega.boundary();
    for (std::size_t i = 0; i < outer.size(); ++i) raw.push_back({outer.side_start(i), outer.side_end(i), true});
    for (const Polygon& P : interfaces)
        for (std::size_t i = 0; i < P.size(); ++i) raw.push_back({P.side_start(i), P.side_end(i), false});

    Welder weld;
    for (Vec2 v : outer.vertices()) weld.add(v);
    std::vector<std::vector<int>> on_segment(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::vector<Vec2> pts{raw[i].a, raw[i].b};
        for (std::size_t j = 0; j < raw.size(); ++j)
            if (j != i) meeting_points(raw[i], raw[j], pts);
        for (Vec2 p : pts) on_segment[i].push_back(weld.add(p));
    }

    detail::Pslg g;
    g.points = weld.points;
    g.owner.assign(g.points.size(), -1);
    std::unordered_map<std::uint64_t, int> seen;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto& ids = on_segment[i];
        const Vec2 a = raw[i].a, d = raw[i].b - raw[i].a;
        std::sort(ids.begin(), ids.end(), [&](int p, int q) {
            return dot(g.points[p] - a, d) < dot(g.points[q] - a, d);
        });
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
            const int u = ids[k], v = ids[k + 1];
            if (!seen.emplace(edge_key(u, v), 0).second) continue;
            const int s = static_cast<int>(g.segments.size());
            g.segments.push_back({u, v});

            const Vec2 pu = g.points[u], pv = g.points[v];
            std::vector<double> params{0.0, 1.0};
            if (raw[i].outer) {
                const int n = std::max(1, static_cast<int>(std::ceil(distance(pu, pv) / size(pu, pv, pv) - 1e-9)));
                params.clear();
                for (int m = 0; m <= n; ++m) params.push_back(static_cast<double>(m) / n);
            } else {
                std::vector<std::pair<double, double>> stack{{0.0, 1.0}};
                params.clear();
                params.push_back(0.0);
                std::vector<double> cuts;
                while (!stack.empty()) {
                    const auto [t0, t1] = stack.back();
                    stack.pop_back();
                    const Vec2 x0 = pu + t0 * (pv - pu), x1 = pu + t1 * (pv - pu);
                    if (distance(x0, x1) > size(x0, x1, x1)) {
                        const double tm = 0.5 * (t0 + t1);
                        cuts.push_back(tm);
                        stack.push_back({t0, tm});
                        stack.push_back({tm, t1});
                    }
                }
                std::sort(cuts.begin(), cuts.end());
                params.insert(params.end(), cuts.begin(), cuts.end());
                params.push_back(1.0);
            }
            int prev = u;
            for (std::size_t m = 1; m + 1 < params.size(); ++m) {
                const int id = static_cast<int>(g.points.size());
                g.points.push_back(pu + params[m] * (pv - pu));
                g.owner.push_back(s);
                g.pieces.push_back({prev, id, s});
                prev = id;
            }
            g.pieces.push_back({prev, v, s});
        }
    }
    return g;
}

}  // namespace

TriMesh::TriMesh(Domain domain, std::vector<Polygon> interfaces, std::vector<Vec2> nodes,
                 std::vector<std::array<int, 3>> triangles)
    : domain_(std::move(domain)),
      interfaces_(std::move(interfaces)),
      nodes_(std::move(nodes)),
      tris_(std::move(triangles)) {
    if (interfaces_.size() > 32) throw MeshQualityError("at most 32 interface polygons are supported");
    build_topology();
}

void TriMesh::build_topology() {
    const int n = static_cast<int>(nodes_.size());
    for (std::size_t t = 0; t < tris_.size(); ++t) {
        for (int v : tris_[t])
            if (v < 0 || v >= n) throw MeshQualityError("triangle references a missing node");
        if (area(t) <= 0.0) {
            std::ostringstream msg;
            const Vec2 c = centroid(t);
            msg << "triangle " << t << " near (" << c.x << ", " << c.y << ") is inverted or degenerate";
            throw MeshQualityError(msg.str());
        }
    }

    masks_.assign(tris_.size(), 0u);
    h_max_ = 0.0;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
        const Vec2 c = centroid(t);
        for (std::size_t p = 0; p < interfaces_.size(); ++p)
            if (interfaces_[p].contains(c)) masks_[t] |= 1u << p;
        h_max_ = std::max(h_max_, diameter(t));
    }

    const auto sides = edge_sides(tris_);

    boundary_edges_.clear();
    std::unordered_map<int, std::size_t> next;
    for (const auto& [key, s] : sides) {
        if (s.fwd != -1 && s.bwd != -1) continue;
        const int lo = static_cast<int>(key >> 32), hi = static_cast<int>(key & 0xffffffffu);
        BoundaryEdge e = s.fwd != -1 ? BoundaryEdge{lo, hi, s.fwd} : BoundaryEdge{hi, lo, s.bwd};
        if (!next.emplace(e.a, boundary_edges_.size()).second)
            throw MeshQualityError("boundary is not a simple closed curve");
        boundary_edges_.push_back(e);
    }
    if (boundary_edges_.empty()) throw MeshQualityError("mesh has no boundary");

    const Vec2 anchor = domain_.boundary().vertex(0);
    int start = boundary_edges_.front().a;
    for (const BoundaryEdge& e : boundary_edges_)
        if (distance(nodes_[e.a], anchor) < distance(nodes_[start], anchor)) start = e.a;

    std::vector<BoundaryEdge> ordered;
    boundary_nodes_.clear();
    boundary_arclength_.clear();
    double s = 0.0;
    int cur = start;
    do {
        const auto it = next.find(cur);
        if (it == next.end()) throw MeshQualityError("boundary edge cycle is not closed");
        const BoundaryEdge& e = boundary_edges_[it->second];
        boundary_nodes_.push_back(cur);
        boundary_arclength_.push_back(s);
        s += distance(nodes_[e.a], nodes_[e.b]);
        ordered.push_back(e);
        cur = e.b;
        if (ordered.size() > boundary_edges_.size()) throw MeshQualityError("boundary edge cycle is not closed");
    } while (cur != start);
    if (ordered.size() != boundary_edges_.size())
        throw MeshQualityError("boundary consists of more than one closed curve");
    boundary_edges_ = std::move(ordered);

    boundary_index_.assign(nodes_.size(), -1);
    for (std::size_t i = 0; i < boundary_nodes_.size(); ++i) boundary_index_[boundary_nodes_[i]] = static_cast<int>(i);
    interior_nodes_.clear();
    for (int v = 0; v < n; ++v)
        if (boundary_index_[v] < 0) interior_nodes_.push_back(v);

    interface_edges_.assign(interfaces_.size(), {});
    const double tol = 1e-10 * std::max(1.0, domain_.diameter());
    for (std::size_t p = 0; p < interfaces_.size(); ++p) {
        const Polygon& P = interfaces_[p];
        for (std::size_t j = 0; j < P.size(); ++j) {
            const Vec2 a = P.side_start(j), b = P.side_end(j), d = b - a;
            std::vector<std::pair<double, int>> on;
            for (int v = 0; v < n; ++v)
                if (point_segment_distance(nodes_[v], a, b) < tol) on.push_back({dot(nodes_[v] - a, d), v});
            std::sort(on.begin(), on.end());
            if (on.size() < 2 || distance(nodes_[on.front().second], a) > tol ||
                distance(nodes_[on.back().second], b) > tol) {
                std::ostringstream msg;
                msg << "interface " << p << " side " << j << " is not resolved by mesh nodes";
                throw MeshQualityError(msg.str());
            }
            for (std::size_t k = 0; k + 1 < on.size(); ++k) {
                InterfaceEdge e;
                e.a = on[k].second;
                e.b = on[k + 1].second;
                e.polygon = static_cast<int>(p);
                e.side = static_cast<int>(j);
                const auto it = sides.find(edge_key(e.a, e.b));
                if (it == sides.end() || it->second.fwd == -1 || it->second.bwd == -1) {
                    std::ostringstream msg;
                    const Vec2 m = 0.5 * (nodes_[e.a] + nodes_[e.b]);
                    msg << "mesh does not conform to interface " << p << " near (" << m.x << ", " << m.y << ")";
                    throw MeshQualityError(msg.str());
                }
                e.inside_tri = e.a < e.b ? it->second.fwd : it->second.bwd;
                e.outside_tri = e.a < e.b ? it->second.bwd : it->second.fwd;
                e.length = distance(nodes_[e.a], nodes_[e.b]);
                e.tangent = (nodes_[e.b] - nodes_[e.a]) / e.length;
                e.normal = perp_cw(e.tangent);
                interface_edges_[p].push_back(e);
            }
        }
    }

    std::uint64_t h = 1469598103934665603ull;
    h = fnv1a(h, nodes_.data(), nodes_.size() * sizeof(Vec2));
    h = fnv1a(h, tris_.data(), tris_.size() * sizeof(std::array<int, 3>));
    id_ = h;
}

double TriMesh::area(std::size_t t) const {
    const auto& T = tris_[t];
    return 0.5 * cross(nodes_[T[1]] - nodes_[T[0]], nodes_[T[2]] - nodes_[T[0]]);
}

double TriMesh::diameter(std::size_t t) const {
    const auto& T = tris_[t];
    return std::max({distance(nodes_[T[0]], nodes_[T[1]]), distance(nodes_[T[1]], nodes_[T[2]]),
                     distance(nodes_[T[2]], nodes_[T[0]])});
}

Vec2 TriMesh::centroid(std::size_t t) const {
    const auto& T = tris_[t];
    return (nodes_[T[0]] + nodes_[T[1]] + nodes_[T[2]]) / 3.0;
}

std::array<Vec2, 3> TriMesh::hat_gradients(std::size_t t) const {
    const auto& T = tris_[t];
    const Vec2 a = nodes_[T[0]], b = nodes_[T[1]], c = nodes_[T[2]];
    const double two_area = cross(b - a, c - a);
    return {Vec2{b.y - c.y, c.x - b.x} / two_area, Vec2{c.y - a.y, a.x - c.x} / two_area,
            Vec2{a.y - b.y, b.x - a.x} / two_area};
}

double TriMesh::min_angle_deg() const {
    double worst = 180.0;
    for (const auto& T : tris_) {
        for (int i = 0; i < 3; ++i) {
            const Vec2 o = nodes_[T[i]];
            const Vec2 u = nodes_[T[(i + 1) % 3]] - o, v = nodes_[T[(i + 2) % 3]] - o;
            worst = std::min(worst, std::atan2(std::abs(cross(u, v)), dot(u, v)) * 180.0 / std::numbers::pi);
        }
    }
    return worst;
}

std::optional<std::size_t> TriMesh::find_interface(const Polygon& P, double tol) const {
    for (std::size_t p = 0; p < interfaces_.size(); ++p)
        if (interfaces_[p].same_shape(P, tol)) return p;
    return std::nullopt;
}

TriMesh TriMesh::transported(const std::vector<Vec2>& displacement, std::vector<Polygon> moved_interfaces) const {
    if (displacement.size() != nodes_.size()) throw DimensionError("displacement size differs from node count");
    std::vector<Vec2> moved(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) moved[i] = nodes_[i] + displacement[i];
    return TriMesh(domain_, std::move(moved_interfaces), std::move(moved), tris_);
}

TriMesh triangulate(const Domain& omega, const std::vector<Polygon>& interfaces, const MeshOptions& opts,
                    MeshReport* report) {
    if (!(opts.target_h > 0.0)) throw MeshQualityError("target_h must be positive");
    if (!(opts.grading >= 1.0)) throw MeshQualityError("grading must be at least 1");
    for (const Polygon& P : interfaces) {
        for (Vec2 v : P.vertices())
            if (!omega.boundary().contains(v) || omega.boundary().boundary_distance(v) <= kGeomEps)
                throw MeshQualityError("interface polygon is not strictly inside the domain");
    }

    const SizeField size(opts, interfaces);
    const detail::Pslg g = build_pslg(omega, interfaces, size);

    detail::RefineLimits lim;
    lim.size = [&size](Vec2 a, Vec2 b, Vec2 c) { return size(a, b, c); };
    const Polygon& outer = omega.boundary();
    lim.inside = [&outer](Vec2 p) { return outer.contains(p); };
    lim.length_floor = 1e-3 * size.smallest();
    lim.max_points = opts.max_nodes;

    detail::RefineOutput out = detail::delaunay_refine(g, lim);
    if (report) {
        report->steiner_points = out.steiner;
        report->min_angle_deg = out.min_angle_deg;
        report->exempt_triangles = out.exempt;
        report->bad_triangles = out.bad;
    }
    return TriMesh(omega, interfaces, std::move(out.points), std::move(out.triangles));
}

TriMesh triangulate(const Domain& omega, const Polygon& P, const MeshOptions& opts, MeshReport* report) {
    return triangulate(omega, std::vector<Polygon>{P}, opts, report);
}

TriMesh refine(const TriMesh& mesh) {
    std::vector<Vec2> nodes = mesh.nodes();
    std::unordered_map<std::uint64_t, int> mid;
    auto midpoint = [&](int a, int b) {
        const auto [it, fresh] = mid.emplace(edge_key(a, b), static_cast<int>(nodes.size()));
        if (fresh) nodes.push_back(0.5 * (nodes[a] + nodes[b]));
        return it->second;
    };
    std::vector<std::array<int, 3>> tris;
    tris.reserve(4 * mesh.num_triangles());
    for (const auto& T : mesh.triangles()) {
        const int a = T[0], b = T[1], c = T[2];
        const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
        tris.push_back({a, ab, ca});
        tris.push_back({ab, b, bc});
        tris.push_back({ca, bc, c});
        tris.push_back({ab, bc, ca});
    }
    return TriMesh(mesh.domain(), mesh.interfaces(), std::move(nodes), std::move(tris));
}

void write_mesh(std::ostream& out, const TriMesh& mesh, const std::vector<double>* nodal_values) {
    if (nodal_values && nodal_values->size() != mesh.num_nodes())
        throw DimensionError("nodal value count differs from node count");
    const auto old_flags = out.flags();
    const auto old_prec = out.precision();
    out << std::setprecision(17);
    out << "# eitlab mesh\n";
    out << "nodes " << mesh.num_nodes() << (nodal_values ? " value" : "") << '\n';
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        out << mesh.nodes()[i].x << ' ' << mesh.nodes()[i].y;
        if (nodal_values) out << ' ' << (*nodal_values)[i];
        out << '\n';
    }
    out << "triangles " << mesh.num_triangles() << '\n';
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& T = mesh.triangles()[t];
        out << T[0] << ' ' << T[1] << ' ' << T[2] << ' ' << mesh.mask(t) << '\n';
    }
    out << "boundary_edges " << mesh.boundary_edges().size() << '\n';
    for (std::size_t i = 0; i < mesh.boundary_edges().size(); ++i) {
        const BoundaryEdge& e = mesh.boundary_edges()[i];
        out << e.a << ' ' << e.b << ' ' << mesh.boundary_arclength()[i] << '\n';
    }
    for (std::size_t p = 0; p < mesh.interfaces().size(); ++p) {
        const auto& edges = mesh.interface_edges(p);
        out << "interface_edges " << p << ' ' << edges.size() << '\n';
        for (const InterfaceEdge& e : edges)
            out << e.a << ' ' << e.b << ' ' << e.side << ' ' << e.normal.x << ' ' << e.normal.y << '\n';
    }
    out.flags(old_flags);
    out.precision(old_prec);
}

MeshLocator::MeshLocator(const TriMesh& mesh) : mesh_(&mesh) {
    Vec2 lo = mesh.nodes().front(), hi = lo;
    for (Vec2 p : mesh.nodes()) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    lo_ = lo;
    const double span = std::max(hi.x - lo.x, hi.y - lo.y);
    const double cells = std::max(1.0, std::sqrt(static_cast<double>(mesh.num_triangles()) / 2.0));
    cell_ = span / cells * (1.0 + 1e-9);
    nx_ = std::max(1, static_cast<int>((hi.x - lo.x) / cell_) + 1);
    ny_ = std::max(1, static_cast<int>((hi.y - lo.y) / cell_) + 1);
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& T = mesh.triangles()[t];
        double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
        for (int v : T) {
            x0 = std::min(x0, mesh.nodes()[v].x);
            x1 = std::max(x1, mesh.nodes()[v].x);
            y0 = std::min(y0, mesh.nodes()[v].y);
            y1 = std::max(y1, mesh.nodes()[v].y);
        }
        const int i0 = std::clamp(static_cast<int>((x0 - lo_.x) / cell_), 0, nx_ - 1);
        const int i1 = std::clamp(static_cast<int>((x1 - lo_.x) / cell_), 0, nx_ - 1);
        const int j0 = std::clamp(static_cast<int>((y0 - lo_.y) / cell_), 0, ny_ - 1);
        const int j1 = std::clamp(static_cast<int>((y1 - lo_.y) / cell_), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(static_cast<int>(t));
    }
}

MeshLocator::Hit MeshLocator::locate(Vec2 p) const {
    Hit best;
    const int i = static_cast<int>(std::floor((p.x - lo_.x) / cell_));
    const int j = static_cast<int>(std::floor((p.y - lo_.y) / cell_));
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return best;
    double best_min = -1e-12;
    for (int t : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
        const auto& T = mesh_->triangles()[t];
        const Vec2 a = mesh_->nodes()[T[0]], b = mesh_->nodes()[T[1]], c = mesh_->nodes()[T[2]];
        const double two_area = cross(b - a, c - a);
        const std::array<double, 3> w{cross(b - p, c - p) / two_area, cross(c - p, a - p) / two_area,
                                      cross(a - p, b - p) / two_area};
        const double m = std::min({w[0], w[1], w[2]});
        if (m >= best_min) {
            best_min = m;
            best.tri = t;
            best.bary = w;
        }
    }
    return best;
}

}  // namespace eitlab
