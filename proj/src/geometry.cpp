#include "eitlab/geometry.hpp"

#include "eitlab/errors.hpp"
#include "eitlab/predicates.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace eitlab {

double orient(Vec2 a, Vec2 b, Vec2 c) {
    const double pa[2] = {a.x, a.y}, pb[2] = {b.x, b.y}, pc[2] = {c.x, c.y};
    return predicates::orient2d(pa, pb, pc);
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 e = b - a;
    const double len2 = dot(e, e);
    if (len2 == 0.0) return distance(p, a);
    const double w = std::clamp(dot(p - a, e) / len2, 0.0, 1.0);
    return distance(p, a + w * e);
}

double point_triangle_distance(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
    const double s = orient(a, b, c);
    if (s != 0.0) {
        const double sign = s > 0.0 ? 1.0 : -1.0;
        if (sign * orient(a, b, p) >= 0.0 && sign * orient(b, c, p) >= 0.0 && sign * orient(c, a, p) >= 0.0)
            return 0.0;
    }
    return std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c),
                     point_segment_distance(p, c, a)});
}

namespace {

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const int o1 = sgn(orient(a, b, c));
    const int o2 = sgn(orient(a, b, d));
    const int o3 = sgn(orient(c, d, a));
    const int o4 = sgn(orient(c, d, b));
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(c, a, b)) return true;
    if (o2 == 0 && on_segment(d, a, b)) return true;
    if (o3 == 0 && on_segment(a, c, d)) return true;
    if (o4 == 0 && on_segment(b, c, d)) return true;
    return false;
}

double segment_segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

double signed_area(std::span<const Vec2> ring) {
    double s = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) s += cross(ring[i], ring[(i + 1) % n]);
    return 0.5 * s;
}

// ---------------------------------------------------------------------------
// Polygon

namespace {

// Index of the first vertex taking part in a self-intersection, or -1.
int first_self_intersection(const std::vector<Vec2>& v) {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = v[i], b = v[(i + 1) % n];
        // Adjacent sides must not fold back onto each other.
        const Vec2 prev = v[(i + n - 1) % n];
        if (orient(prev, a, b) == 0.0 && dot(a - prev, b - a) < 0.0) return static_cast<int>(i);
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_intersect(a, b, v[j], v[(j + 1) % n])) return static_cast<int>(i);
        }
    }
    return -1;
}

}  // namespace

Polygon::Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
    const std::size_t n = vertices_.size();
    if (n < 3) throw GeometryError("polygon needs at least three vertices");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(vertices_[i].x) || !std::isfinite(vertices_[i].y))
            throw GeometryError("polygon vertex " + std::to_string(i) + " is not finite");
        if (distance(vertices_[i], vertices_[(i + 1) % n]) <= kGeomEps)
            throw GeometryError("polygon vertices " + std::to_string(i) + " and " +
                                std::to_string((i + 1) % n) + " coincide");
    }
    if (const int bad = first_self_intersection(vertices_); bad >= 0)
        throw GeometryError("polygon is not simple (side " + std::to_string(bad) + ")");
    const double a = signed_area(vertices_);
    if (std::fabs(a) <= kGeomEps * kGeomEps) throw GeometryError("polygon has zero area");
    if (a < 0.0) std::reverse(vertices_.begin() + 1, vertices_.end());

    angles_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 din = vertices_[i] - vertices_[(i + n - 1) % n];
        const Vec2 dout = vertices_[(i + 1) % n] - vertices_[i];
        const double turn = std::atan2(cross(din, dout), dot(din, dout));
        angles_[i] = std::numbers::pi - turn;
    }
}

double Polygon::area() const { return signed_area(vertices_); }

double Polygon::perimeter() const {
    double p = 0.0;
    for (std::size_t i = 0; i < size(); ++i) p += distance(vertex(i), vertex(i + 1));
    return p;
}

double Polygon::min_side() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) m = std::min(m, distance(vertex(i), vertex(i + 1)));
    return m;
}

Vec2 Polygon::outward_normal(std::size_t i) const {
    const Vec2 e = side_end(i) - side_start(i);
    return perp_cw(e) / norm(e);
}

bool Polygon::contains(Vec2 p) const {
    if (boundary_distance(p) <= kGeomEps) return true;
    bool inside = false;
    const std::size_t n = size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = vertices_[i], b = vertices_[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xcross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xcross) inside = !inside;
        }
    }
    return inside;
}

double Polygon::boundary_distance(Vec2 p) const {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) d = std::min(d, point_segment_distance(p, vertex(i), vertex(i + 1)));
    return d;
}

bool Polygon::same_shape(const Polygon& other, double tol) const {
    if (other.size() != size()) return false;
    const std::size_t n = size();
    for (std::size_t s = 0; s < n; ++s) {
        bool all = true;
        for (std::size_t i = 0; i < n && all; ++i) all = distance(vertex(i), other.vertex(i + s)) <= tol;
        if (all) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(Polygon boundary) : boundary_(std::move(boundary)) {
    const auto& v = boundary_.vertices();
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) diameter_ = std::max(diameter_, distance(v[i], v[j]));
}

Domain Domain::box(double xmin, double ymin, double xmax, double ymax) {
    if (!(xmax > xmin && ymax > ymin)) throw GeometryError("empty box domain");
    return Domain(Polygon({{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}}));
}

Domain Domain::dilated(double margin) const { return Domain(Polygon(mitered_offset(boundary_, margin))); }

// ---------------------------------------------------------------------------
// Prior information and admissibility

void PriorInfo::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("prior information: ") + what);
    };
    need(N0 >= 3, "N0 must be at least 3");
    need(alpha0 > 0.0 && alpha0 < std::numbers::pi, "alpha0 must lie in (0, pi)");
    need(d0 > 0.0 && r0 > 0.0 && K0 > 0.0 && L > 0.0, "d0, r0, K0 and L must be positive");
    need(lambda0 > 1.0, "lambda0 must exceed 1");
    need(lambda1 > 1.0, "lambda1 must exceed 1");
}

std::map<std::string, std::string> PriorInfo::to_map() const {
    auto fmt = [](double v) {
        std::ostringstream os;
        os << std::setprecision(17) << v;
        return os.str();
    };
    return {{"N0", std::to_string(N0)}, {"alpha0", fmt(alpha0)},   {"d0", fmt(d0)},
            {"r0", fmt(r0)},           {"K0", fmt(K0)},           {"lambda0", fmt(lambda0)},
            {"lambda1", fmt(lambda1)}, {"L", fmt(L)}};
}

PriorInfo PriorInfo::from_map(const std::map<std::string, std::string>& kv) {
    PriorInfo pi;
    auto num = [&](const char* key, double& out) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        try {
            std::size_t used = 0;
            out = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument(it->second);
        } catch (const std::exception&) {
            throw ConfigError(std::string("prior information: bad value for ") + key + ": '" + it->second + "'");
        }
    };
    double n0 = pi.N0;
    num("N0", n0);
    pi.N0 = static_cast<int>(n0);
    num("alpha0", pi.alpha0);
    num("d0", pi.d0);
    num("r0", pi.r0);
    num("K0", pi.K0);
    num("lambda0", pi.lambda0);
    num("lambda1", pi.lambda1);
    num("L", pi.L);
    pi.validate();
    return pi;
}

bool AdmissibilityReport::admissible() const {
    return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.passed; });
}

const AdmissibilityClause* AdmissibilityReport::find(const std::string& name) const {
    for (const auto& c : clauses)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<std::string> AdmissibilityReport::failed() const {
    std::vector<std::string> out;
    for (const auto& c : clauses)
        if (!c.passed) out.push_back(c.name);
    return out;
}

AdmissibilityReport validate_polygon(const Polygon& P, const Domain& omega, const PriorInfo& pi) {
    AdmissibilityReport rep;
    const double n = static_cast<double>(P.size());
    rep.clauses.push_back({"vertex_count", P.size() <= static_cast<std::size_t>(pi.N0), n, double(pi.N0)});

    double worst = std::numeric_limits<double>::infinity();
    for (double a : P.angles()) worst = std::min({worst, a, 2.0 * std::numbers::pi - a});
    rep.clauses.push_back({"angles", worst >= pi.alpha0 - kAngleTol, worst, pi.alpha0});

    const double side = P.min_side();
    rep.clauses.push_back({"min_side", side >= pi.d0 - kGeomEps, side, pi.d0});

    const Polygon& outer = omega.boundary();
    double dist = std::numeric_limits<double>::infinity();
    bool crossing = false;
    for (std::size_t i = 0; i < P.size(); ++i)
        for (std::size_t j = 0; j < outer.size(); ++j) {
            const double d = segment_segment_distance(P.vertex(i), P.vertex(i + 1), outer.vertex(j), outer.vertex(j + 1));
            crossing = crossing || d == 0.0;
            dist = std::min(dist, d);
        }
    rep.clauses.push_back({"boundary_distance", dist >= pi.d0 - kGeomEps, dist, pi.d0});

    bool inside = !crossing;
    for (const Vec2& v : P.vertices()) inside = inside && outer.contains(v);
    rep.clauses.push_back({"containment", inside, inside ? 1.0 : 0.0, 1.0});
    return rep;
}

bool validate_conductivity(double k, const PriorInfo& pi) {
    const double jump = std::fabs(k - 1.0);
    return 1.0 / pi.lambda0 < k && k < pi.lambda0 && 1.0 / pi.lambda1 < jump && jump < pi.lambda1;
}

// ---------------------------------------------------------------------------
// Boolean areas via signed fan decomposition.
//
// chi_P = sum_i s_i chi_{T_i} almost everywhere, with T_i = (p_0, p_i, p_{i+1}) and
// s_i the orientation sign of T_i. Hence |P cap Q| = sum_ij s_i t_j |T_i cap U_j|,
// and every term is a convex-convex clip.

namespace {

struct Tri {
    std::array<Vec2, 3> v;
    double sign;
};

std::vector<Tri> fan(const Polygon& P) {
    std::vector<Tri> out;
    const Vec2 o = P.vertex(0);
    for (std::size_t i = 1; i + 1 < P.size(); ++i) {
        Vec2 a = P.vertex(i), b = P.vertex(i + 1);
        const double s = cross(a - o, b - o);
        if (s == 0.0) continue;
        if (s < 0.0) std::swap(a, b);
        out.push_back({{o, a, b}, s > 0.0 ? 1.0 : -1.0});
    }
    return out;
}

double convex_clip_area(const Tri& subject, const Tri& clip) {
    std::vector<Vec2> poly(subject.v.begin(), subject.v.end());
    std::vector<Vec2> next;
    for (int e = 0; e < 3 && !poly.empty(); ++e) {
        const Vec2 a = clip.v[e], b = clip.v[(e + 1) % 3];
        const Vec2 dir = b - a;
        next.clear();
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 p = poly[i], q = poly[(i + 1) % n];
            const double sp = cross(dir, p - a), sq = cross(dir, q - a);
            if (sp >= 0.0) next.push_back(p);
            if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
                const double w = sp / (sp - sq);
                next.push_back(p + w * (q - p));
            }
        }
        poly.swap(next);
    }
    if (poly.size() < 3) return 0.0;
    return std::max(0.0, signed_area(poly));
}

}  // namespace

double intersection_area(const Polygon& P1, const Polygon& P2) {
    const auto f1 = fan(P1), f2 = fan(P2);
    double s = 0.0;
    for (const auto& a : f1)
        for (const auto& b : f2) s += a.sign * b.sign * convex_clip_area(a, b);
    return std::clamp(s, 0.0, std::min(P1.area(), P2.area()));
}

BooleanAreas boolean_areas(const Polygon& P1, const Polygon& P2) {
    BooleanAreas out;
    out.intersection = intersection_area(P1, P2);
    out.first_minus_second = std::max(0.0, P1.area() - out.intersection);
    out.second_minus_first = std::max(0.0, P2.area() - out.intersection);
    return out;
}

double symmetric_difference_area(const Polygon& P1, const Polygon& P2) {
    return boolean_areas(P1, P2).symmetric_difference();
}

// ---------------------------------------------------------------------------
// Hausdorff distance between boundary curves.
//
// Along a segment p(u) = p0 + u e, the squared distance to a target segment is a
// piecewise quadratic in u with at most three pieces. The distance to the whole
// target boundary is the lower envelope of these; between envelope breakpoints it
// is convex, so its maximum sits at u = 0, u = 1, or where two pieces cross.

namespace {

struct Quadratic {
    double c2 = 0, c1 = 0, c0 = 0;
};

struct SegmentDistance {
    Vec2 a, b, p0, e;
    double w0 = 0, w1 = 0;  // projection parameter w(u) = w0 + w1 u

    SegmentDistance(Vec2 a_, Vec2 b_, Vec2 p0_, Vec2 e_) : a(a_), b(b_), p0(p0_), e(e_) {
        const Vec2 ab = b - a;
        const double l2 = dot(ab, ab);
        w0 = dot(p0 - a, ab) / l2;
        w1 = dot(e, ab) / l2;
    }

    void breakpoints(std::vector<double>& out) const {
        if (w1 != 0.0) {
            out.push_back((0.0 - w0) / w1);
            out.push_back((1.0 - w0) / w1);
        }
    }

    Quadratic piece(double u) const {
        const double w = w0 + w1 * u;
        if (w <= 0.0 || w >= 1.0) {
            const Vec2 end = w <= 0.0 ? a : b;
            const Vec2 d = p0 - end;
            return {dot(e, e), 2.0 * dot(d, e), dot(d, d)};
        }
        const Vec2 ab = b - a;
        const double l2 = dot(ab, ab);
        const double k0 = cross(ab, p0 - a), k1 = cross(ab, e);
        return {k1 * k1 / l2, 2.0 * k0 * k1 / l2, k0 * k0 / l2};
    }
};

double envelope(Vec2 p, const Polygon& B) {
    return B.boundary_distance(p);
}

void quadratic_roots(double a, double b, double c, double lo, double hi, std::vector<double>& out) {
    const double scale = std::max({std::fabs(a), std::fabs(b), std::fabs(c), 1e-300});
    if (std::fabs(a) <= 1e-14 * scale) {
        if (std::fabs(b) > 1e-14 * scale) {
            const double r = -c / b;
            if (r >= lo && r <= hi) out.push_back(r);
        }
        return;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    for (double r : {q / a, q != 0.0 ? c / q : std::numeric_limits<double>::quiet_NaN()})
        if (std::isfinite(r) && r >= lo && r <= hi) out.push_back(r);
}

double max_distance_along(Vec2 p0, Vec2 p1, const Polygon& B) {
    const Vec2 e = p1 - p0;
    std::vector<SegmentDistance> parts;
    parts.reserve(B.size());
    for (std::size_t j = 0; j < B.size(); ++j) parts.emplace_back(B.vertex(j), B.vertex(j + 1), p0, e);

    std::vector<double> candidates = {0.0, 1.0};
    std::vector<double> cuts;
    for (std::size_t j = 0; j < parts.size(); ++j)
        for (std::size_t l = j + 1; l < parts.size(); ++l) {
            cuts.assign({0.0, 1.0});
            parts[j].breakpoints(cuts);
            parts[l].breakpoints(cuts);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                const double lo = std::max(0.0, cuts[c]), hi = std::min(1.0, cuts[c + 1]);
                if (!(hi > lo)) continue;
                const double mid = 0.5 * (lo + hi);
                const Quadratic qj = parts[j].piece(mid), ql = parts[l].piece(mid);
                quadratic_roots(qj.c2 - ql.c2, qj.c1 - ql.c1, qj.c0 - ql.c0, lo, hi, candidates);
            }
        }
    double best = 0.0;
    for (double u : candidates) best = std::max(best, envelope(p0 + u * e, B));
    return best;
}

}  // namespace

double directed_hausdorff_boundary(const Polygon& A, const Polygon& B) {
    double d = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) d = std::max(d, max_distance_along(A.vertex(i), A.vertex(i + 1), B));
    return d;
}

double hausdorff_boundary(const Polygon& P1, const Polygon& P2) {
    return std::max(directed_hausdorff_boundary(P1, P2), directed_hausdorff_boundary(P2, P1));
}

// ---------------------------------------------------------------------------
// Vertex matching

Polygon VertexCorrespondence::aligned_second() const {
    std::vector<Vec2> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = target(i);
    return Polygon(std::move(v));
}

VertexCorrespondence match_vertices(const Polygon& P1, const Polygon& P2) {
    if (P1.size() != P2.size())
        throw MatchImpossible("vertex counts differ: " + std::to_string(P1.size()) + " vs " +
                              std::to_string(P2.size()));
    const std::size_t n = P1.size();
    VertexCorrespondence best{P1, P2, 0, std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::infinity()};
    for (std::size_t s = 0; s < n; ++s) {
        double mx = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = distance(P1.vertex(i), P2.vertex(i + s));
            mx = std::max(mx, d);
            sum += d;
        }
        if (mx < best.max_distance || (mx == best.max_distance && sum < best.sum_distance)) {
            best.shift = s;
            best.max_distance = mx;
            best.sum_distance = sum;
        }
    }
    return best;
}

double total_vertex_displacement(const VertexCorrespondence& corr) {
    double s = 0.0;
    for (std::size_t i = 0; i < corr.size(); ++i) s += norm(corr.displacement(i));
    return s;
}

DiffNorms conductivity_diff_norms(const PiecewiseConductivity& c1, const PiecewiseConductivity& c2) {
    const BooleanAreas a = boolean_areas(c1.polygon, c2.polygon);
    const double j1 = c1.k - 1.0, j2 = c2.k - 1.0, j12 = c1.k - c2.k;
    DiffNorms out;
    out.l1 = std::fabs(j1) * a.first_minus_second + std::fabs(j2) * a.second_minus_first +
             std::fabs(j12) * a.intersection;
    out.l2 = std::sqrt(j1 * j1 * a.first_minus_second + j2 * j2 * a.second_minus_first + j12 * j12 * a.intersection);
    return out;
}

Polygon apply_flow(const VertexCorrespondence& corr, double t) {
    std::vector<Vec2> v(corr.size());
    for (std::size_t i = 0; i < corr.size(); ++i) v[i] = corr.source(i) + t * corr.displacement(i);
    if (t == 1.0)
        for (std::size_t i = 0; i < corr.size(); ++i) v[i] = corr.target(i);
    if (signed_area(v) <= 0.0) throw FlowDegenerate("flowed polygon lost its orientation at t=" + std::to_string(t));
    try {
        return Polygon(std::move(v));
    } catch (const GeometryError& e) {
        throw FlowDegenerate(std::string("flowed polygon is degenerate: ") + e.what());
    }
}

std::vector<Vec2> mitered_offset(const Polygon& P, double d) {
    const std::size_t n = P.size();
    std::vector<Vec2> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 na = P.outward_normal((i + n - 1) % n), nb = P.outward_normal(i);
        const double denom = 1.0 + dot(na, nb);
        if (denom < 1e-8) throw OffsetError("offset undefined at a cusp vertex " + std::to_string(i), int(i));
        out[i] = P.vertex(i) + (d / denom) * (na + nb);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 side = P.vertex(i + 1) - P.vertex(i);
        if (dot(out[(i + 1) % n] - out[i], side) <= 0.0)
            throw OffsetError("offset side " + std::to_string(i) + " collapses", int(i));
    }
    if (const int bad = first_self_intersection(out); bad >= 0)
        throw OffsetError("offset polygon self-intersects near vertex " + std::to_string(bad), bad);
    return out;
}

// ---------------------------------------------------------------------------
// Exchange format

Polygon read_polygon(std::istream& in) {
    std::vector<Vec2> v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double x, y;
        if (!(ls >> x)) continue;
        std::string rest;
        if (!(ls >> y) || (ls >> rest))
            throw ConfigError("polygon record on line " + std::to_string(lineno) + " is not 'x y'");
        v.push_back({x, y});
    }
    return Polygon(std::move(v));
}

Polygon read_polygon_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open polygon file '" + path + "'");
    return read_polygon(in);
}

void write_polygon(std::ostream& out, const Polygon& P) {
    out << std::setprecision(17);
    for (const Vec2& v : P.vertices()) out << v.x << ' ' << v.y << '\n';
}

}  // namespace eitlab
