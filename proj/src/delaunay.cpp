#include "delaunay.hpp"

#include "eitlab/errors.hpp"
#include "eitlab/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace eitlab::detail {
namespace {

constexpr int kNone = -1;
constexpr int kInputVertex = -1;
constexpr int kFree = -2;
constexpr int kSuper = -3;

struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> n{kNone, kNone, kNone};  // n[i] lies across the edge opposite v[i]
    bool alive = true;
};

struct CavityEdge {
    int a, b, outside;
};

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

double in_circle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double pa[2]{a.x, a.y}, pb[2]{b.x, b.y}, pc[2]{c.x, c.y}, pd[2]{d.x, d.y};
    return predicates::incircle(pa, pb, pc, pd);
}

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
    const Vec2 ab = b - a, ac = c - a;
    const double d = 2.0 * cross(ab, ac);
    const double ab2 = dot(ab, ab), ac2 = dot(ac, ac);
    return a + Vec2{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
}

double min_angle_of(Vec2 a, Vec2 b, Vec2 c) {
    const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
    auto ang = [](double opp, double s1, double s2) {
        return std::acos(std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0));
    };
    return std::min({ang(la, lb, lc), ang(lb, lc, la), ang(lc, la, lb)});
}

class Refiner {
public:
    Refiner(const Pslg& g, const RefineLimits& lim);
    RefineOutput run();

private:
    Vec2 P(int i) const { return pts_[i]; }
    int new_tri(int a, int b, int c);
    int locate(Vec2 p, int start);
    void build_cavity(Vec2 p, int t);
    int commit(Vec2 p, int owner);
    int insert_point(Vec2 p, int owner, int hint);
    int tri_of(int vertex);

    template <class F>
    void around(int a, F&& visit);
    bool edge_exists(int a, int b);
    bool encroached(int a, int b);
    bool subsegment(int a, int b) const { return subseg_.count(edge_key(a, b)) != 0; }
    void split_subsegment(int a, int b);
    void recover_segments();

    struct Walk {
        int tri = kNone;
        int cross_a = kNone, cross_b = kNone;
    };
    Walk walk_to(int t, Vec2 target);

    bool has_super(int t) const;
    bool in_region(int t) const;
    bool badly_shaped(int t) const;
    bool oversized(int t) const;
    bool exempt(int t) const;
    bool small_angle_pair(int p, int q) const;
    void queue_triangle(int t) { bad_queue_.push_back({t, tris_[t].v}); }
    void refine_triangles();

    const RefineLimits& lim_;
    double quality_bound_;
    std::vector<Vec2> pts_;
    std::vector<int> owner_;
    std::vector<std::array<int, 2>> segs_;
    std::unordered_map<int, std::vector<int>> incident_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    std::vector<int> vtri_;
    std::vector<unsigned> mark_;
    unsigned stamp_ = 0;
    std::vector<int> cavity_;
    std::vector<CavityEdge> rim_;
    std::unordered_map<std::uint64_t, int> subseg_;
    std::deque<std::array<int, 2>> seg_queue_;
    std::deque<std::pair<int, std::array<int, 3>>> bad_queue_;
    std::size_t steiner_ = 0;
    int last_ = 0;
};

Refiner::Refiner(const Pslg& g, const RefineLimits& lim)
    : lim_(lim), quality_bound_(1.0 / (2.0 * std::sin(lim.min_angle_deg * std::numbers::pi / 180.0))) {
    Vec2 lo = g.points.front(), hi = lo;
    for (Vec2 p : g.points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const Vec2 c = 0.5 * (lo + hi);
    const double m = 50.0 * std::max({hi.x - lo.x, hi.y - lo.y, 1e-3});
    pts_ = {c + Vec2{-m, -m}, c + Vec2{m, -m}, c + Vec2{0.0, m}};
    owner_ = {kSuper, kSuper, kSuper};
    vtri_ = {0, 0, 0};
    new_tri(0, 1, 2);

    segs_.reserve(g.segments.size());
    for (const auto& s : g.segments) {
        const int id = static_cast<int>(segs_.size());
        segs_.push_back({s[0] + 3, s[1] + 3});
        incident_[s[0] + 3].push_back(id);
        incident_[s[1] + 3].push_back(id);
    }

    std::vector<int> index(g.points.size());
    for (std::size_t i = 0; i < g.points.size(); ++i) {
        index[i] = insert_point(g.points[i], g.owner[i], last_);
        if (index[i] != static_cast<int>(i) + 3)
            throw GeometryError("mesh input contains coincident points");
    }
    steiner_ = 0;
    for (const auto& pc : g.pieces) {
        subseg_[edge_key(pc[0] + 3, pc[1] + 3)] = pc[2];
        seg_queue_.push_back({pc[0] + 3, pc[1] + 3});
    }
}

int Refiner::new_tri(int a, int b, int c) {
    int t;
    if (!free_.empty()) {
        t = free_.back();
        free_.pop_back();
        tris_[t] = Tri{};
    } else {
        t = static_cast<int>(tris_.size());
        tris_.emplace_back();
        mark_.push_back(0);
    }
    tris_[t].v = {a, b, c};
    return t;
}

int Refiner::tri_of(int vertex) {
    const int t = vtri_[vertex];
    const Tri& T = tris_[t];
    if (T.alive && (T.v[0] == vertex || T.v[1] == vertex || T.v[2] == vertex)) return t;
    for (std::size_t i = 0; i < tris_.size(); ++i) {
        const Tri& U = tris_[i];
        if (U.alive && (U.v[0] == vertex || U.v[1] == vertex || U.v[2] == vertex)) {
            vtri_[vertex] = static_cast<int>(i);
            return static_cast<int>(i);
        }
    }
    throw MeshQualityError("triangulation lost a vertex");
}

int Refiner::locate(Vec2 p, int start) {
    int t = (start >= 0 && start < static_cast<int>(tris_.size()) && tris_[start].alive) ? start : kNone;
    if (t == kNone) {
        for (std::size_t i = 0; i < tris_.size(); ++i)
            if (tris_[i].alive) { t = static_cast<int>(i); break; }
    }
    const std::size_t cap = 4 * tris_.size() + 64;
    for (std::size_t step = 0; step < cap; ++step) {
        const Tri& T = tris_[t];
        int exit = kNone;
        for (int k = 0; k < 3; ++k) {
            const int i = static_cast<int>((k + step) % 3);
            if (orient(P(T.v[(i + 1) % 3]), P(T.v[(i + 2) % 3]), p) < 0.0) { exit = i; break; }
        }
        if (exit == kNone) return t;
        t = T.n[exit];
        if (t == kNone) return kNone;
    }
    for (std::size_t i = 0; i < tris_.size(); ++i) {
        const Tri& T = tris_[i];
        if (T.alive && orient(P(T.v[0]), P(T.v[1]), p) >= 0.0 && orient(P(T.v[1]), P(T.v[2]), p) >= 0.0 &&
            orient(P(T.v[2]), P(T.v[0]), p) >= 0.0)
            return static_cast<int>(i);
    }
    return kNone;
}

void Refiner::build_cavity(Vec2 p, int t) {
    ++stamp_;
    cavity_.clear();
    rim_.clear();
    std::vector<int> stack{t};
    mark_[t] = stamp_;
    while (!stack.empty()) {
        const int c = stack.back();
        stack.pop_back();
        cavity_.push_back(c);
        const Tri& T = tris_[c];
        for (int i = 0; i < 3; ++i) {
            const int nb = T.n[i];
            if (nb != kNone && mark_[nb] == stamp_) continue;
            if (nb != kNone) {
                const Tri& N = tris_[nb];
                if (in_circle(P(N.v[0]), P(N.v[1]), P(N.v[2]), p) > 0.0) {
                    mark_[nb] = stamp_;
                    stack.push_back(nb);
                    continue;
                }
            }
            rim_.push_back({T.v[(i + 1) % 3], T.v[(i + 2) % 3], nb});
        }
    }
}

int Refiner::commit(Vec2 p, int owner) {
    if (pts_.size() >= lim_.max_points + 3) {
        std::ostringstream msg;
        msg << "node budget of " << lim_.max_points << " exhausted near (" << p.x << ", " << p.y << ")";
        throw MeshQualityError(msg.str());
    }
    const int v = static_cast<int>(pts_.size());
    pts_.push_back(p);
    owner_.push_back(owner);
    vtri_.push_back(kNone);
    if (owner != kInputVertex) ++steiner_;

    for (int c : cavity_) {
        const Tri& T = tris_[c];
        for (int i = 0; i < 3; ++i) {
            const int a = T.v[i], b = T.v[(i + 1) % 3];
            if (subsegment(a, b)) seg_queue_.push_back({a, b});
        }
    }
    for (int c : cavity_) {
        tris_[c].alive = false;
        free_.push_back(c);
    }

    std::unordered_map<int, int> starting, ending;
    std::vector<int> created;
    created.reserve(rim_.size());
    for (const CavityEdge& e : rim_) {
        const int t = new_tri(v, e.a, e.b);
        tris_[t].n[0] = e.outside;
        if (e.outside != kNone) {
            Tri& N = tris_[e.outside];
            for (int j = 0; j < 3; ++j)
                if (N.v[j] != e.a && N.v[j] != e.b) N.n[j] = t;
        }
        starting[e.a] = t;
        ending[e.b] = t;
        vtri_[e.a] = t;
        vtri_[e.b] = t;
        created.push_back(t);
    }
    for (int t : created) {
        Tri& T = tris_[t];
        T.n[1] = starting.at(T.v[2]);
        T.n[2] = ending.at(T.v[1]);
    }
    vtri_[v] = created.front();
    last_ = created.front();
    for (int t : created) queue_triangle(t);
    return v;
}

int Refiner::insert_point(Vec2 p, int owner, int hint) {
    const int t = locate(p, hint);
    if (t == kNone) throw MeshQualityError("point outside the enclosing triangle");
    for (int i : tris_[t].v)
        if (P(i) == p) return i;
    build_cavity(p, t);
    return commit(p, owner);
}

template <class F>
void Refiner::around(int a, F&& visit) {
    const int start = tri_of(a);
    for (int dir = 1; dir <= 2; ++dir) {
        int cur = start;
        do {
            if (dir == 1 || cur != start)
                if (visit(cur)) return;
            const Tri& T = tris_[cur];
            int i = 0;
            while (T.v[i] != a) ++i;
            cur = T.n[(i + dir) % 3];
        } while (cur != kNone && cur != start);
        if (cur == start) return;
    }
}

bool Refiner::edge_exists(int a, int b) {
    bool found = false;
    around(a, [&](int t) {
        const Tri& T = tris_[t];
        found = T.v[0] == b || T.v[1] == b || T.v[2] == b;
        return found;
    });
    return found;
}

bool Refiner::encroached(int a, int b) {
    const Vec2 A = P(a), B = P(b);
    bool hit = false;
    around(a, [&](int t) {
        const Tri& T = tris_[t];
        if (T.v[0] != b && T.v[1] != b && T.v[2] != b) return false;
        for (int c : T.v) {
            if (c == a || c == b) continue;
            if (dot(A - P(c), B - P(c)) < 0.0) hit = true;
        }
        return hit;
    });
    return hit;
}

void Refiner::split_subsegment(int a, int b) {
    const auto it = subseg_.find(edge_key(a, b));
    if (it == subseg_.end()) return;
    const int s = it->second;
    subseg_.erase(it);

    const Vec2 A = P(a), B = P(b);
    const bool ia = owner_[a] == kInputVertex, ib = owner_[b] == kInputVertex;
    Vec2 m = 0.5 * (A + B);
    if (ia != ib) {
        // Concentric shells: split at a power-of-two distance from the input vertex,
        // so that splits on segments sharing that vertex stay at matching radii.
        const Vec2 from = ia ? A : B, to = ia ? B : A;
        const double len = distance(A, B);
        const double r = std::exp2(std::round(std::log2(0.5 * len)));
        m = from + (r / len) * (to - from);
    }
    const int v = insert_point(m, s, tri_of(a));
    subseg_[edge_key(a, v)] = s;
    subseg_[edge_key(v, b)] = s;
    seg_queue_.push_back({a, v});
    seg_queue_.push_back({v, b});
}

void Refiner::recover_segments() {
    while (!seg_queue_.empty()) {
        const auto [a, b] = seg_queue_.front();
        seg_queue_.pop_front();
        if (!subsegment(a, b)) continue;
        if (!edge_exists(a, b) || encroached(a, b)) split_subsegment(a, b);
    }
}

Refiner::Walk Refiner::walk_to(int t, Vec2 target) {
    const Tri& T0 = tris_[t];
    const Vec2 o = (P(T0.v[0]) + P(T0.v[1]) + P(T0.v[2])) / 3.0;
    const std::size_t cap = 4 * tris_.size() + 64;
    for (std::size_t step = 0; step < cap; ++step) {
        const Tri& T = tris_[t];
        int exit = kNone, fallback = kNone;
        for (int i = 0; i < 3; ++i) {
            const int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
            if (orient(P(a), P(b), target) >= 0.0) continue;
            if (fallback == kNone) fallback = i;
            const double sa = orient(o, target, P(a)), sb = orient(o, target, P(b));
            if ((sa <= 0.0 && sb >= 0.0) || (sa >= 0.0 && sb <= 0.0)) { exit = i; break; }
        }
        if (exit == kNone) exit = fallback;
        if (exit == kNone) return {t};
        const int a = T.v[(exit + 1) % 3], b = T.v[(exit + 2) % 3];
        if (subsegment(a, b)) return {kNone, a, b};
        t = T.n[exit];
        if (t == kNone) return {};
    }
    return {};
}

bool Refiner::has_super(int t) const {
    for (int v : tris_[t].v)
        if (v < 3) return true;
    return false;
}

bool Refiner::in_region(int t) const {
    const Tri& T = tris_[t];
    return !has_super(t) && lim_.inside((P(T.v[0]) + P(T.v[1]) + P(T.v[2])) / 3.0);
}

bool Refiner::badly_shaped(int t) const {
    const Tri& T = tris_[t];
    const Vec2 a = P(T.v[0]), b = P(T.v[1]), c = P(T.v[2]);
    const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
    const double area2 = std::abs(cross(b - a, c - a));
    const double shortest = std::min({la, lb, lc});
    const double R = la * lb * lc / (2.0 * area2);
    return R > quality_bound_ * shortest;
}

bool Refiner::oversized(int t) const {
    const Tri& T = tris_[t];
    const Vec2 a = P(T.v[0]), b = P(T.v[1]), c = P(T.v[2]);
    const double longest = std::max({distance(a, b), distance(b, c), distance(c, a)});
    return longest > lim_.size(a, b, c);
}

bool Refiner::small_angle_pair(int p, int q) const {
    auto segments_of = [&](int v) -> std::vector<int> {
        if (owner_[v] >= 0) return {owner_[v]};
        if (owner_[v] == kInputVertex) {
            const auto it = incident_.find(v);
            if (it != incident_.end()) return it->second;
        }
        return {};
    };
    const std::vector<int> sp = segments_of(p), sq = segments_of(q);
    for (int s1 : sp) {
        for (int s2 : sq) {
            if (s1 == s2) continue;
            const auto [a1, b1] = segs_[s1];
            const auto [a2, b2] = segs_[s2];
            int apex = kNone;
            if (a1 == a2 || a1 == b2) apex = a1;
            else if (b1 == a2 || b1 == b2) apex = b1;
            if (apex == kNone) continue;
            const Vec2 d1 = P(a1 == apex ? b1 : a1) - P(apex);
            const Vec2 d2 = P(a2 == apex ? b2 : a2) - P(apex);
            const double angle = std::atan2(std::abs(cross(d1, d2)), dot(d1, d2));
            if (angle < std::numbers::pi / 3.0 + 1e-9) return true;
        }
    }
    return false;
}

bool Refiner::exempt(int t) const {
    const Tri& T = tris_[t];
    int best = 0;
    double shortest = INFINITY;
    for (int i = 0; i < 3; ++i) {
        const double l = distance(P(T.v[(i + 1) % 3]), P(T.v[(i + 2) % 3]));
        if (l < shortest) { shortest = l; best = i; }
    }
    if (shortest < lim_.length_floor) return true;
    return small_angle_pair(T.v[(best + 1) % 3], T.v[(best + 2) % 3]);
}

void Refiner::refine_triangles() {
    bad_queue_.clear();
    for (std::size_t t = 0; t < tris_.size(); ++t)
        if (tris_[t].alive) queue_triangle(static_cast<int>(t));
    while (!bad_queue_.empty()) {
        if (!seg_queue_.empty()) {
            recover_segments();
            continue;
        }
        const auto [t, verts] = bad_queue_.front();
        bad_queue_.pop_front();
        if (!tris_[t].alive || tris_[t].v != verts || !in_region(t)) continue;
        if (!oversized(t) && !(badly_shaped(t) && !exempt(t))) continue;

        const Tri& T = tris_[t];
        const Vec2 c = circumcenter(P(T.v[0]), P(T.v[1]), P(T.v[2]));
        const Walk w = walk_to(t, c);
        if (w.cross_a != kNone) {
            split_subsegment(w.cross_a, w.cross_b);
            bad_queue_.push_back({t, verts});
            continue;
        }
        if (w.tri == kNone) continue;

        build_cavity(c, w.tri);
        std::vector<std::array<int, 2>> hit;
        for (int q : cavity_) {
            const Tri& Q = tris_[q];
            for (int i = 0; i < 3; ++i) {
                const int a = Q.v[i], b = Q.v[(i + 1) % 3];
                if (subsegment(a, b) && dot(P(a) - c, P(b) - c) < 0.0) hit.push_back({a, b});
            }
        }
        if (!hit.empty()) {
            for (const auto& [a, b] : hit) split_subsegment(a, b);
            bad_queue_.push_back({t, verts});
            continue;
        }
        bool coincident = false;
        for (int q : cavity_)
            for (int v : tris_[q].v) coincident = coincident || P(v) == c;
        if (coincident) continue;
        commit(c, kFree);
    }
}

RefineOutput Refiner::run() {
    recover_segments();
    refine_triangles();
    recover_segments();

    RefineOutput out;
    std::vector<int> remap(pts_.size(), kNone);
    for (std::size_t t = 0; t < tris_.size(); ++t) {
        if (!tris_[t].alive || !in_region(static_cast<int>(t))) continue;
        std::array<int, 3> tri{};
        for (int i = 0; i < 3; ++i) {
            const int v = tris_[t].v[i];
            if (remap[v] == kNone) {
                remap[v] = static_cast<int>(out.points.size());
                out.points.push_back(P(v));
            }
            tri[i] = remap[v];
        }
        out.triangles.push_back(tri);
        const Tri& T = tris_[t];
        const double ang = min_angle_of(P(T.v[0]), P(T.v[1]), P(T.v[2])) * 180.0 / std::numbers::pi;
        out.min_angle_deg = std::min(out.min_angle_deg, ang);
        if (ang < 20.0) {
            if (exempt(static_cast<int>(t))) ++out.exempt;
            else ++out.bad;
        }
    }
    out.steiner = steiner_;
    return out;
}

}  // namespace

RefineOutput delaunay_refine(const Pslg& pslg, const RefineLimits& limits) {
    if (pslg.points.size() < 3) throw GeometryError("mesh input needs at least three points");
    Refiner r(pslg, limits);
    return r.run();
}

}  // namespace eitlab::detail
