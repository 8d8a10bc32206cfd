#pragma once

#include "eitlab/geometry.hpp"
#include "eitlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace eitlab::testing {

inline Polygon square(double half, Vec2 c = {0.0, 0.0}) {
    return Polygon({{c.x - half, c.y - half}, {c.x + half, c.y - half}, {c.x + half, c.y + half},
                    {c.x - half, c.y + half}});
}

inline Domain unit_box() { return Domain::box(-1.0, -1.0, 1.0, 1.0); }

inline PriorInfo standard_prior() { return PriorInfo{}; }

inline TriMesh square_mesh(double h, double grading = 1.0, double k_half = 0.3) {
    MeshOptions o;
    o.target_h = h;
    o.grading = grading;
    return triangulate(unit_box(), square(k_half), o);
}

/// Random convex polygon: sorted angles on a circle with jittered radius.
inline Polygon random_convex(std::mt19937_64& rng, std::size_t n, Vec2 c, double r) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> th(n);
    for (;;) {
        for (auto& t : th) t = 2.0 * M_PI * u(rng);
        std::sort(th.begin(), th.end());
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double gap = (i + 1 < n ? th[i + 1] : th[0] + 2.0 * M_PI) - th[i];
            if (gap < 0.3 || gap > M_PI - 0.2) ok = false;
        }
        if (ok) break;
    }
    std::vector<Vec2> v;
    for (double t : th) v.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
    return Polygon(v);
}

/// Even-odd ray casting, written independently of Polygon::contains.
inline bool ray_inside(const std::vector<Vec2>& v, Vec2 p) {
    bool in = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y) &&
            p.x < (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x)
            in = !in;
    }
    return in;
}

inline double seg_dist(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    double t = dot(p - a, d) / dot(d, d);
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * d));
}

/// Points spread along the boundary by arclength, vertices included.
inline std::vector<Vec2> boundary_samples(const Polygon& P, std::size_t count) {
    std::vector<Vec2> out;
    const double step = P.perimeter() / static_cast<double>(count);
    for (std::size_t i = 0; i < P.size(); ++i) {
        const Vec2 a = P.vertex(i), b = P.vertex(i + 1);
        const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(a, b) / step)));
        for (std::size_t j = 0; j < m; ++j) out.push_back(a + (static_cast<double>(j) / m) * (b - a));
    }
    return out;
}

}  // namespace eitlab::testing
