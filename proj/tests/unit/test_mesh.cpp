#include "common.hpp"

#include "eitlab/deformation.hpp"
#include "eitlab/errors.hpp"
#include "eitlab/mesh.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace eitlab;
using namespace eitlab::testing;

namespace {

void expect_invariants(const TriMesh& m) {
    double total = 0.0, inside = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const double a = m.area(t);
        ASSERT_GT(a, 0.0);
        total += a;
        for (std::size_t p = 0; p < m.interfaces().size(); ++p) {
            EXPECT_EQ(m.inside(t, p), ray_inside(m.interfaces()[p].vertices(), m.centroid(t)));
            if (p == 0 && m.inside(t, p)) inside += a;
        }
    }
    EXPECT_NEAR(total, m.domain().area(), 1e-12 * m.domain().area());
    if (!m.interfaces().empty()) EXPECT_NEAR(inside, m.interfaces()[0].area(), 1e-10 * m.interfaces()[0].area());

    // Boundary cycle closed and counterclockwise.
    const auto& be = m.boundary_edges();
    for (std::size_t i = 0; i < be.size(); ++i) EXPECT_EQ(be[i].b, be[(i + 1) % be.size()].a);
    double len = 0.0;
    for (const auto& e : be) len += distance(m.nodes()[e.a], m.nodes()[e.b]);
    EXPECT_NEAR(len, m.domain().perimeter(), 1e-12);

    // Interface edges partition every side of every polygon.
    for (std::size_t p = 0; p < m.interfaces().size(); ++p) {
        const Polygon& P = m.interfaces()[p];
        std::vector<double> per_side(P.size(), 0.0);
        for (const auto& e : m.interface_edges(p)) {
            const Vec2 a = m.nodes()[e.a], b = m.nodes()[e.b];
            const Vec2 s0 = P.side_start(e.side), s1 = P.side_end(e.side);
            EXPECT_LT(seg_dist(a, s0, s1), kGeomEps);
            EXPECT_LT(seg_dist(b, s0, s1), kGeomEps);
            EXPECT_NEAR(dot(e.normal, P.outward_normal(e.side)), 1.0, 1e-12);
            EXPECT_TRUE(m.inside(e.inside_tri, p));
            EXPECT_FALSE(m.inside(e.outside_tri, p));
            per_side[e.side] += e.length;
        }
        for (std::size_t s = 0; s < P.size(); ++s)
            EXPECT_NEAR(per_side[s], distance(P.side_start(s), P.side_end(s)), 1e-12);
    }
}

}  // namespace

TEST(Triangulate, SquareInSquarePostconditions) {
    MeshReport rep;
    MeshOptions o;
    o.target_h = 0.1;
    const TriMesh m = triangulate(unit_box(), square(0.3), o, &rep);
    expect_invariants(m);
    EXPECT_LE(m.h_max(), 0.1 + 1e-12);
    EXPECT_GE(rep.min_angle_deg, 20.0);
    EXPECT_EQ(rep.bad_triangles, 0u);
}

TEST(Triangulate, GradingNearCorners) {
    MeshOptions o;
    o.target_h = 0.1;
    o.grading = 4.0;
    const TriMesh m = triangulate(unit_box(), square(0.3), o);
    expect_invariants(m);
    const Polygon P = square(0.3);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangles()[t];
        double d = 1e9;
        for (Vec2 v : P.vertices())
            d = std::min(d, point_triangle_distance(v, m.nodes()[tri[0]], m.nodes()[tri[1]], m.nodes()[tri[2]]));
        if (d <= o.corner_radius) EXPECT_LE(m.diameter(t), 0.025 + 1e-12);
    }
}

TEST(Triangulate, CountGrowthUnderHalving) {
    MeshOptions o;
    o.target_h = 0.1;
    const auto n1 = triangulate(unit_box(), square(0.3), o).num_triangles();
    o.target_h = 0.05;
    const auto n2 = triangulate(unit_box(), square(0.3), o).num_triangles();
    const double ratio = static_cast<double>(n2) / n1;
    EXPECT_GT(ratio, 4.0 * 0.7);
    EXPECT_LT(ratio, 4.0 * 1.3);
}

TEST(Triangulate, NonConvexAndCrossingInterfaces) {
    Polygon L({{-0.5, -0.5}, {0.5, -0.5}, {0.5, -0.1}, {-0.1, -0.1}, {-0.1, 0.5}, {-0.5, 0.5}});
    Polygon Q({{-0.3, -0.3}, {0.3, -0.35}, {0.35, 0.3}, {-0.3, 0.3}});
    MeshOptions o;
    o.target_h = 0.08;
    const TriMesh m = triangulate(unit_box(), {L, Q}, o);
    expect_invariants(m);
    EXPECT_EQ(m.interfaces().size(), 2u);
}

TEST(Triangulate, NodeBudget) {
    MeshOptions o;
    o.target_h = 0.01;
    o.max_nodes = 500;
    EXPECT_THROW(triangulate(unit_box(), square(0.3), o), MeshQualityError);
}

TEST(Refine, RedRefinement) {
    const TriMesh m = square_mesh(0.2);
    const TriMesh r = refine(m);
    EXPECT_EQ(r.num_triangles(), 4 * m.num_triangles());
    EXPECT_EQ(r.interface_edges(0).size(), 2 * m.interface_edges(0).size());
    EXPECT_EQ(r.boundary_edges().size(), 2 * m.boundary_edges().size());
    for (std::size_t i = 0; i < m.num_nodes(); ++i) EXPECT_EQ(r.nodes()[i], m.nodes()[i]);
    expect_invariants(r);
    EXPECT_NEAR(r.h_max(), 0.5 * m.h_max(), 1e-12);
}

TEST(Transport, KeepsConnectivity) {
    const TriMesh m = square_mesh(0.1);
    std::vector<Vec2> d(m.num_nodes(), Vec2{0.0, 0.0});
    const TriMesh same = m.transported(d, m.interfaces());
    EXPECT_EQ(same.id(), m.id());
    const Polygon P = square(0.3);
    for (std::size_t i = 0; i < m.num_nodes(); ++i)
        if (m.boundary_index(static_cast<int>(i)) < 0 && P.boundary_distance(m.nodes()[i]) > 0.05)
            d[i] = {0.002 * m.nodes()[i].y, 0.0};
    const TriMesh moved = m.transported(d, m.interfaces());
    EXPECT_NE(moved.id(), m.id());
    EXPECT_EQ(moved.triangles(), m.triangles());
}

TEST(Locator, FindsContainingTriangle) {
    const TriMesh m = square_mesh(0.1);
    MeshLocator loc(m);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const Vec2 p{u(rng), u(rng)};
        const auto hit = loc.locate(p);
        ASSERT_GE(hit.tri, 0);
        const auto& t = m.triangles()[hit.tri];
        Vec2 q{0, 0};
        for (int j = 0; j < 3; ++j) {
            EXPECT_GE(hit.bary[j], -1e-12);
            q += hit.bary[j] * m.nodes()[t[j]];
        }
        EXPECT_NEAR(distance(p, q), 0.0, 1e-12);
    }
    EXPECT_EQ(loc.locate({2.0, 0.0}).tri, -1);
}

TEST(MeshIo, DumpHasOneLinePerRecord) {
    const TriMesh m = square_mesh(0.3);
    std::ostringstream s;
    write_mesh(s, m);
    const std::string text = s.str();
    EXPECT_NE(text.find("nodes " + std::to_string(m.num_nodes())), std::string::npos);
    EXPECT_NE(text.find("triangles " + std::to_string(m.num_triangles())), std::string::npos);
}

TEST(Deformation, TranslationAndZeroField) {
    const TriMesh m = square_mesh(0.05);
    const Polygon P = square(0.3);
    const Vec2 d{0.02, 0.0};
    const auto h = build_deformation(P, std::vector<Vec2>(4, d), m, 0.05);
    for (std::size_t s = 0; s < 4; ++s) {
        const Vec2 mid = 0.5 * (P.side_start(s) + P.side_end(s));
        EXPECT_NEAR(distance(h.evaluate(mid), d), 0.0, 1e-15);
    }
    EXPECT_EQ(h.evaluate({0.9, 0.9}), (Vec2{0, 0}));
    const auto z = build_deformation(P, std::vector<Vec2>(4, Vec2{0, 0}), m, 0.05);
    EXPECT_TRUE(z.is_zero());
    EXPECT_EQ(z.w1inf(), 0.0);
    const Polygon half = apply_flow(h, 0.5);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(distance(half.vertex(i), P.vertex(i) + 0.5 * d), 0.0, 1e-15);
    EXPECT_EQ(apply_flow(h, 0.0).vertices(), P.vertices());
}

TEST(Deformation, SingleVertexMove) {
    const TriMesh m = square_mesh(0.05, 4.0);
    const Polygon P = square(0.3);
    const double taper = 0.05;
    std::vector<Vec2> V(4, Vec2{0, 0});
    V[2] = {0.01, 0.0};
    const auto h = build_deformation(P, V, m, taper);
    for (std::size_t i = 0; i < 4; ++i) {
        const Vec2 hv = h.evaluate(P.vertex(i));
        EXPECT_NEAR(distance(hv, V[i]), 0.0, 1e-15);
    }
    // Nodal values agree with direct evaluation.
    for (std::size_t i = 0; i < m.num_nodes(); ++i)
        EXPECT_NEAR(distance(h.values()[i], h.evaluate(m.nodes()[i])), 0.0, 1e-14);
    // Radial slope |move| / taper, and the side slope |move| / side length.
    EXPECT_LE(h.lipschitz(), 2.0 * 0.01 / taper + 1e-12);
    EXPECT_GE(h.lipschitz(), 0.01 / taper - 1e-12);
}

TEST(Deformation, CorrespondenceFlowsExactly) {
    const TriMesh m = square_mesh(0.05);
    const Polygon P = square(0.3);
    const Polygon Q({{-0.28, -0.31}, {0.32, -0.29}, {0.3, 0.33}, {-0.31, 0.29}});
    const auto corr = match_vertices(P, Q);
    const auto h = build_deformation(corr, m, 0.05);
    EXPECT_EQ(h.flowed(1.0).vertices(), corr.aligned_second().vertices());
    EXPECT_EQ(apply_flow(h, 1.0).vertices(), corr.aligned_second().vertices());
}

TEST(Deformation, OffsetErrorNamesVertex) {
    const TriMesh m = square_mesh(0.1);
    const Polygon P = square(0.3);
    try {
        build_deformation(P, std::vector<Vec2>(4, Vec2{0, 0}), m, 0.35);
        FAIL() << "inner offset of a 0.6 square by 0.35 cannot be simple";
    } catch (const OffsetError& e) {
        EXPECT_GE(e.vertex(), 0);
    }
}
