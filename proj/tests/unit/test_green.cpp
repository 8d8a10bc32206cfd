#include "common.hpp"

#include "eitlab/errors.hpp"
#include "eitlab/green.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <sstream>

using namespace eitlab;
using namespace eitlab::testing;

namespace {

const Domain& omega0() {
    static const Domain d = green_domain(unit_box(), PriorInfo{});
    return d;
}

/// Solver for an inclusion on a uniform mesh of the extended domain.
GreenSolver make_solver(const PiecewiseConductivity& c, double h, std::vector<SizeSpot> spots = {}) {
    static std::vector<std::unique_ptr<TriMesh>> keep;  // solvers reference their mesh
    MeshOptions o;
    o.target_h = h;
    o.spots = std::move(spots);
    keep.push_back(std::make_unique<TriMesh>(triangulate(omega0(), c.polygon, o)));
    return GreenSolver(*keep.back(), c, omega0());
}

}  // namespace

TEST(Kernel, ClosedFormValues) {
    EXPECT_NEAR(fundamental_solution({1.0, 0.0}, {0.0, 0.0}).value, 0.0, 1e-16);
    const double r = std::exp(-1.0);
    EXPECT_NEAR(fundamental_solution({0.3, 0.2 + r}, {0.3, 0.2}).value, 1.0 / (2.0 * M_PI), 1e-15);
    EXPECT_THROW(fundamental_solution({0.1, 0.1}, {0.1, 0.1}), SingularityError);
}

TEST(Kernel, GradientMatchesFiniteDifferences) {
    const Vec2 y{0.1, -0.2};
    const Vec2 x = y + Vec2{0.3 * std::cos(0.7), 0.3 * std::sin(0.7)};
    const auto k = fundamental_solution(x, y);
    const double d = 1e-6;
    const double gx = (fundamental_solution(x + Vec2{d, 0}, y).value - fundamental_solution(x - Vec2{d, 0}, y).value) / (2 * d);
    const double gy = (fundamental_solution(x + Vec2{0, d}, y).value - fundamental_solution(x - Vec2{0, d}, y).value) / (2 * d);
    EXPECT_NEAR(k.gradient.x, gx, 1e-8);
    EXPECT_NEAR(k.gradient.y, gy, 1e-8);
}

TEST(GreenDomain, DilatedByHalfR0) {
    const auto& b = omega0().boundary();
    EXPECT_NEAR(b.area(), 2.1 * 2.1, 1e-12);
}

TEST(Green, HomogeneousReciprocity) {
    const GreenSolver s = make_solver({square(0.15, {0.6, 0.6}), 1.0}, 0.05);
    const std::vector<std::pair<Vec2, Vec2>> pairs{
        {{-0.4, 0.3}, {0.2, -0.5}}, {{0.0, 0.0}, {0.7, -0.2}}, {{-0.8, -0.8}, {0.1, 0.1}},
        {{0.3, 0.2}, {-0.5, -0.1}}, {{-0.2, 0.8}, {0.8, -0.8}}};
    for (const auto& [a, b] : pairs) {
        const auto ga = s.solve(a), gb = s.solve(b);
        EXPECT_NEAR(ga(b), gb(a), 1e-3);
    }
}

TEST(Green, InclusionReciprocityBoundaryAndFlux) {
    const GreenSolver s = make_solver({square(0.3), 2.0}, 0.05);
    const Vec2 a{-0.6, 0.5}, b{0.5, -0.7};
    const auto ga = s.solve(a), gb = s.solve(b);
    EXPECT_NEAR(ga(b), gb(a), 1e-2 * std::abs(ga(b)) + 1e-4);
    EXPECT_NEAR(ga.source_flux(), 1.0, 0.02);
    for (int n : s.mesh().boundary_nodes()) EXPECT_NEAR(ga(s.mesh().nodes()[n]), 0.0, 1e-10);
    EXPECT_GT(ga({-0.55, 0.5}), ga({0.0, 0.0}));
}

TEST(Green, RejectedSources) {
    const GreenSolver s = make_solver({square(0.3), 2.0}, 0.1);
    EXPECT_THROW(s.solve({0.0, 0.0}), UnsupportedConfiguration);
    EXPECT_THROW(s.solve({0.3, 0.1}), UnsupportedConfiguration);
    EXPECT_THROW(s.solve({3.0, 0.0}), PreconditionError);
}

TEST(Green, LadderPreconditions) {
    const PriorInfo pi;
    const auto sc = local_scales(pi);
    EXPECT_DOUBLE_EQ(sc.rho0, 0.025);
    EXPECT_DOUBLE_EQ(sc.r1, 0.0125);
    const Vec2 y = ladder_source(square(0.3), 0, 0.01, pi);
    EXPECT_NEAR(y.x, 0.0, 1e-15);
    EXPECT_NEAR(y.y, -0.31, 1e-15);
    EXPECT_THROW(ladder_source(square(0.3), 0, sc.r1, pi), PreconditionError);
    EXPECT_THROW(ladder_source(square(0.3), 0, 0.0, pi), PreconditionError);
    Polygon tiny({{0, 0}, {0.04, 0}, {0.04, 0.5}, {0, 0.5}});
    EXPECT_THROW(ladder_source(tiny, 0, 0.005, pi), PreconditionError);
}

TEST(Green, LocalBehaviorHomogeneous) {
    const PriorInfo pi;
    const PiecewiseConductivity c{square(0.3), 1.0};
    const double r = pi.d0 / 16.0;
    const Vec2 y = ladder_source(c.polygon, 0, r, pi);
    const GreenSolver s = make_solver(c, 0.1, ladder_mesh_options(y, r, 0.1).spots);
    const auto gs = s.solve(y);
    const auto lb = local_behavior_check(gs, 0, r, pi);
    EXPECT_DOUBLE_EQ(lb.coefficient, 1.0);
    EXPECT_GT(lb.samples, 0u);
    // The defect is |w| at the samples, bounded by the largest nodal |w|.
    EXPECT_LE(lb.defect, gs.w.u.cwiseAbs().maxCoeff() + 1e-12);
    EXPECT_NEAR(lb.ratio, 1.0, 0.05);
}

TEST(Green, LocalBehaviorDefectStaysBounded) {
    const PriorInfo pi;
    const PiecewiseConductivity c{square(0.3), 2.0};
    std::vector<LocalBehavior> rows;
    for (int j : {4, 5}) {
        const double r = pi.d0 * std::ldexp(1.0, -j);
        const Vec2 y = ladder_source(c.polygon, 0, r, pi);
        const GreenSolver s = make_solver(c, 0.1, ladder_mesh_options(y, r, 0.1).spots);
        rows.push_back(local_behavior_check(s.solve(y), 0, r, pi));
        EXPECT_NEAR(rows.back().coefficient, 2.0 / 3.0, 1e-15);
    }
    EXPECT_LT(rows[1].defect, 2.0 * rows[0].defect);
    EXPECT_LT(rows[0].defect, 2.0 * rows[1].defect);
    EXPECT_NEAR(rows[1].gamma_nearest - rows[0].gamma_nearest, std::log(2.0) / (2.0 * M_PI), 1e-12);
    std::ostringstream csv;
    write_local_csv(csv, rows);
    const std::string text = csv.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Green, GrowthHomogeneousOracle) {
    // Without the smooth part: int_{Omega0 \ B_r} |grad Gamma| = (int_{box} 1/|x| - 2 pi r) / (2 pi).
    const GreenSolver s = make_solver({square(0.15, {0.6, 0.6}), 1.0}, 0.05, {{{0.0, 0.0}, 0.1, 0.01}});
    const auto gs = s.solve({0.0, 0.0});
    const double a = 1.05;
    const double box = 8.0 * a * std::asinh(1.0);
    const double r = 0.5;
    const double oracle = (box - 2.0 * M_PI * r) / (2.0 * M_PI);
    EXPECT_NEAR(gradient_mass_outside_ball(gs, r), oracle, 0.2 * oracle);
}

TEST(Green, GrowthTableMonotoneWithFiniteC) {
    const PiecewiseConductivity c{square(0.3), 2.0};
    const Vec2 y{0.0, -0.45};
    const GreenSolver s = make_solver(c, 0.05, {{y, 0.1, 0.005}});
    const auto gs = s.solve(y);
    const auto table = global_growth_probe(gs, {0.4, 0.2, 0.1, 0.05});
    ASSERT_EQ(table.rows.size(), 4u);
    for (std::size_t i = 1; i < table.rows.size(); ++i) EXPECT_GT(table.rows[i].integral, table.rows[i - 1].integral);
    EXPECT_TRUE(std::isfinite(table.c));
    EXPECT_GT(table.c, 0.0);
    for (const auto& row : table.rows) EXPECT_LE(row.integral, table.c * row.envelope * (1 + 1e-12));
    EXPECT_THROW(global_growth_probe(gs, {0.1, 0.2}), PreconditionError);
    EXPECT_THROW(global_growth_probe(gs, {0.1, 1e-4}), ResolutionError);
}

TEST(Green, SFunctional) {
    const PiecewiseConductivity c{square(0.3), 2.0};
    const GreenSolver s = make_solver(c, 0.05);
    const std::vector<Vec2> none(4, Vec2{0, 0});
    const auto& mesh = s.mesh();
    const auto gy = s.solve({-0.5, 0.1});
    EXPECT_THROW(S_functional(gy, gy, make_path(c, none, 0.0, mesh, 0.1)), DegeneratePath);

    // Pure k: S(y, y) = -sign(k) int_P |grad G|^2.
    const auto pure = make_path(c, none, 0.4, mesh, 0.1);
    const double syy = S_functional(gy, gy, pure);
    double oracle = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        if (mesh.inside(t, 0)) {
            const Vec2 g = gy.gradient(mesh.centroid(t), static_cast<int>(t));
            oracle += mesh.area(t) * dot(g, g);
        }
    EXPECT_LT(syy, 0.0);
    EXPECT_NEAR(syy, -oracle, 0.05 * oracle);
    EXPECT_GT(S_functional(gy, gy, make_path(c, none, -0.4, mesh, 0.1)), 0.0);

    const std::vector<Vec2> V{{0.05, 0.0}, {0.03, -0.02}, {0.0, 0.04}, {-0.02, 0.01}};
    const auto path = make_path(c, V, 0.5, mesh, 0.1);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (int i = 0; i < 5; ++i) {
        Vec2 a, b;
        do a = {u(rng), u(rng)}; while (c.polygon.boundary_distance(a) < 0.15 || c.polygon.contains(a));
        do b = {u(rng), u(rng)}; while (c.polygon.boundary_distance(b) < 0.15 || c.polygon.contains(b));
        const auto ga = s.solve(a), gb = s.solve(b);
        const double sab = S_functional(ga, gb, path), sba = S_functional(gb, ga, path);
        EXPECT_NEAR(sab, sba, 1e-10 * std::abs(sab) + 1e-14);
    }
}
