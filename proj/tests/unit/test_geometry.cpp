#include "common.hpp"

#include "eitlab/errors.hpp"
#include "eitlab/geometry.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <sstream>

using namespace eitlab;
using namespace eitlab::testing;

TEST(Polygon, RejectsStructuralDefects) {
    EXPECT_THROW(Polygon({{0, 0}, {1, 0}}), GeometryError);
    EXPECT_THROW(Polygon({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), GeometryError);
    EXPECT_THROW(Polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), GeometryError);  // bow tie
}

TEST(Polygon, ClockwiseInputIsReversed) {
    Polygon P({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
    EXPECT_GT(signed_area(P.vertices()), 0.0);
    EXPECT_EQ(P.vertex(0), (Vec2{0, 0}));
    EXPECT_NEAR(P.area(), 1.0, 1e-15);
}

TEST(Admissibility, StandardSquarePasses) {
    const auto rep = validate_polygon(square(0.3), unit_box(), standard_prior());
    EXPECT_TRUE(rep.admissible());
    EXPECT_NEAR(rep.find("angles")->value, M_PI / 2, 1e-12);
    EXPECT_NEAR(rep.find("min_side")->value, 0.6, 1e-12);
    EXPECT_NEAR(rep.find("boundary_distance")->value, 0.7, 1e-12);
}

TEST(Admissibility, SquareTooCloseToBoundary) {
    const auto rep = validate_polygon(square(0.95), unit_box(), standard_prior());
    EXPECT_FALSE(rep.admissible());
    ASSERT_EQ(rep.failed(), std::vector<std::string>{"boundary_distance"});
    EXPECT_NEAR(rep.find("boundary_distance")->value, 0.05, 1e-12);
}

TEST(Admissibility, SharpAngleFails) {
    const double a = M_PI / 16;
    Polygon T({{0, 0}, {0.5, 0}, {0.5 * std::cos(a), 0.5 * std::sin(a)}});
    const auto rep = validate_polygon(T, unit_box(), standard_prior());
    EXPECT_FALSE(rep.find("angles")->passed);
    EXPECT_NEAR(rep.find("angles")->value, a, 1e-12);
}

TEST(Admissibility, Conductivity) {
    const PriorInfo pi = standard_prior();
    EXPECT_TRUE(validate_conductivity(2.0, pi));
    EXPECT_FALSE(validate_conductivity(1.0, pi));
    EXPECT_FALSE(validate_conductivity(0.05, pi));
}

TEST(Boolean, AnalyticCases) {
    const Polygon A = square(0.5);
    EXPECT_NEAR(symmetric_difference_area(A, A), 0.0, 1e-14);
    const Polygon B = square(0.5, {0.1, 0.0});
    EXPECT_NEAR(symmetric_difference_area(A, B), 0.2, 1e-14);
    EXPECT_NEAR(intersection_area(A, B), 0.9, 1e-14);
    Polygon far = square(0.1, {5.0, 5.0});
    EXPECT_NEAR(symmetric_difference_area(A, far), 1.04, 1e-14);
    // Rotated storage of the same set.
    Polygon R({{0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}, {-0.5, -0.5}});
    EXPECT_NEAR(symmetric_difference_area(A, R), 0.0, 1e-14);
    EXPECT_TRUE(A.same_shape(R));
}

TEST(Boolean, ConvexPentagonsAgainstMonteCarlo) {
    std::mt19937_64 rng(11);
    const Polygon P1 = random_convex(rng, 5, {0.0, 0.0}, 0.5);
    const Polygon P2 = random_convex(rng, 5, {0.15, -0.1}, 0.45);
    const double area = symmetric_difference_area(P1, P2);

    const double lo = -0.8, hi = 0.8, box = (hi - lo) * (hi - lo);
    std::uniform_real_distribution<double> u(lo, hi);
    const std::size_t n = 10'000'000;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p{u(rng), u(rng)};
        if (ray_inside(P1.vertices(), p) != ray_inside(P2.vertices(), p)) ++hits;
    }
    const double q = static_cast<double>(hits) / n;
    const double sigma = box * std::sqrt(q * (1.0 - q) / n);
    EXPECT_GT(area, 0.05);
    EXPECT_NEAR(area, box * q, 3.0 * sigma);
}

TEST(Boolean, NonConvexAgainstMonteCarlo) {
    Polygon L({{0, 0}, {1, 0}, {1, 0.4}, {0.4, 0.4}, {0.4, 1}, {0, 1}});
    Polygon S({{0.2, 0.2}, {0.9, 0.1}, {0.7, 0.8}, {0.3, 0.6}});
    const double area = symmetric_difference_area(L, S);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 4'000'000;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p{u(rng), u(rng)};
        if (ray_inside(L.vertices(), p) != ray_inside(S.vertices(), p)) ++hits;
    }
    const double q = static_cast<double>(hits) / n;
    EXPECT_NEAR(area, q, 3.0 * std::sqrt(q * (1 - q) / n));
}

namespace {

double sampled_directed(const Polygon& A, const Polygon& B, std::size_t count) {
    double worst = 0.0;
    for (Vec2 p : boundary_samples(A, count)) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < B.size(); ++i) best = std::min(best, seg_dist(p, B.vertex(i), B.vertex(i + 1)));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

TEST(Hausdorff, AnalyticCases) {
    const Polygon A = square(0.3);
    EXPECT_EQ(hausdorff_boundary(A, A), 0.0);
    EXPECT_NEAR(hausdorff_boundary(A, square(0.3, {0.07, 0.0})), 0.07, 1e-14);
}

TEST(Hausdorff, LShapeOffsetAgainstDenseSampling) {
    Polygon L({{0, 0}, {1, 0}, {1, 0.4}, {0.4, 0.4}, {0.4, 1}, {0, 1}});
    Polygon Lo(mitered_offset(L, 0.05));
    const double oracle = std::max(sampled_directed(L, Lo, 10'000), sampled_directed(Lo, L, 10'000));
    EXPECT_NEAR(hausdorff_boundary(L, Lo), oracle, 1e-4);
    EXPECT_NEAR(oracle, 0.05 * std::sqrt(2.0), 1e-4);
}

TEST(Hausdorff, RandomPairsAgainstDenseSampling) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Polygon A = random_convex(rng, 6, {0.0, 0.0}, 0.5);
        const Polygon B = random_convex(rng, 4, {0.1, 0.05}, 0.4);
        const double oracle = std::max(sampled_directed(A, B, 100'000), sampled_directed(B, A, 100'000));
        const double d = hausdorff_boundary(A, B);
        EXPECT_GE(d, oracle - 1e-12);
        EXPECT_NEAR(d, oracle, 1e-4);
    }
}

TEST(Hausdorff, MetricAxiomsOnSampledTriples) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> c(-0.2, 0.2);
    for (int trial = 0; trial < 50; ++trial) {
        const Polygon A = random_convex(rng, 5, {c(rng), c(rng)}, 0.4);
        const Polygon B = random_convex(rng, 4, {c(rng), c(rng)}, 0.4);
        const Polygon C = random_convex(rng, 6, {c(rng), c(rng)}, 0.4);
        const double ab = hausdorff_boundary(A, B), ba = hausdorff_boundary(B, A);
        const double bc = hausdorff_boundary(B, C), ac = hausdorff_boundary(A, C);
        EXPECT_NEAR(hausdorff_boundary(A, A), 0.0, 1e-15);
        EXPECT_GT(ab, 0.0);
        EXPECT_NEAR(ab, ba, 1e-15);
        EXPECT_LE(ac, ab + bc + 1e-12);
    }
}

namespace {

/// Exhaustive search over cyclic shifts with the same ordering of criteria.
std::size_t brute_force_shift(const Polygon& A, const Polygon& B) {
    const std::size_t n = A.size();
    std::size_t best = 0;
    double best_max = std::numeric_limits<double>::infinity(), best_sum = best_max;
    for (std::size_t s = 0; s < n; ++s) {
        double mx = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = distance(A.vertex(i), B.vertex(i + s));
            mx = std::max(mx, d);
            sum += d;
        }
        if (mx < best_max - 1e-15 || (mx <= best_max + 1e-15 && sum < best_sum - 1e-15)) {
            best = s;
            best_max = mx;
            best_sum = sum;
        }
    }
    return best;
}

}  // namespace

TEST(Matching, BruteForceOverCyclicShifts) {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> nv(3, 8);
    std::uniform_real_distribution<double> c(-0.1, 0.1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = static_cast<std::size_t>(nv(rng));
        const Polygon A = random_convex(rng, n, {0, 0}, 0.5);
        const Polygon B = random_convex(rng, n, {c(rng), c(rng)}, 0.5);
        const auto corr = match_vertices(A, B);
        EXPECT_EQ(corr.shift, brute_force_shift(A, B)) << "trial " << trial;
        double mx = 0.0;
        for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, distance(corr.source(i), corr.target(i)));
        EXPECT_NEAR(corr.max_distance, mx, 1e-15);
    }
}

TEST(Matching, RotatedStorageRecoversIdentity) {
    Polygon A = square(0.3);
    Polygon B({A.vertex(2), A.vertex(3), A.vertex(0), A.vertex(1)});
    const auto corr = match_vertices(A, B);
    EXPECT_EQ(corr.shift, 2u);
    EXPECT_EQ(corr.max_distance, 0.0);
    EXPECT_EQ(corr.shift, brute_force_shift(A, B));
}

TEST(Matching, TranslatedTriangleAndCountMismatch) {
    Polygon T({{0, 0}, {0.5, 0}, {0.2, 0.4}});
    Polygon U({{0.03, 0.04}, {0.53, 0.04}, {0.23, 0.44}});
    const auto corr = match_vertices(T, U);
    EXPECT_NEAR(corr.max_distance, 0.05, 1e-15);
    EXPECT_NEAR(total_vertex_displacement(corr), 0.15, 1e-14);
    EXPECT_THROW(match_vertices(T, square(0.3)), MatchImpossible);
    EXPECT_EQ(total_vertex_displacement(match_vertices(T, T)), 0.0);
}

TEST(Matching, SingleVertexMoveAndNBound) {
    Polygon A = square(0.3);
    Polygon B({{-0.3, -0.3}, {0.32, -0.3}, {0.3, 0.3}, {-0.3, 0.3}});
    const auto corr = match_vertices(A, B);
    EXPECT_NEAR(total_vertex_displacement(corr), 0.02, 1e-15);
    EXPECT_LE(total_vertex_displacement(corr), A.size() * corr.max_distance + 1e-15);
}

TEST(DiffNorms, ExactCases) {
    PiecewiseConductivity a{square(0.5), 2.0};
    EXPECT_EQ(conductivity_diff_norms(a, a).l1, 0.0);
    EXPECT_EQ(conductivity_diff_norms(a, a).l2, 0.0);
    PiecewiseConductivity b{square(0.5, {0.1, 0.0}), 2.0};
    const auto d = conductivity_diff_norms(a, b);
    EXPECT_NEAR(d.l2 * d.l2, 0.2, 1e-12);
    EXPECT_NEAR(d.l1, 0.2, 1e-12);
    PiecewiseConductivity c{square(0.5), 3.0};
    EXPECT_NEAR(conductivity_diff_norms(a, c).l1, 1.0, 1e-12);
    // Shift plus k change: (k1-1)|P1\P2| + (k2-1)|P2\P1| + |k1-k2||P1 cap P2|.
    PiecewiseConductivity e{square(0.5, {0.0, 0.2}), 2.5};
    const auto de = conductivity_diff_norms(a, e);
    EXPECT_NEAR(de.l1, 1.0 * 0.2 + 1.5 * 0.2 + 0.5 * 0.8, 1e-12);
    EXPECT_NEAR(de.l2 * de.l2, 1.0 * 0.2 + 2.25 * 0.2 + 0.25 * 0.8, 1e-12);
}

TEST(DiffNorms, L2DominatesSymmetricDifference) {
    std::mt19937_64 rng(29);
    const PriorInfo pi = standard_prior();
    std::uniform_real_distribution<double> k(1.5, 4.0);
    for (int trial = 0; trial < 30; ++trial) {
        PiecewiseConductivity a{random_convex(rng, 5, {0, 0}, 0.4), k(rng)};
        PiecewiseConductivity b{random_convex(rng, 4, {0.05, 0}, 0.4), k(rng)};
        const double l2 = conductivity_diff_norms(a, b).l2;
        EXPECT_GE(l2 * l2, symmetric_difference_area(a.polygon, b.polygon) / (pi.lambda1 * pi.lambda1));
    }
}

TEST(Flow, EndpointsAndMidpoint) {
    Polygon A = square(0.3);
    Polygon B({{-0.25, -0.33}, {0.31, -0.28}, {0.34, 0.3}, {-0.3, 0.27}});
    const auto corr = match_vertices(A, B);
    const Polygon P0 = apply_flow(corr, 0.0), P1 = apply_flow(corr, 1.0), Ph = apply_flow(corr, 0.5);
    for (std::size_t i = 0; i < A.size(); ++i) {
        EXPECT_EQ(P0.vertex(i), A.vertex(i));
        EXPECT_EQ(P1.vertex(i), corr.target(i));
        const Vec2 mid = 0.5 * (P0.vertex(i) + P1.vertex(i));
        EXPECT_NEAR(Ph.vertex(i).x, mid.x, 1e-15);
        EXPECT_NEAR(Ph.vertex(i).y, mid.y, 1e-15);
    }
}

TEST(PolygonIo, RoundTrip) {
    Polygon A({{0.1, 0.2}, {0.7, -0.1}, {0.3, 0.6}});
    std::stringstream s;
    write_polygon(s, A);
    EXPECT_EQ(read_polygon(s).vertices(), A.vertices());
    std::istringstream bad("0 0\n1 0\n");
    EXPECT_THROW(read_polygon(bad), GeometryError);
}

TEST(Prior, MapRoundTripAndValidation) {
    PriorInfo pi;
    pi.d0 = 0.2;
    EXPECT_EQ(PriorInfo::from_map(pi.to_map()).d0, 0.2);
    PriorInfo bad;
    bad.alpha0 = 4.0;
    EXPECT_THROW(bad.validate(), ConfigError);
}
