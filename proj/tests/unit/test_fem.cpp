#include "common.hpp"
#include "oracles.hpp"

#include "eitlab/errors.hpp"
#include "eitlab/fem.hpp"

#include <gtest/gtest.h>

using namespace eitlab;
using namespace eitlab::testing;

namespace {

PiecewiseConductivity inclusion(double k) { return {square(0.3), k}; }

}  // namespace

TEST(Stiffness, KOneIsHomogeneousAndRowsSumToZero) {
    const TriMesh m = square_mesh(0.1);
    const SparseMatrix K1 = assemble_stiffness(m, inclusion(1.0));
    const SparseMatrix K0 = assemble_stiffness(m, std::vector<double>(m.num_triangles(), 1.0));
    EXPECT_EQ((Eigen::MatrixXd(K1) - Eigen::MatrixXd(K0)).cwiseAbs().maxCoeff(), 0.0);
    const SparseMatrix K2 = assemble_stiffness(m, inclusion(2.0));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_nodes());
    EXPECT_LT((K2 * ones).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((Eigen::MatrixXd(K2) - Eigen::MatrixXd(K2).transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Stiffness, MatchesPerElementRecomputation) {
    const TriMesh m = square_mesh(0.1, 2.0);
    const auto gamma = element_conductivity(m, inclusion(2.0));
    const SparseMatrix K = assemble_stiffness(m, gamma);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Eigen::VectorXd x(m.num_nodes());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
    const double form = x.dot(K * x);
    EXPECT_NEAR(form, element_energy(m, gamma, x), 1e-10 * form);

    // k = 2 doubles exactly the inside contributions.
    std::vector<double> inside_only(m.num_triangles(), 0.0), outside_only(m.num_triangles(), 0.0);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) (m.inside(t, 0) ? inside_only : outside_only)[t] = 1.0;
    const double in = element_energy(m, inside_only, x), out = element_energy(m, outside_only, x);
    EXPECT_NEAR(form, 2.0 * in + out, 1e-10 * form);
}

TEST(Stiffness, MissingInterfaceIsAnError) {
    const TriMesh m = square_mesh(0.2);
    EXPECT_THROW(element_conductivity(m, {square(0.2), 2.0}), AssemblyError);
}

TEST(Dirichlet, ConstantsAndLinearsAreReproduced) {
    const TriMesh m = square_mesh(0.1);
    for (double k : {0.5, 2.0, 5.0}) {
        const auto s = solve_dirichlet(m, inclusion(k), trace_from_function(m, [](Vec2) { return 1.75; }));
        EXPECT_LT((s.u.array() - 1.75).abs().maxCoeff(), 1e-12);
        for (Vec2 g : s.grad) EXPECT_LT(norm(g), 1e-11);
    }
    const auto s = solve_dirichlet(m, inclusion(1.0), trace_mode(m, "x"));
    for (std::size_t i = 0; i < m.num_nodes(); ++i) EXPECT_NEAR(s.u(i), m.nodes()[i].x, 1e-12);
    for (auto side : {Side::inside, Side::outside})
        for (Vec2 g : interior_gradient_on_interface(s, side)) {
            EXPECT_NEAR(g.x, 1.0, 1e-11);
            EXPECT_NEAR(g.y, 0.0, 1e-11);
        }
}

TEST(Dirichlet, BoundaryValuesAndConservation) {
    const TriMesh m = square_mesh(0.05, 4.0);
    const DirichletSolver solver(m, inclusion(2.0));
    const auto f = trace_mode(m, "x");
    const auto s = solve_dirichlet(solver, f);
    for (std::size_t j = 0; j < m.boundary_nodes().size(); ++j) EXPECT_EQ(s.u(m.boundary_nodes()[j]), f.values[j]);
    // Net boundary current: the boundary rows of K u sum to zero.
    const Eigen::VectorXd r = solver.stiffness() * s.u;
    double flux = 0.0, scale = 0.0;
    for (int b : m.boundary_nodes()) {
        flux += r(b);
        scale += std::fabs(r(b));
    }
    EXPECT_LT(std::fabs(flux), 1e-10 * scale);
    EXPECT_LT(s.residual, 1e-10);
    EXPECT_EQ(s.max_principle_defect, 0.0);
}

TEST(Dirichlet, GalerkinOrthogonality) {
    const TriMesh m = square_mesh(0.05);
    const DirichletSolver solver(m, inclusion(3.0));
    const auto s = solve_dirichlet(solver, trace_mode(m, "cos:2"));
    const Eigen::VectorXd r = solver.stiffness() * s.u;
    double worst = 0.0;
    for (int i : m.interior_nodes()) worst = std::max(worst, std::fabs(r(i)));
    EXPECT_LT(worst, 1e-10);
}

TEST(Dirichlet, EnergyMonotoneInK) {
    const TriMesh m = square_mesh(0.05);
    const auto f = trace_mode(m, "x");
    double prev = 0.0;
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
        const auto s = solve_dirichlet(m, inclusion(k), f);
        EXPECT_GT(s.energy(), prev);
        prev = s.energy();
    }
}

TEST(Interface, ZeroGradientForConstants) {
    const TriMesh m = square_mesh(0.1);
    const auto s = solve_dirichlet(m, inclusion(2.0), trace_mode(m, "const"));
    for (auto side : {Side::inside, Side::outside})
        for (Vec2 g : interior_gradient_on_interface(s, side)) EXPECT_LT(norm(g), 1e-11);
}

TEST(Interface, FluxTransmissionUnderRefinement) {
    // Away from the corners the flux defect k (d_nu u)_in - (d_nu u)_out of the
    // one-sided P1 gradients is O(h). The corner singularities of the gradient
    // pull the global L2 rate down (about 0.4 on this configuration).
    const Polygon P = square(0.3);
    std::vector<double> away, global, h;
    TriMesh m = square_mesh(0.1);
    for (int level = 0; level < 3; ++level) {
        const auto s = solve_dirichlet(m, inclusion(2.0), trace_mode(m, "x"));
        const auto gin = interior_gradient_on_interface(s, Side::inside);
        const auto gout = interior_gradient_on_interface(s, Side::outside);
        const auto& edges = m.interface_edges(0);
        double sum = 0.0, len = 0.0;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const Vec2 mid = 0.5 * (m.nodes()[edges[e].a] + m.nodes()[edges[e].b]);
            double corner = 1e9;
            for (Vec2 v : P.vertices()) corner = std::min(corner, distance(mid, v));
            if (corner < 0.1) continue;
            const double jump = 2.0 * dot(gin[e], edges[e].normal) - dot(gout[e], edges[e].normal);
            sum += edges[e].length * jump * jump;
            len += edges[e].length;
        }
        away.push_back(std::sqrt(sum / len));
        global.push_back(interface_jumps(s, 2.0).l2_flux_defect);
        h.push_back(m.h_max());
        if (level < 2) m = refine(m);
    }
    for (std::size_t i = 1; i < away.size(); ++i) {
        const double scale = std::log(h[i - 1] / h[i]);
        EXPECT_GE(std::log(away[i - 1] / away[i]) / scale, 0.8) << "level " << i;
        EXPECT_GT(std::log(global[i - 1] / global[i]) / scale, 0.3) << "level " << i;
    }
}

TEST(Traces, NamedModes) {
    const TriMesh m = square_mesh(0.2);
    const auto c = trace_mode(m, "cos:1");
    const double L = m.domain().perimeter();
    for (std::size_t j = 0; j < c.size(); ++j) EXPECT_NEAR(c.values[j], std::cos(2 * M_PI * c.arclength[j] / L), 1e-15);
    EXPECT_THROW(trace_mode(m, "tan:1"), ConfigError);
    EXPECT_THROW(trace_from_vector(m, Eigen::VectorXd::Zero(3)), DimensionError);
}
