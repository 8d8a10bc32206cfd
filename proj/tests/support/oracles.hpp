#pragma once

#include "eitlab/dtn.hpp"
#include "eitlab/fem.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace eitlab::testing {

/// Brute-force estimate of sup_f ||D f||_{N^-1} / ||f||_N using only forward
/// evaluations: the dual norm comes from an LDLT solve with N, never from its
/// inverse square root. Probes live in the span of the first Fourier modes of
/// the boundary; `random` pure random draws are followed by `steps`
/// accept-if-better perturbations of the best probe with an adaptive step.
/// Every evaluation is a valid lower bound of the operator norm.
struct ProbeSearch {
    double random_best = 0.0;
    double best = 0.0;
    int evaluations = 0;
};

inline ProbeSearch brute_force_op_norm(const Eigen::MatrixXd& D, const Eigen::MatrixXd& N, const TriMesh& mesh,
                                       int modes, int random, int steps, std::uint64_t seed) {
    std::vector<Eigen::VectorXd> cols{trace_mode(mesh, "const").vector()};
    for (int k = 1; k <= modes; ++k) {
        cols.push_back(trace_mode(mesh, "cos:" + std::to_string(k)).vector());
        cols.push_back(trace_mode(mesh, "sin:" + std::to_string(k)).vector());
    }
    Eigen::MatrixXd B(D.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = cols[i];
    const Eigen::LDLT<Eigen::MatrixXd> Nf(N);

    ProbeSearch out;
    auto ratio = [&](const Eigen::VectorXd& c) {
        ++out.evaluations;
        const Eigen::VectorXd f = B * c;
        const Eigen::VectorXd g = D * f;
        return std::sqrt(g.dot(Nf.solve(g)) / f.dot(N * f));
    };
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd best(B.cols());
    for (int t = 0; t < random; ++t) {
        Eigen::VectorXd c(B.cols());
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = gauss(rng);
        const double r = ratio(c);
        if (r > out.best) {
            out.best = r;
            best = c;
        }
    }
    out.random_best = out.best;
    double step = 0.3;
    const double dim = std::sqrt(static_cast<double>(B.cols()));
    for (int t = 0; t < steps; ++t) {
        Eigen::VectorXd c = best;
        const double scale = step * best.norm() / dim;
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) += scale * gauss(rng);
        const double r = ratio(c);
        if (r > out.best) {
            out.best = r;
            best = c;
            step *= 1.5;
        } else {
            step *= std::pow(1.5, -0.25);
        }
    }
    return out;
}

/// Per-element stiffness recomputed from vertex coordinates alone.
inline double element_energy(const TriMesh& m, const std::vector<double>& gamma, const Eigen::VectorXd& x) {
    double e = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& T = m.triangles()[t];
        const Vec2 a = m.nodes()[T[0]], b = m.nodes()[T[1]], c = m.nodes()[T[2]];
        const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        // grad of the affine interpolant via Cramer's rule.
        const double du1 = x(T[1]) - x(T[0]), du2 = x(T[2]) - x(T[0]);
        const double gx = (du1 * (c.y - a.y) - du2 * (b.y - a.y)) / det;
        const double gy = (du2 * (b.x - a.x) - du1 * (c.x - a.x)) / det;
        e += gamma[t] * 0.5 * std::fabs(det) * (gx * gx + gy * gy);
    }
    return e;
}

}  // namespace eitlab::testing
