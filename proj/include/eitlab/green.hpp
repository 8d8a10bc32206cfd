#pragma once

#include "eitlab/fem.hpp"
#include "eitlab/geometry.hpp"
#include "eitlab/mesh.hpp"
#include "eitlab/shape_deriv.hpp"

#include <iosfwd>
#include <memory>
#include <vector>

namespace eitlab {

struct KernelValue {
    double value = 0.0;
    Vec2 gradient;  ///< with respect to x
};

/// Gamma(x, y) = -(1/2pi) log|x - y|. Throws SingularityError when x == y.
KernelValue fundamental_solution(Vec2 x, Vec2 y);

/// Omega dilated by r0/2 (the conductivity is 1 in the collar).
Domain green_domain(const Domain& omega, const PriorInfo& pi);

/// G(., y) = Gamma(., y) + w for a source y in the background region. The
/// smooth part w is a P1 function on a mesh of the extended domain.
struct GreenSolution {
    Vec2 y;
    PiecewiseConductivity cond;
    FemSolution w;
    std::shared_ptr<const MeshLocator> locator;

    const TriMesh& mesh() const { return *w.mesh; }
    /// G(x, y). Throws PreconditionError outside the mesh.
    double operator()(Vec2 x) const;
    Vec2 gradient(Vec2 x) const;
    /// Gradient with the smooth part taken from triangle `tri`.
    Vec2 gradient(Vec2 x, int tri) const;
    /// -int_{boundary} gamma d_n G ds, which is 1 for a unit source.
    double source_flux() const;
};

/// One factorization of the extended-domain problem, shared across sources.
class GreenSolver {
public:
    /// `mesh` must be a triangulation of omega0 conforming to cond.polygon.
    GreenSolver(const TriMesh& mesh, const PiecewiseConductivity& cond, const Domain& omega0);

    /// Throws UnsupportedConfiguration when y lies in the closed inclusion and
    /// PreconditionError when y is outside the mesh.
    GreenSolution solve(Vec2 y) const;
    const TriMesh& mesh() const { return solver_.mesh(); }

private:
    PiecewiseConductivity cond_;
    std::size_t polygon_ = 0;
    DirichletSolver solver_;
    std::shared_ptr<const MeshLocator> locator_;
};

GreenSolution green_solve(const TriMesh& mesh, const PiecewiseConductivity& cond, Vec2 y, const Domain& omega0);

/// rho0 = d0/4 (vertex exclusion) and r1 = d0/8 (ball radius) of the local check.
struct LocalScales {
    double rho0 = 0.0;
    double r1 = 0.0;
};
LocalScales local_scales(const PriorInfo& pi);

/// y_r = midpoint of `side` + r * outward normal. Throws PreconditionError when
/// the midpoint is within rho0 of a vertex or r is not in (0, r1).
Vec2 ladder_source(const Polygon& P, std::size_t side, double r, const PriorInfo& pi);

/// Mesh options that resolve a source at distance r from the interface.
MeshOptions ladder_mesh_options(Vec2 source, double r, double target_h);

struct LocalBehavior {
    double r = 0.0;
    double coefficient = 0.0;  ///< 2 / (k1 + 1)
    double defect = 0.0;       ///< sup over samples of |G - coefficient * Gamma|
    double ratio = 0.0;        ///< G / Gamma at the nearest sample
    double gamma_nearest = 0.0;
    Vec2 nearest;
    std::size_t samples = 0;
};

/// Samples x inside P within r1 of the side midpoint and compares G(x, y_r) with
/// 2/(k1+1) Gamma(x, y_r). gs must be solved for the source ladder_source(P, side, r).
LocalBehavior local_behavior_check(const GreenSolution& gs, std::size_t side, double r, const PriorInfo& pi);

struct GrowthRow {
    double r = 0.0;
    double integral = 0.0;  ///< int_{Omega0 \ B_r(y)} |grad G| dx
    double envelope = 0.0;  ///< |log r|^3 + r^-3
};

struct GrowthTable {
    std::vector<GrowthRow> rows;
    double c = 0.0;  ///< smallest c with integral <= c * envelope on every row
};

/// Throws PreconditionError unless the ladder is strictly decreasing, and
/// ResolutionError when some r is below twice the local element size at y.
GrowthTable global_growth_probe(const GreenSolution& gs, const std::vector<double>& r_ladder);

/// int_{Omega0 \ B_r(y)} |grad G| dx by adaptive quadrature.
double gradient_mass_outside_ball(const GreenSolution& gs, double r);

/// S(y, z) = [(1 - k1) int_{dP1} (h.nu) M grad G_y . grad G_z ds - k int_{P1} grad G_y . grad G_z dx] / (v + |k|)
/// with v the summed vertex motion and k the conductivity increment of the path;
/// equivalently -dF/dt|_0 (G_y, G_z) / (v + |k|). Outside traces on dP1.
/// Throws DegeneratePath when v + |k| == 0 and SingularityError when a source lies on dP1.
double S_functional(const GreenSolution& gy, const GreenSolution& gz, const PerturbationPath& path);

/// CSV with the r ladder in the first column.
void write_local_csv(std::ostream& out, const std::vector<LocalBehavior>& rows);
void write_growth_csv(std::ostream& out, const GrowthTable& table);

}  // namespace eitlab
