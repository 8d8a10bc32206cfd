#include "eitlab/green.hpp"

#include "eitlab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

namespace eitlab {
namespace {

constexpr double kInv2Pi = 0.5 * std::numbers::inv_pi;

// int_{u0}^{u1} log sqrt(u^2 + d^2) du.
double log_primitive(double u, double d) {
    if (d == 0.0) return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u;
    return 0.5 * u * std::log(u * u + d * d) - u + d * std::atan(u / d);
}

// int_a^b Gamma(x, y) ds(x), exact.
double segment_gamma_integral(Vec2 a, Vec2 b, Vec2 y) {
    const double len = distance(a, b);
    if (len == 0.0) return 0.0;
    const Vec2 t = (b - a) / len;
    const double u0 = dot(a - y, t), u1 = dot(b - y, t);
    const double d = std::abs(cross(t, a - y));
    return -kInv2Pi * (log_primitive(u1, d) - log_primitive(u0, d));
}

// Degree-5 rule on the reference triangle (barycentric points, weights summing to 1).
struct QuadPoint {
    double l0, l1, l2, w;
};
constexpr double kA1 = 0.059715871789770, kB1 = 0.470142064105115, kW1 = 0.132394152788506;
constexpr double kA2 = 0.797426985353087, kB2 = 0.101286507323456, kW2 = 0.125939180544827;
constexpr std::array<QuadPoint, 7> kTriRule{{
    {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
    {kA1, kB1, kB1, kW1},
    {kB1, kA1, kB1, kW1},
    {kB1, kB1, kA1, kW1},
    {kA2, kB2, kB2, kW2},
    {kB2, kA2, kB2, kW2},
    {kB2, kB2, kA2, kW2},
}};

constexpr std::array<double, 4> kGaussX{-0.861136311594053, -0.339981043584856, 0.339981043584856, 0.861136311594053};
constexpr std::array<double, 4> kGaussW{0.347854845137454, 0.652145154862546, 0.652145154862546, 0.347854845137454};

double tri_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * std::abs(cross(b - a, c - a)); }
double tri_diameter(Vec2 a, Vec2 b, Vec2 c) { return std::max({distance(a, b), distance(b, c), distance(c, a)}); }

// Integrates f over triangle abc, splitting into four while `split` asks for it.
void adaptive_triangle(Vec2 a, Vec2 b, Vec2 c, const std::function<double(Vec2)>& f,
                       const std::function<int(Vec2, Vec2, Vec2)>& split, int depth, double& acc) {
    const int action = split(a, b, c);
    if (action < 0) return;  // contributes nothing
    if (action > 0 && depth < 14) {
        const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
        adaptive_triangle(a, ab, ca, f, split, depth + 1, acc);
        adaptive_triangle(ab, b, bc, f, split, depth + 1, acc);
        adaptive_triangle(ca, bc, c, f, split, depth + 1, acc);
        adaptive_triangle(ab, bc, ca, f, split, depth + 1, acc);
        return;
    }
    const double A = tri_area(a, b, c);
    for (const QuadPoint& q : kTriRule) acc += q.w * A * f(q.l0 * a + q.l1 * b + q.l2 * c);
}

// Splits near the given singular points: a cell is refined while it is closer
// to one of them than twice its diameter.
bool near_singularity(Vec2 a, Vec2 b, Vec2 c, std::initializer_list<Vec2> points, double min_size) {
    const double diam = tri_diameter(a, b, c);
    if (diam < min_size) return false;
    for (Vec2 p : points)
        if (point_triangle_distance(p, a, b, c) < 2.0 * diam) return true;
    return false;
}

std::size_t polygon_index(const TriMesh& mesh, const Polygon& P) {
    const auto p = mesh.find_interface(P);
    if (!p) throw AssemblyError("mesh does not conform to the inclusion");
    return *p;
}

}  // namespace

KernelValue fundamental_solution(Vec2 x, Vec2 y) {
    const Vec2 d = x - y;
    const double r2 = dot(d, d);
    if (r2 == 0.0) throw SingularityError("fundamental solution evaluated at the source");
    return {-0.5 * kInv2Pi * std::log(r2), -kInv2Pi / r2 * d};
}

Domain green_domain(const Domain& omega, const PriorInfo& pi) { return omega.dilated(0.5 * pi.r0); }

double GreenSolution::operator()(Vec2 x) const {
    const auto hit = locator->locate(x);
    if (hit.tri < 0) throw PreconditionError("evaluation point is outside the extended domain");
    const auto& T = mesh().triangles()[static_cast<std::size_t>(hit.tri)];
    const double wx = hit.bary[0] * w.u(T[0]) + hit.bary[1] * w.u(T[1]) + hit.bary[2] * w.u(T[2]);
    return fundamental_solution(x, y).value + wx;
}

Vec2 GreenSolution::gradient(Vec2 x) const {
    const auto hit = locator->locate(x);
    if (hit.tri < 0) throw PreconditionError("evaluation point is outside the extended domain");
    return gradient(x, hit.tri);
}

Vec2 GreenSolution::gradient(Vec2 x, int tri) const {
    return fundamental_solution(x, y).gradient + w.grad[static_cast<std::size_t>(tri)];
}

double GreenSolution::source_flux() const {
    const TriMesh& m = mesh();
    // Gamma part: each boundary edge contributes the angle it subtends at y.
    double flux = 0.0;
    for (const BoundaryEdge& e : m.boundary_edges()) {
        const Vec2 a = m.nodes()[e.a] - y, b = m.nodes()[e.b] - y;
        flux += std::atan2(cross(a, b), dot(a, b)) * kInv2Pi;
    }
    // Smooth part: discrete boundary flux sum_B (K w)_i with gamma = 1 on the boundary.
    const SparseMatrix K = assemble_stiffness(m, w.gamma);
    const Eigen::VectorXd Kw = K * w.u;
    for (int i : m.boundary_nodes()) flux -= Kw(i);
    return flux;
}

GreenSolver::GreenSolver(const TriMesh& mesh, const PiecewiseConductivity& cond, const Domain& omega0)
    : cond_(cond), polygon_(polygon_index(mesh, cond.polygon)), solver_(mesh, cond),
      locator_(std::make_shared<MeshLocator>(mesh)) {
    if (!mesh.domain().boundary().same_shape(omega0.boundary(), 1e-9))
        throw PreconditionError("mesh does not triangulate the extended domain");
}

GreenSolution GreenSolver::solve(Vec2 y) const {
    const TriMesh& m = mesh();
    if (cond_.polygon.contains(y) || cond_.polygon.boundary_distance(y) <= kGeomEps)
        throw UnsupportedConfiguration("Green source must lie outside the closed inclusion");
    if (locator_->locate(y).tri < 0) throw PreconditionError("Green source is outside the extended domain");
    for (int i : m.boundary_nodes())
        if (distance(m.nodes()[i], y) <= kGeomEps) throw PreconditionError("Green source lies on the outer boundary");

    // Load -(k - 1) int_P grad(Gamma) . grad(phi_i); per triangle the integral of
    // grad(Gamma) is the boundary integral of Gamma n.
    Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.num_nodes()));
    const double km1 = cond_.k - 1.0;
    if (km1 != 0.0) {
        for (std::size_t t = 0; t < m.num_triangles(); ++t) {
            if (!m.inside(t, polygon_)) continue;
            const auto& T = m.triangles()[t];
            Vec2 I{0.0, 0.0};
            for (int e = 0; e < 3; ++e) {
                const Vec2 a = m.nodes()[T[e]], b = m.nodes()[T[(e + 1) % 3]];
                const double len = distance(a, b);
                I += segment_gamma_integral(a, b, y) * (perp_cw(b - a) / len);
            }
            const auto g = m.hat_gradients(t);
            for (int k = 0; k < 3; ++k) load(T[k]) -= km1 * dot(g[k], I);
        }
    }
    const auto& inodes = m.interior_nodes();
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(inodes.size()));
    for (std::size_t i = 0; i < inodes.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = load(inodes[i]);
    const auto& bnodes = m.boundary_nodes();
    Eigen::VectorXd g(static_cast<Eigen::Index>(bnodes.size()));
    for (std::size_t i = 0; i < bnodes.size(); ++i)
        g(static_cast<Eigen::Index>(i)) = -fundamental_solution(m.nodes()[bnodes[i]], y).value;

    GreenSolution gs;
    gs.y = y;
    gs.cond = cond_;
    gs.w = make_solution(m, solver_.gamma(), solver_.solve(g, rhs));
    gs.locator = locator_;
    return gs;
}

GreenSolution green_solve(const TriMesh& mesh, const PiecewiseConductivity& cond, Vec2 y, const Domain& omega0) {
    return GreenSolver(mesh, cond, omega0).solve(y);
}

LocalScales local_scales(const PriorInfo& pi) { return {0.25 * pi.d0, 0.125 * pi.d0}; }

Vec2 ladder_source(const Polygon& P, std::size_t side, double r, const PriorInfo& pi) {
    if (side >= P.size()) throw PreconditionError("side index out of range");
    const LocalScales s = local_scales(pi);
    if (!(r > 0.0 && r < s.r1)) throw PreconditionError("ladder distance must lie in (0, r1)");
    const Vec2 mid = 0.5 * (P.side_start(side) + P.side_end(side));
    for (Vec2 v : P.vertices())
        if (distance(v, mid) < s.rho0) throw PreconditionError("edge midpoint is within rho0 of a vertex");
    return mid + r * P.outward_normal(side);
}

MeshOptions ladder_mesh_options(Vec2 source, double r, double target_h) {
    MeshOptions o;
    o.target_h = target_h;
    o.size_slope = 0.3;
    o.spots.push_back({source, 2.0 * r, 0.25 * r});
    return o;
}

LocalBehavior local_behavior_check(const GreenSolution& gs, std::size_t side, double r, const PriorInfo& pi) {
    const Polygon& P = gs.cond.polygon;
    const Vec2 expected = ladder_source(P, side, r, pi);
    if (distance(expected, gs.y) > 1e-12 * std::max(1.0, norm(expected)))
        throw PreconditionError("Green solution was not solved for this ladder source");
    const LocalScales s = local_scales(pi);
    const Vec2 mid = 0.5 * (P.side_start(side) + P.side_end(side));
    const Vec2 n = P.outward_normal(side), t{-n.y, n.x};

    LocalBehavior out;
    out.r = r;
    out.coefficient = 2.0 / (gs.cond.k + 1.0);
    bool have_nearest = false;
    for (double rho = r; rho <= s.r1 * (1.0 + 1e-12); rho *= 2.0) {
        for (int a = -2; a <= 2; ++a) {
            const double th = a * std::numbers::pi / 6.0;
            const Vec2 x = mid + rho * (-std::cos(th) * n + std::sin(th) * t);
            if (!P.contains(x) || P.boundary_distance(x) <= kGeomEps) continue;
            const double G = gs(x);
            const double Gam = fundamental_solution(x, gs.y).value;
            out.defect = std::max(out.defect, std::abs(G - out.coefficient * Gam));
            ++out.samples;
            if (!have_nearest) {
                have_nearest = true;
                out.nearest = x;
                out.gamma_nearest = Gam;
                out.ratio = G / Gam;
            }
        }
    }
    if (!have_nearest) throw PreconditionError("no sample point lies inside the inclusion");
    return out;
}

double gradient_mass_outside_ball(const GreenSolution& gs, double r) {
    const TriMesh& m = gs.mesh();
    const Vec2 y = gs.y;
    double total = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& T = m.triangles()[t];
        const Vec2 gw = gs.w.grad[t];
        auto f = [&](Vec2 x) { return dot(x - y, x - y) < r * r ? 0.0 : norm(fundamental_solution(x, y).gradient + gw); };
        auto split = [&](Vec2 a, Vec2 b, Vec2 c) {
            const double far = std::max({distance(a, y), distance(b, y), distance(c, y)});
            if (far <= r) return -1;
            const double near = point_triangle_distance(y, a, b, c);
            const double diam = tri_diameter(a, b, c);
            if (near < r && diam > r / 64.0) return 1;  // cut by the circle
            return near_singularity(a, b, c, {y}, r / 8.0) ? 1 : 0;
        };
        adaptive_triangle(m.nodes()[T[0]], m.nodes()[T[1]], m.nodes()[T[2]], f, split, 0, total);
    }
    return total;
}

GrowthTable global_growth_probe(const GreenSolution& gs, const std::vector<double>& r_ladder) {
    for (std::size_t i = 0; i < r_ladder.size(); ++i) {
        if (!(r_ladder[i] > 0.0)) throw PreconditionError("ladder radii must be positive");
        if (i && !(r_ladder[i] < r_ladder[i - 1])) throw PreconditionError("ladder must be strictly decreasing");
    }
    const auto hit = gs.locator->locate(gs.y);
    const double local_h = gs.mesh().diameter(static_cast<std::size_t>(hit.tri));
    GrowthTable table;
    for (double r : r_ladder) {
        if (r < 2.0 * local_h)
            throw ResolutionError("radius " + std::to_string(r) + " is below twice the local element size " +
                                  std::to_string(local_h));
        GrowthRow row;
        row.r = r;
        row.integral = gradient_mass_outside_ball(gs, r);
        const double lg = std::abs(std::log(r));
        row.envelope = lg * lg * lg + 1.0 / (r * r * r);
        table.c = std::max(table.c, row.integral / row.envelope);
        table.rows.push_back(row);
    }
    return table;
}

double S_functional(const GreenSolution& gy, const GreenSolution& gz, const PerturbationPath& path) {
    if (gy.w.mesh != gz.w.mesh) throw DimensionError("Green solutions live on different meshes");
    const TriMesh& m = gy.mesh();
    const Polygon& P = path.base.polygon;
    if (P.boundary_distance(gy.y) <= kGeomEps || P.boundary_distance(gz.y) <= kGeomEps)
        throw SingularityError("Green source lies on the inclusion boundary");
    const double v = path.vertex_motion(), k = path.k_diff();
    const double scale = v + std::abs(k);
    if (scale == 0.0) throw DegeneratePath("zero perturbation: v + |k| = 0");
    const double k1 = path.base.k;
    const std::size_t p = polygon_index(m, P);

    double interface = 0.0;
    if (v > 0.0) {
        for (const InterfaceEdge& e : m.interface_edges(p)) {
            const Vec2 a = m.nodes()[e.a], b = m.nodes()[e.b];
            const Eigen::Vector2d tau(e.tangent.x, e.tangent.y), nu(e.normal.x, e.normal.y);
            const Eigen::Matrix2d M = tau * tau.transpose() + (1.0 / k1) * nu * nu.transpose();
            // Bisect the edge while a source is closer than the piece length.
            std::function<void(double, double, int)> piece = [&](double s0, double s1, int depth) {
                const Vec2 pa = a + s0 * (b - a), pb = a + s1 * (b - a);
                const double len = distance(pa, pb);
                const double d = std::min(point_segment_distance(gy.y, pa, pb), point_segment_distance(gz.y, pa, pb));
                if (d < len && depth < 30) {
                    const double sm = 0.5 * (s0 + s1);
                    piece(s0, sm, depth + 1);
                    piece(sm, s1, depth + 1);
                    return;
                }
                for (std::size_t q = 0; q < kGaussX.size(); ++q) {
                    const double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * kGaussX[q];
                    const Vec2 x = a + s * (b - a);
                    const double h_nu = dot(path.h.evaluate(x), e.normal);
                    const Vec2 g1 = gy.gradient(x, e.outside_tri), g2 = gz.gradient(x, e.outside_tri);
                    const Eigen::Vector2d u1(g1.x, g1.y), u2(g2.x, g2.y);
                    interface += 0.5 * len * kGaussW[q] * h_nu * u1.dot(M * u2);
                }
            };
            piece(0.0, 1.0, 0);
        }
    }
    double volume = 0.0;
    if (k != 0.0) {
        for (std::size_t t = 0; t < m.num_triangles(); ++t) {
            if (!m.inside(t, p)) continue;
            const auto& T = m.triangles()[t];
            const int ti = static_cast<int>(t);
            auto f = [&](Vec2 x) { return dot(gy.gradient(x, ti), gz.gradient(x, ti)); };
            auto split = [&](Vec2 a, Vec2 b, Vec2 c) {
                return near_singularity(a, b, c, {gy.y, gz.y}, 1e-9) ? 1 : 0;
            };
            adaptive_triangle(m.nodes()[T[0]], m.nodes()[T[1]], m.nodes()[T[2]], f, split, 0, volume);
        }
    }
    return ((1.0 - k1) * interface - k * volume) / scale;
}

void write_local_csv(std::ostream& out, const std::vector<LocalBehavior>& rows) {
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(17);
    out << "r,coefficient,ratio,defect,gamma_nearest,samples\n";
    for (const LocalBehavior& b : rows)
        out << b.r << ',' << b.coefficient << ',' << b.ratio << ',' << b.defect << ',' << b.gamma_nearest << ','
            << b.samples << '\n';
    out.flags(flags);
    out.precision(prec);
}

void write_growth_csv(std::ostream& out, const GrowthTable& table) {
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(17);
    out << "r,integral,envelope,c\n";
    for (const GrowthRow& row : table.rows)
        out << row.r << ',' << row.integral << ',' << row.envelope << ',' << table.c << '\n';
    out.flags(flags);
    out.precision(prec);
}

}  // namespace eitlab
