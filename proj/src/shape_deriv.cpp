#include "eitlab/shape_deriv.hpp"

#include "eitlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace eitlab {
namespace {

Eigen::Matrix<double, 2, 3> gradient_operator(const TriMesh& mesh, int tri) {
    const auto g = mesh.hat_gradients(static_cast<std::size_t>(tri));
    Eigen::Matrix<double, 2, 3> G;
    for (int k = 0; k < 3; ++k) G.col(k) << g[k].x, g[k].y;
    return G;
}

std::size_t interface_index(const TriMesh& mesh, const Polygon& P) {
    const auto p = mesh.find_interface(P);
    if (!p) throw AssemblyError("mesh does not conform to the base inclusion");
    return *p;
}

// Gradient trace on an interface edge as a linear map from the nodal values of
// the edge's two triangles: columns follow `nodes`.
struct EdgeTrace {
    std::vector<int> nodes;
    Eigen::Matrix<double, 2, Eigen::Dynamic> R;
};

EdgeTrace edge_trace(const TriMesh& mesh, const InterfaceEdge& e, double k1, TraceConvention conv) {
    EdgeTrace out;
    const auto& To = mesh.triangles()[static_cast<std::size_t>(e.outside_tri)];
    const Eigen::Matrix<double, 2, 3> Go = gradient_operator(mesh, e.outside_tri);
    if (conv == TraceConvention::outside) {
        out.nodes.assign(To.begin(), To.end());
        out.R = Go;
        return out;
    }
    const auto& Ti = mesh.triangles()[static_cast<std::size_t>(e.inside_tri)];
    const Eigen::Matrix<double, 2, 3> Gi = gradient_operator(mesh, e.inside_tri);
    const Eigen::Vector2d tau(e.tangent.x, e.tangent.y), nu(e.normal.x, e.normal.y);
    std::map<int, int> col;
    for (int v : To) col.emplace(v, static_cast<int>(col.size()));
    for (int v : Ti) col.emplace(v, static_cast<int>(col.size()));
    out.nodes.resize(col.size());
    for (const auto& [v, c] : col) out.nodes[static_cast<std::size_t>(c)] = v;
    out.R = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, static_cast<Eigen::Index>(col.size()));
    const Eigen::Matrix2d Ptau = tau * tau.transpose(), Pnu = nu * nu.transpose();
    for (int k = 0; k < 3; ++k) {
        out.R.col(col.at(To[k])) += 0.5 * (Ptau + Pnu) * Go.col(k);
        out.R.col(col.at(Ti[k])) += 0.5 * (Ptau + k1 * Pnu) * Gi.col(k);
    }
    return out;
}

}  // namespace

double PerturbationPath::vertex_motion() const {
    double v = 0.0;
    for (Vec2 d : h.displacements()) v += norm(d);
    return v;
}

PerturbationPath make_path(const PiecewiseConductivity& base, const PiecewiseConductivity& target,
                           const TriMesh& mesh, double taper) {
    interface_index(mesh, base.polygon);
    const VertexCorrespondence corr = match_vertices(base.polygon, target.polygon);
    return PerturbationPath{base, target, build_deformation(corr, mesh, taper)};
}

PerturbationPath make_path(const PiecewiseConductivity& base, const std::vector<Vec2>& V, double dk,
                           const TriMesh& mesh, double taper) {
    interface_index(mesh, base.polygon);
    PerturbationPath path;
    path.base = base;
    path.h = build_deformation(base.polygon, V, mesh, taper, &mesh.domain());
    path.target = PiecewiseConductivity{path.h.flowed(1.0), base.k + dk};
    return path;
}

bool path_conductivity_admissible(const PerturbationPath& path, const PriorInfo& pi) {
    // The admissible k form at most two intervals, one on each side of 1; the
    // segment [k1, k2] stays inside iff both ends are admissible and 1 is not
    // between them.
    const double a = path.base.k, b = path.target.k;
    return validate_conductivity(a, pi) && validate_conductivity(b, pi) && (a - 1.0) * (b - 1.0) > 0.0;
}

std::vector<Eigen::Matrix2d> interface_matrix_M(const TriMesh& mesh, double k1, std::size_t polygon) {
    std::vector<Eigen::Matrix2d> out;
    for (const InterfaceEdge& e : mesh.interface_edges(polygon)) {
        const Eigen::Vector2d tau(e.tangent.x, e.tangent.y), nu(e.normal.x, e.normal.y);
        out.push_back(tau * tau.transpose() + (1.0 / k1) * nu * nu.transpose());
    }
    return out;
}

Eigen::Matrix2d A_of_t(const Eigen::Matrix2d& hprime, double t) {
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d F = I + t * hprime;
    const double det = F.determinant();
    if (std::abs(det) < 1e-14) throw JacobianSingular("I + t h' is singular at t=" + std::to_string(t));
    const double jac = 1.0 + t * hprime.trace() + t * t * hprime.determinant();
    const Eigen::Matrix2d Finv = F.inverse();
    return Finv * Finv.transpose() * jac;
}

Eigen::Matrix2d calA_h(const Eigen::Matrix2d& hprime) {
    return hprime.trace() * Eigen::Matrix2d::Identity() - hprime - hprime.transpose();
}

namespace {
std::size_t containing_triangle(const TriMesh& mesh, Vec2 x) {
    const MeshLocator loc(mesh);
    const auto hit = loc.locate(x);
    if (hit.tri < 0) throw PreconditionError("point is outside the mesh");
    return static_cast<std::size_t>(hit.tri);
}
}  // namespace

Eigen::Matrix2d A_of_t(const DeformationField& h, const TriMesh& mesh, double t, Vec2 x) {
    return A_of_t(h.jacobian(mesh, containing_triangle(mesh, x)), t);
}

Eigen::Matrix2d calA_h(const DeformationField& h, const TriMesh& mesh, Vec2 x) {
    return calA_h(h.jacobian(mesh, containing_triangle(mesh, x)));
}

TriMesh flowed_mesh(const PerturbationPath& path, const TriMesh& base_mesh, double t) {
    if (path.h.mesh_id() != base_mesh.id()) throw DimensionError("deformation field was built on another mesh");
    const Polygon moved = path.h.flowed(t);
    std::vector<Polygon> interfaces = base_mesh.interfaces();
    interfaces[interface_index(base_mesh, path.base.polygon)] = moved;
    std::vector<Vec2> disp(path.h.values().size());
    for (std::size_t i = 0; i < disp.size(); ++i) disp[i] = t * path.h.values()[i];
    try {
        return base_mesh.transported(disp, std::move(interfaces));
    } catch (const MeshQualityError& e) {
        throw FlowDegenerate(std::string("transported mesh degenerates: ") + e.what());
    }
}

double F_of_t(const PerturbationPath& path, const TriMesh& base_mesh, double t, const BoundaryTrace& phi,
              const BoundaryTrace& psi) {
    const TriMesh mesh = flowed_mesh(path, base_mesh, t);
    const PiecewiseConductivity cond{mesh.interfaces()[interface_index(base_mesh, path.base.polygon)], path.k_at(t)};
    const DirichletSolver solver(mesh, cond);
    const Eigen::VectorXd u = solver.solve(phi.vector());
    const Eigen::VectorXd v = solver.solve(psi.vector());
    return v.dot(solver.stiffness() * u);
}

SparseMatrix derivative_form(const PerturbationPath& path, const TriMesh& mesh, TraceConvention conv) {
    if (path.h.mesh_id() != mesh.id()) throw DimensionError("deformation field was built on another mesh");
    const std::size_t p = interface_index(mesh, path.base.polygon);
    const double k1 = path.base.k, k = path.k_diff();
    std::vector<Eigen::Triplet<double>> trip;

    const auto M = interface_matrix_M(mesh, k1, p);
    const auto& edges = mesh.interface_edges(p);
    const auto& hv = path.h.values();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const InterfaceEdge& e = edges[i];
        const double h_nu = dot(0.5 * (hv[e.a] + hv[e.b]), e.normal);
        const double w = (k1 - 1.0) * h_nu * e.length;
        if (w == 0.0) continue;
        const EdgeTrace tr = edge_trace(mesh, e, k1, conv);
        const Eigen::MatrixXd block = w * tr.R.transpose() * M[i] * tr.R;
        for (std::size_t r = 0; r < tr.nodes.size(); ++r)
            for (std::size_t c = 0; c < tr.nodes.size(); ++c)
                trip.emplace_back(tr.nodes[r], tr.nodes[c], block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    if (k != 0.0) {
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
            if (!mesh.inside(t, p)) continue;
            const auto G = gradient_operator(mesh, static_cast<int>(t));
            const Eigen::Matrix3d block = k * mesh.area(t) * G.transpose() * G;
            const auto& T = mesh.triangles()[t];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) trip.emplace_back(T[r], T[c], block(r, c));
        }
    }
    SparseMatrix B(mesh.num_nodes(), mesh.num_nodes());
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
}

DerivativeParts dF_dt0_parts(const PerturbationPath& path, const FemSolution& u, const FemSolution& v,
                             TraceConvention conv) {
    const TriMesh& mesh = *u.mesh;
    if (v.mesh != u.mesh) throw DimensionError("solutions live on different meshes");
    if (path.h.mesh_id() != mesh.id()) throw DimensionError("deformation field was built on another mesh");
    const std::size_t p = interface_index(mesh, path.base.polygon);
    const double k1 = path.base.k;
    DerivativeParts parts;

    const auto M = interface_matrix_M(mesh, k1, p);
    const auto& edges = mesh.interface_edges(p);
    const auto& hv = path.h.values();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const InterfaceEdge& e = edges[i];
        const double h_nu = dot(0.5 * (hv[e.a] + hv[e.b]), e.normal);
        if (h_nu == 0.0) continue;
        const EdgeTrace tr = edge_trace(mesh, e, k1, conv);
        Eigen::VectorXd ul(tr.nodes.size()), vl(tr.nodes.size());
        for (std::size_t r = 0; r < tr.nodes.size(); ++r) {
            ul(static_cast<Eigen::Index>(r)) = u.u(tr.nodes[r]);
            vl(static_cast<Eigen::Index>(r)) = v.u(tr.nodes[r]);
        }
        const Eigen::Vector2d gu = tr.R * ul, gv = tr.R * vl;
        parts.interface_term += (k1 - 1.0) * h_nu * e.length * gu.dot(M[i] * gv);
    }
    const double k = path.k_diff();
    if (k != 0.0) {
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
            if (mesh.inside(t, p)) parts.volume_term += k * mesh.area(t) * dot(u.grad[t], v.grad[t]);
    }
    return parts;
}

DerivativeParts dF_dt0_parts(const PerturbationPath& path, const BoundaryTrace& phi, const BoundaryTrace& psi,
                             const TriMesh& mesh, TraceConvention conv) {
    const DirichletSolver solver(mesh, path.base);
    return dF_dt0_parts(path, solve_dirichlet(solver, phi), solve_dirichlet(solver, psi), conv);
}

double dF_dt0(const PerturbationPath& path, const BoundaryTrace& phi, const BoundaryTrace& psi, const TriMesh& mesh,
              TraceConvention conv) {
    return dF_dt0_parts(path, phi, psi, mesh, conv).total();
}

double dF_dt_fd(const PerturbationPath& path, const TriMesh& base_mesh, double t, const BoundaryTrace& phi,
                const BoundaryTrace& psi, double dt) {
    return (F_of_t(path, base_mesh, t + dt, phi, psi) - F_of_t(path, base_mesh, t - dt, phi, psi)) / (2.0 * dt);
}

VolumeIdentity volume_identity_check(const PerturbationPath& path, const BoundaryTrace& phi,
                                     const BoundaryTrace& psi, const TriMesh& mesh, TraceConvention conv) {
    const DirichletSolver solver(mesh, path.base);
    const FemSolution u = solve_dirichlet(solver, phi), v = solve_dirichlet(solver, psi);
    VolumeIdentity r;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Eigen::Matrix2d A = calA_h(path.h.jacobian(mesh, t));
        if (A.isZero(0.0)) continue;
        const Eigen::Vector2d gu(u.grad[t].x, u.grad[t].y), gv(v.grad[t].x, v.grad[t].y);
        r.volume_side += u.gamma[t] * mesh.area(t) * gu.dot(A * gv);
    }
    PerturbationPath shape_only = path;
    shape_only.target.k = path.base.k;
    r.interface_side = dF_dt0_parts(shape_only, u, v, conv).interface_term;
    // Both sides at rounding level (e.g. k1 = 1) count as agreement.
    const double floor = 1e-12 * path.h.w1inf() * std::sqrt(u.energy() * v.energy());
    const double scale = std::max(std::abs(r.volume_side), std::abs(r.interface_side));
    r.defect = scale <= floor ? 0.0 : std::abs(r.volume_side - r.interface_side) / scale;
    return r;
}

ContinuityProbe continuity_modulus_probe(const PerturbationPath& path, const TriMesh& base_mesh,
                                         const BoundaryTrace& phi, const BoundaryTrace& psi,
                                         const std::vector<double>& t_grid, double dt) {
    if (t_grid.size() < 4) throw PreconditionError("continuity probe needs at least four grid points");
    for (double t : t_grid)
        if (!(t > 0.0 && t <= 1.0)) throw PreconditionError("continuity probe grid must lie in (0, 1]");
    ContinuityProbe r;
    r.t = t_grid;
    r.dF0 = dF_dt_fd(path, base_mesh, 0.0, phi, psi, dt);
    std::vector<double> lx, ly, ratio;
    for (double t : t_grid) {
        const double d = dF_dt_fd(path, base_mesh, t, phi, psi, std::min(dt, 0.25 * t));
        r.dF.push_back(d);
        r.change.push_back(std::abs(d - r.dF0));
        ratio.push_back(r.change.back() / t);
        if (r.change.back() > 0.0) {
            lx.push_back(std::log(t));
            ly.push_back(std::log(r.change.back()));
        }
    }
    if (lx.size() >= 2) {
        const double n = static_cast<double>(lx.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        r.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    std::sort(ratio.begin(), ratio.end());
    const std::size_t m = ratio.size();
    r.constant = m % 2 ? ratio[m / 2] : 0.5 * (ratio[m / 2 - 1] + ratio[m / 2]);
    return r;
}

MaterialShapeCheck material_shape_check(const PerturbationPath& path, const TriMesh& base_mesh,
                                        const BoundaryTrace& phi, Vec2 x0, double dt) {
    const MeshLocator base_loc(base_mesh);
    const auto base_hit = base_loc.locate(x0);
    if (base_hit.tri < 0) throw PreconditionError("probe point is outside the mesh");

    auto nodal_solution = [&](double t, TriMesh& mesh_out) {
        mesh_out = flowed_mesh(path, base_mesh, t);
        const PiecewiseConductivity cond{mesh_out.interfaces()[interface_index(base_mesh, path.base.polygon)],
                                         path.k_at(t)};
        return DirichletSolver(mesh_out, cond).solve(phi.vector());
    };
    auto at_fixed_point = [&](const TriMesh& mesh, const Eigen::VectorXd& u) {
        const auto hit = MeshLocator(mesh).locate(x0);
        if (hit.tri < 0) throw PreconditionError("probe point left the mesh");
        const auto& T = mesh.triangles()[static_cast<std::size_t>(hit.tri)];
        return hit.bary[0] * u(T[0]) + hit.bary[1] * u(T[1]) + hit.bary[2] * u(T[2]);
    };
    auto at_transported_point = [&](const Eigen::VectorXd& u) {
        const auto& T = base_mesh.triangles()[static_cast<std::size_t>(base_hit.tri)];
        return base_hit.bary[0] * u(T[0]) + base_hit.bary[1] * u(T[1]) + base_hit.bary[2] * u(T[2]);
    };

    TriMesh mp = base_mesh, mm = base_mesh, m0 = base_mesh;
    const Eigen::VectorXd up = nodal_solution(dt, mp), um = nodal_solution(-dt, mm), u0 = nodal_solution(0.0, m0);

    MaterialShapeCheck r;
    r.shape = (at_fixed_point(mp, up) - at_fixed_point(mm, um)) / (2.0 * dt);
    r.material = (at_transported_point(up) - at_transported_point(um)) / (2.0 * dt);
    const FemSolution s0 = make_solution(m0, std::vector<double>(m0.num_triangles(), 1.0), u0);
    const Vec2 h0 = base_hit.bary[0] * path.h.values()[base_mesh.triangles()[base_hit.tri][0]] +
                    base_hit.bary[1] * path.h.values()[base_mesh.triangles()[base_hit.tri][1]] +
                    base_hit.bary[2] * path.h.values()[base_mesh.triangles()[base_hit.tri][2]];
    r.transport = dot(h0, s0.grad[static_cast<std::size_t>(base_hit.tri)]);
    const double scale = std::max(std::abs(r.material), std::abs(r.shape) + std::abs(r.transport));
    r.defect = scale == 0.0 ? 0.0 : std::abs(r.material - r.shape - r.transport) / scale;
    return r;
}

}  // namespace eitlab
