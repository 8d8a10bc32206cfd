#include "eitlab/fem.hpp"

#include "eitlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eitlab {

std::vector<double> element_conductivity(const TriMesh& mesh, const PiecewiseConductivity& cond) {
    const auto p = mesh.find_interface(cond.polygon);
    if (!p) throw AssemblyError("mesh has no interface matching the inclusion polygon");
    std::vector<double> gamma(mesh.num_triangles(), 1.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        if (mesh.inside(t, *p)) gamma[t] = cond.k;
    return gamma;
}

SparseMatrix assemble_stiffness(const TriMesh& mesh, const std::vector<double>& gamma) {
    if (gamma.size() != mesh.num_triangles()) throw AssemblyError("one conductivity value per triangle is required");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto g = mesh.hat_gradients(t);
        const auto& T = mesh.triangles()[t];
        const double w = gamma[t] * mesh.area(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(T[i], T[j], w * dot(g[i], g[j]));
    }
    SparseMatrix K(mesh.num_nodes(), mesh.num_nodes());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

SparseMatrix assemble_stiffness(const TriMesh& mesh, const PiecewiseConductivity& cond) {
    return assemble_stiffness(mesh, element_conductivity(mesh, cond));
}

SparseMatrix assemble_tensor_form(const TriMesh& mesh, const std::vector<Eigen::Matrix2d>& A) {
    if (A.size() != mesh.num_triangles()) throw AssemblyError("one tensor per triangle is required");
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        if (A[t].isZero(0.0)) continue;
        const auto g = mesh.hat_gradients(t);
        const auto& T = mesh.triangles()[t];
        const double area = mesh.area(t);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const Eigen::Vector2d gj(g[j].x, g[j].y);
                const Eigen::Vector2d Ag = A[t] * gj;
                trip.emplace_back(T[i], T[j], area * (g[i].x * Ag(0) + g[i].y * Ag(1)));
            }
        }
    }
    SparseMatrix B(mesh.num_nodes(), mesh.num_nodes());
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
}

BoundaryTrace BoundaryTrace::scaled(double c) const {
    BoundaryTrace out = *this;
    for (double& v : out.values) v *= c;
    return out;
}

BoundaryTrace trace_from_function(const TriMesh& mesh, const std::function<double(Vec2)>& f) {
    BoundaryTrace tr;
    tr.arclength = mesh.boundary_arclength();
    tr.values.reserve(mesh.boundary_nodes().size());
    for (int v : mesh.boundary_nodes()) tr.values.push_back(f(mesh.nodes()[v]));
    return tr;
}

BoundaryTrace trace_from_vector(const TriMesh& mesh, const Eigen::VectorXd& v) {
    if (static_cast<std::size_t>(v.size()) != mesh.boundary_nodes().size())
        throw DimensionError("trace length differs from the boundary node count");
    BoundaryTrace tr;
    tr.arclength = mesh.boundary_arclength();
    tr.values.assign(v.data(), v.data() + v.size());
    return tr;
}

BoundaryTrace trace_mode(const TriMesh& mesh, const std::string& name) {
    if (name == "const") return trace_from_function(mesh, [](Vec2) { return 1.0; });
    if (name == "x") return trace_from_function(mesh, [](Vec2 p) { return p.x; });
    if (name == "y") return trace_from_function(mesh, [](Vec2 p) { return p.y; });
    const auto colon = name.find(':');
    const std::string kind = name.substr(0, colon);
    if (colon == std::string::npos || (kind != "cos" && kind != "sin"))
        throw ConfigError("unknown trace '" + name + "' (expected const, x, y, cos:m or sin:m)");
    int m = 0;
    try {
        m = std::stoi(name.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad mode number in trace '" + name + "'");
    }
    double perimeter = 0.0;
    for (const BoundaryEdge& e : mesh.boundary_edges()) perimeter += distance(mesh.nodes()[e.a], mesh.nodes()[e.b]);
    BoundaryTrace tr;
    tr.arclength = mesh.boundary_arclength();
    for (double s : tr.arclength) {
        const double arg = 2.0 * std::numbers::pi * m * s / perimeter;
        tr.values.push_back(kind == "cos" ? std::cos(arg) : std::sin(arg));
    }
    return tr;
}

DirichletSolver::DirichletSolver(const TriMesh& mesh, const PiecewiseConductivity& cond)
    : DirichletSolver(mesh, element_conductivity(mesh, cond)) {}

DirichletSolver::DirichletSolver(const TriMesh& mesh, std::vector<double> gamma)
    : mesh_(&mesh), gamma_(std::move(gamma)) {
    K_ = assemble_stiffness(mesh, gamma_);
    const auto& interior = mesh.interior_nodes();
    const std::size_t ni = interior.size(), nb = mesh.boundary_nodes().size();
    interior_pos_.assign(mesh.num_nodes(), -1);
    for (std::size_t i = 0; i < ni; ++i) interior_pos_[interior[i]] = static_cast<int>(i);

    std::vector<Eigen::Triplet<double>> ii, ib, bb;
    for (int col = 0; col < K_.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(K_, col); it; ++it) {
            const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            const int ri = interior_pos_[r], ci = interior_pos_[c];
            if (ri >= 0 && ci >= 0) ii.emplace_back(ri, ci, it.value());
            else if (ri >= 0) ib.emplace_back(ri, mesh.boundary_index(c), it.value());
            else if (ci < 0) bb.emplace_back(mesh.boundary_index(r), mesh.boundary_index(c), it.value());
        }
    }
    K_II_.resize(ni, ni);
    K_II_.setFromTriplets(ii.begin(), ii.end());
    K_IB_.resize(ni, nb);
    K_IB_.setFromTriplets(ib.begin(), ib.end());
    K_BB_.resize(nb, nb);
    K_BB_.setFromTriplets(bb.begin(), bb.end());

    chol_ = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>();
    if (ni > 0) {
        chol_->compute(K_II_);
        if (chol_->info() != Eigen::Success) throw SolverError("Cholesky factorization of the interior block failed");
    }
}

Eigen::VectorXd DirichletSolver::solve(const Eigen::VectorXd& g) const {
    return solve(g, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_->interior_nodes().size())));
}

Eigen::VectorXd DirichletSolver::solve(const Eigen::VectorXd& g, const Eigen::VectorXd& rhs_interior) const {
    const auto& bnodes = mesh_->boundary_nodes();
    const auto& inodes = mesh_->interior_nodes();
    if (static_cast<std::size_t>(g.size()) != bnodes.size()) throw DimensionError("trace length differs from boundary");
    Eigen::VectorXd u(mesh_->num_nodes());
    for (std::size_t i = 0; i < bnodes.size(); ++i) u(bnodes[i]) = g(static_cast<Eigen::Index>(i));
    if (!inodes.empty()) {
        const Eigen::VectorXd ui = chol_->solve(rhs_interior - K_IB_ * g);
        if (chol_->info() != Eigen::Success) throw SolverError("back substitution failed");
        for (std::size_t i = 0; i < inodes.size(); ++i) u(inodes[i]) = ui(static_cast<Eigen::Index>(i));
    }
    return u;
}

Eigen::MatrixXd DirichletSolver::schur_complement() const {
    const Eigen::Index nb = K_BB_.rows();
    Eigen::MatrixXd S = Eigen::MatrixXd(K_BB_);
    if (K_II_.rows() == 0) return S;
    constexpr Eigen::Index block = 64;
    for (Eigen::Index c0 = 0; c0 < nb; c0 += block) {
        const Eigen::Index m = std::min(block, nb - c0);
        const Eigen::MatrixXd rhs = Eigen::MatrixXd(K_IB_.middleCols(c0, m));
        const Eigen::MatrixXd Y = chol_->solve(rhs);
        S.middleCols(c0, m) -= K_IB_.transpose() * Y;
    }
    return S;
}

Eigen::MatrixXd DirichletSolver::extension_form(const SparseMatrix& B) const {
    const Eigen::Index nb = K_BB_.rows();
    const auto& bnodes = mesh_->boundary_nodes();
    const auto& inodes = mesh_->interior_nodes();
    const Eigen::Index n = static_cast<Eigen::Index>(mesh_->num_nodes());
    if (B.rows() != n || B.cols() != n) throw DimensionError("form size differs from node count");
    Eigen::MatrixXd H(nb, nb);
    constexpr Eigen::Index block = 64;
    for (Eigen::Index c0 = 0; c0 < nb; c0 += block) {
        const Eigen::Index m = std::min(block, nb - c0);
        Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, m);
        for (Eigen::Index j = 0; j < m; ++j) Y(bnodes[c0 + j], j) = 1.0;
        if (!inodes.empty()) {
            const Eigen::MatrixXd X = chol_->solve(-Eigen::MatrixXd(K_IB_.middleCols(c0, m)));
            for (std::size_t i = 0; i < inodes.size(); ++i) Y.row(inodes[i]) = X.row(static_cast<Eigen::Index>(i));
        }
        const Eigen::MatrixXd Z = B * Y;
        Eigen::MatrixXd ZB(nb, m), ZI(static_cast<Eigen::Index>(inodes.size()), m);
        for (Eigen::Index i = 0; i < nb; ++i) ZB.row(i) = Z.row(bnodes[i]);
        for (std::size_t i = 0; i < inodes.size(); ++i) ZI.row(static_cast<Eigen::Index>(i)) = Z.row(inodes[i]);
        H.middleCols(c0, m) = ZB;
        if (!inodes.empty()) H.middleCols(c0, m) -= K_IB_.transpose() * chol_->solve(ZI);
    }
    return H;
}

double DirichletSolver::interior_residual(const Eigen::VectorXd& u) const {
    const auto& bnodes = mesh_->boundary_nodes();
    const auto& inodes = mesh_->interior_nodes();
    if (inodes.empty()) return 0.0;
    Eigen::VectorXd ub(bnodes.size()), ui(inodes.size());
    for (std::size_t i = 0; i < bnodes.size(); ++i) ub(static_cast<Eigen::Index>(i)) = u(bnodes[i]);
    for (std::size_t i = 0; i < inodes.size(); ++i) ui(static_cast<Eigen::Index>(i)) = u(inodes[i]);
    const Eigen::VectorXd a = K_II_ * ui, b = K_IB_ * ub;
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a + b).norm() / scale;
}

double FemSolution::energy() const { return energy_product(*this); }

double FemSolution::energy_product(const FemSolution& other) const {
    if (other.mesh != mesh) throw DimensionError("solutions live on different meshes");
    double e = 0.0;
    for (std::size_t t = 0; t < grad.size(); ++t) e += gamma[t] * mesh->area(t) * dot(grad[t], other.grad[t]);
    return e;
}

FemSolution make_solution(const TriMesh& mesh, std::vector<double> gamma, Eigen::VectorXd u) {
    FemSolution s;
    s.mesh = &mesh;
    s.gamma = std::move(gamma);
    s.u = std::move(u);
    s.grad.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto g = mesh.hat_gradients(t);
        const auto& T = mesh.triangles()[t];
        s.grad[t] = s.u(T[0]) * g[0] + s.u(T[1]) * g[1] + s.u(T[2]) * g[2];
    }
    return s;
}

FemSolution solve_dirichlet(const DirichletSolver& solver, const BoundaryTrace& f) {
    const Eigen::VectorXd g = f.vector();
    FemSolution s = make_solution(solver.mesh(), solver.gamma(), solver.solve(g));
    s.residual = solver.interior_residual(s.u);
    if (g.size() > 0) {
        s.max_principle_defect = std::max({0.0, g.minCoeff() - s.u.minCoeff(), s.u.maxCoeff() - g.maxCoeff()});
    }
    return s;
}

FemSolution solve_dirichlet(const TriMesh& mesh, const PiecewiseConductivity& cond, const BoundaryTrace& f) {
    const DirichletSolver solver(mesh, cond);
    return solve_dirichlet(solver, f);
}

std::vector<Vec2> interior_gradient_on_interface(const FemSolution& sol, Side side, std::size_t polygon) {
    std::vector<Vec2> out;
    for (const InterfaceEdge& e : sol.mesh->interface_edges(polygon)) {
        const int t = side == Side::inside ? e.inside_tri : e.outside_tri;
        if (t < 0) throw MeshQualityError("interface edge without a neighbour on the requested side");
        out.push_back(sol.grad[t]);
    }
    return out;
}

InterfaceJumpReport interface_jumps(const FemSolution& sol, double k, std::size_t polygon) {
    InterfaceJumpReport r;
    double num = 0.0, len = 0.0;
    for (const InterfaceEdge& e : sol.mesh->interface_edges(polygon)) {
        const Vec2 gi = sol.grad[e.inside_tri], go = sol.grad[e.outside_tri];
        r.max_tangential_jump = std::max(r.max_tangential_jump, std::abs(dot(gi - go, e.tangent)));
        const double defect = std::abs(k * dot(gi, e.normal) - dot(go, e.normal));
        r.max_flux_defect = std::max(r.max_flux_defect, defect);
        num += e.length * defect * defect;
        len += e.length;
    }
    r.l2_flux_defect = len > 0.0 ? std::sqrt(num / len) : 0.0;
    return r;
}

}  // namespace eitlab
