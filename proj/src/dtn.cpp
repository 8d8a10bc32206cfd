#include "eitlab/dtn.hpp"

#include "eitlab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <ostream>

namespace eitlab {

DtnMatrix assemble_dtn(const DirichletSolver& solver) {
    DtnMatrix d;
    d.L = solver.schur_complement();
    d.arclength = solver.mesh().boundary_arclength();
    d.mesh_id = solver.mesh().id();
    return d;
}

DtnMatrix assemble_dtn(const TriMesh& mesh, const PiecewiseConductivity& cond) {
    return assemble_dtn(DirichletSolver(mesh, cond));
}

DtnMatrix assemble_dtn_homogeneous(const TriMesh& mesh) {
    return assemble_dtn(DirichletSolver(mesh, std::vector<double>(mesh.num_triangles(), 1.0)));
}

Eigen::VectorXd boundary_lumped_mass(const TriMesh& mesh) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.boundary_nodes().size()));
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        const double half = 0.5 * distance(mesh.nodes()[e.a], mesh.nodes()[e.b]);
        m(mesh.boundary_index(e.a)) += half;
        m(mesh.boundary_index(e.b)) += half;
    }
    return m;
}

HalfGram half_gram_from(const DtnMatrix& homogeneous, const TriMesh& mesh) {
    if (homogeneous.mesh_id != mesh.id()) throw DimensionError("homogeneous DtN built on another mesh");
    HalfGram g;
    g.N = homogeneous.L;
    g.N.diagonal() += boundary_lumped_mass(mesh);
    g.N = 0.5 * (g.N + g.N.transpose()).eval();
    g.mesh_id = mesh.id();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.N);
    if (es.info() != Eigen::Success) throw SolverError("eigendecomposition of the H1/2 Gram matrix failed");
    g.min_eigenvalue = es.eigenvalues().minCoeff();
    if (!(g.min_eigenvalue > 0.0)) throw SolverError("H1/2 Gram matrix is not positive definite");
    g.inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                 es.eigenvectors().transpose();
    return g;
}

HalfGram assemble_half_gram(const TriMesh& mesh) { return half_gram_from(assemble_dtn_homogeneous(mesh), mesh); }

double whitened_norm(const Eigen::MatrixXd& D, const HalfGram& N) {
    if (D.rows() != N.N.rows() || D.cols() != N.N.cols()) throw DimensionError("operator and Gram sizes differ");
    // The operators compared here are symmetric in exact arithmetic; only the
    // symmetric part is whitened so that a symmetric eigensolver applies.
    const Eigen::MatrixXd S = 0.5 * (D + D.transpose());
    const Eigen::MatrixXd W = N.inv_sqrt * S * N.inv_sqrt;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolverError("eigendecomposition of the whitened operator failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double op_norm_diff(const DtnMatrix& L1, const DtnMatrix& L2, const HalfGram& N) {
    if (L1.L.rows() != L2.L.rows() || L1.mesh_id != L2.mesh_id || L1.mesh_id != N.mesh_id)
        throw DimensionError("DtN matrices live on different boundary bases");
    return whitened_norm(L1.L - L2.L, N);
}

double pairing(const DtnMatrix& L, const BoundaryTrace& phi, const BoundaryTrace& psi) {
    if (phi.size() != static_cast<std::size_t>(L.L.rows()) || psi.size() != phi.size())
        throw DimensionError("trace length differs from the DtN size");
    return psi.vector().dot(L.L * phi.vector());
}

DtnStructure check_structure(const DtnMatrix& L) {
    DtnStructure s;
    const double scale = L.L.cwiseAbs().maxCoeff();
    if (scale == 0.0) return s;
    s.asymmetry = (L.L - L.L.transpose()).cwiseAbs().maxCoeff() / scale;
    s.max_row_sum = L.L.rowwise().sum().cwiseAbs().maxCoeff() / scale;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (L.L + L.L.transpose()), Eigen::EigenvaluesOnly);
    s.min_mean_zero_eig = es.eigenvalues().minCoeff() / scale;
    return s;
}

void write_dtn(std::ostream& out, const DtnMatrix& L, const std::string& comment) {
    const auto old_flags = out.flags();
    const auto old_prec = out.precision();
    out << std::setprecision(17);
    out << "# eitlab dtn\n";
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "# " << kHalfNormRealization << '\n';
    out << "size " << L.L.rows() << '\n';
    out << "arclength";
    for (double s : L.arclength) out << ' ' << s;
    out << '\n';
    for (Eigen::Index i = 0; i < L.L.rows(); ++i) {
        for (Eigen::Index j = 0; j < L.L.cols(); ++j) out << (j ? " " : "") << L.L(i, j);
        out << '\n';
    }
    out.flags(old_flags);
    out.precision(old_prec);
}

}  // namespace eitlab
