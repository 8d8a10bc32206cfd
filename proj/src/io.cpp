#include "eitlab/io.hpp"

#include "eitlab/errors.hpp"

#include <iomanip>
#include <ostream>

namespace eitlab {

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    std::ofstream out(dir / name);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    out << std::setprecision(17);
    return out;
}

void write_nodal_csv(std::ostream& out, const TriMesh& mesh, const Eigen::VectorXd& u) {
    if (static_cast<std::size_t>(u.size()) != mesh.num_nodes()) throw DimensionError("nodal vector size differs");
    out << "x,y,u\n";
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
        out << mesh.nodes()[i].x << ',' << mesh.nodes()[i].y << ',' << u(static_cast<Eigen::Index>(i)) << '\n';
}

void write_trace_csv(std::ostream& out, const BoundaryTrace& f) {
    out << "arclength,value\n";
    for (std::size_t i = 0; i < f.size(); ++i) out << f.arclength[i] << ',' << f.values[i] << '\n';
}

}  // namespace eitlab
