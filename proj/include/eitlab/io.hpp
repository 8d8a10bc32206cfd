#pragma once

#include "eitlab/fem.hpp"
#include "eitlab/mesh.hpp"

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>

namespace eitlab {

/// Opens dir/name for writing, creating dir as needed, with 17-digit
/// floating-point output. Throws ConfigError when the file cannot be created.
std::ofstream open_output(const std::filesystem::path& dir, const std::string& name);

/// "x,y,u" rows, one per node.
void write_nodal_csv(std::ostream& out, const TriMesh& mesh, const Eigen::VectorXd& u);

/// "arclength,value" rows in trace order.
void write_trace_csv(std::ostream& out, const BoundaryTrace& f);

}  // namespace eitlab
