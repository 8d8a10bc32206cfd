#pragma once

#include <stdexcept>
#include <string>

namespace eitlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structurally invalid geometry (self-intersection, degenerate vertex list).
/// Distinct from an admissibility failure, which is reported, not thrown.
class GeometryError : public Error { using Error::Error; };

/// Vertex matching requested between polygons with different vertex counts.
class MatchImpossible : public Error { using Error::Error; };

/// Inner or outer offset polygon of a deformation band is not simple.
class OffsetError : public Error {
public:
    OffsetError(const std::string& what, int vertex) : Error(what), vertex_(vertex) {}
    int vertex() const noexcept { return vertex_; }

private:
    int vertex_;
};

class FlowDegenerate : public Error { using Error::Error; };
class MeshQualityError : public Error { using Error::Error; };
class AssemblyError : public Error { using Error::Error; };
class SolverError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class JacobianSingular : public Error { using Error::Error; };
class SingularityError : public Error { using Error::Error; };
class UnsupportedConfiguration : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class ResolutionError : public Error { using Error::Error; };
class DegeneratePath : public Error { using Error::Error; };
class SamplingError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

}  // namespace eitlab
