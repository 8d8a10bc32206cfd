#pragma once

#include "eitlab/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eitlab {

struct MeshSettings {
    double target_h = 0.05;
    double grading = 1.0;
    int levels = 1;  ///< number of meshes: the base mesh and levels - 1 halvings of target_h
};

struct PathSettings {
    double taper = 0.05;  ///< d0 / 2 of the configured prior unless set explicitly
    /// Prescribed vertex displacements; when empty the target inclusion defines the path.
    std::vector<Vec2> vertex_shift;
    double dk = 0.0;
    double dt = 1e-3;
    double threshold = 0.02;
};

struct GreenSettings {
    std::size_t side = 0;
    /// Ladder exponents j: sources at distance d0 * 2^-j from the side midpoint.
    std::vector<int> ladder{4, 5, 6};
    double target_h = 0.1;
    /// Radii of the growth table.
    std::vector<double> growth{0.4, 0.2, 0.1, 0.05};
};

struct CampaignSettings {
    std::vector<double> eps;
    int samples = 10;
    std::vector<double> mesh_ladder{0.05};
    std::optional<double> delta0;
};

/// Flat ini file: [section] headers with key = value lines, ';' or '#' comments.
struct RunConfig {
    std::filesystem::path source;
    Domain omega;
    std::optional<PiecewiseConductivity> base;
    std::optional<PiecewiseConductivity> target;
    PriorInfo pi;
    MeshSettings mesh;
    std::vector<std::string> traces{"x"};
    PathSettings path;
    GreenSettings green;
    CampaignSettings campaign;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir = "out";
};

/// Throws ConfigError on a missing file, bad syntax or an invalid value.
/// Relative polygon and output paths resolve against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".");

/// "a b; c d; ..." -> points.
std::vector<Vec2> parse_point_list(const std::string& text);

}  // namespace eitlab
