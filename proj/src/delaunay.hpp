#pragma once

// Internal: Delaunay refinement of a planar straight-line graph.

#include "eitlab/geometry.hpp"

#include <array>
#include <functional>
#include <vector>

namespace eitlab::detail {

struct Pslg {
    std::vector<Vec2> points;
    /// Per point: -1 for an input vertex, otherwise the input segment it lies on.
    std::vector<int> owner;
    /// Input segments as pairs of input-vertex indices into `points`.
    std::vector<std::array<int, 2>> segments;
    /// Pre-split pieces (point indices) covering every input segment.
    std::vector<std::array<int, 3>> pieces;  // a, b, segment
};

struct RefineLimits {
    /// Largest admissible triangle diameter for the triangle (a, b, c).
    std::function<double(Vec2, Vec2, Vec2)> size;
    /// True for points of the meshed region.
    std::function<bool(Vec2)> inside;
    double min_angle_deg = 20.7;
    /// Triangles whose shortest edge is below this are never split for quality.
    double length_floor = 0.0;
    std::size_t max_points = 2'000'000;
};

struct RefineOutput {
    std::vector<Vec2> points;
    std::vector<std::array<int, 3>> triangles;
    std::size_t steiner = 0;
    std::size_t exempt = 0;
    std::size_t bad = 0;
    double min_angle_deg = 180.0;
};

RefineOutput delaunay_refine(const Pslg& pslg, const RefineLimits& limits);

}  // namespace eitlab::detail
