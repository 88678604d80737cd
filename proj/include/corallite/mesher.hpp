#pragma once

#include "corallite/regions.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace corallite {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct StackGeometry {
    double pixel_pitch = 1.0;
    double slice_spacing = 1.0;
};

/// Ellipse in physical space: x = col * pitch, y = row * pitch, z = slice * spacing.
struct EllipseSection {
    Vec3 center;
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double orientation = 0.0;  // radians from the x axis
    bool degenerate = false;   // minor axis was clamped
};

/// Minor semi-axes below half a pixel are clamped to half a pixel and flagged.
EllipseSection section_from_props(const RegionProps& props, int slice_index, const StackGeometry& geometry);

using Triangle = std::array<std::uint32_t, 3>;

struct ObjectGroup {
    int id = 0;
    std::size_t first_triangle = 0;
    std::size_t triangle_count = 0;
};

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<ObjectGroup> object_groups;
};

/// Rings of M points per section joined index-to-index into 2M triangles per
/// segment; optional triangle-fan caps. Normals face outward.
/// Vertex layout: ring k point i at k * M + i, then bottom and top cap centres.
Mesh loft_track(std::span<const EllipseSection> sections, int ring_resolution = 16, bool caps = true);

/// Wavefront OBJ with one `o corallite_<id>` object per mesh and 1-based indices.
void export_obj(std::span<const std::pair<int, Mesh>> meshes, const std::filesystem::path& path);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double surface_area(const Mesh& mesh);

} // namespace corallite
