#include "corallite/mesher.hpp"

#include "corallite/volume_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace corallite {

EllipseSection section_from_props(const RegionProps& props, int slice_index, const StackGeometry& geometry)
{
    if (!(geometry.pixel_pitch > 0.0) || !(geometry.slice_spacing > 0.0))
        throw std::invalid_argument("section_from_props: pitch and spacing must be positive");
    EllipseSection s;
    s.center = {props.centroid_col * geometry.pixel_pitch, props.centroid_row * geometry.pixel_pitch,
                slice_index * geometry.slice_spacing};
    double semi_minor = 0.5 * props.minor_axis_len;
    if (semi_minor < 0.5) {
        semi_minor = 0.5;
        s.degenerate = true;
    }
    const double semi_major = std::max(0.5 * props.major_axis_len, semi_minor);
    s.semi_major = semi_major * geometry.pixel_pitch;
    s.semi_minor = semi_minor * geometry.pixel_pitch;
    s.orientation = props.orientation;
    return s;
}

Mesh loft_track(std::span<const EllipseSection> sections, int ring_resolution, bool caps)
{
    if (sections.size() < 2)
        throw std::invalid_argument("loft_track: need at least two sections");
    if (ring_resolution < 3)
        throw std::invalid_argument("loft_track: ring resolution must be >= 3");

    const auto m = static_cast<std::uint32_t>(ring_resolution);
    const auto rings = static_cast<std::uint32_t>(sections.size());
    Mesh mesh;
    mesh.vertices.reserve(rings * m + 2);

    for (const auto& s : sections) {
        const double ct = std::cos(s.orientation), st = std::sin(s.orientation);
        for (std::uint32_t i = 0; i < m; ++i) {
            const double t = 2.0 * std::numbers::pi * i / m;
            const double u = s.semi_major * std::cos(t);
            const double v = s.semi_minor * std::sin(t);
            mesh.vertices.push_back({s.center.x + u * ct - v * st, s.center.y + u * st + v * ct, s.center.z});
        }
    }

    for (std::uint32_t k = 0; k + 1 < rings; ++k)
        for (std::uint32_t i = 0; i < m; ++i) {
            const std::uint32_t a = k * m + i;
            const std::uint32_t b = k * m + (i + 1) % m;
            const std::uint32_t c = (k + 1) * m + (i + 1) % m;
            const std::uint32_t d = (k + 1) * m + i;
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        }

    if (caps) {
        const std::uint32_t bottom = rings * m;
        const std::uint32_t top = bottom + 1;
        mesh.vertices.push_back(sections.front().center);
        mesh.vertices.push_back(sections.back().center);
        const std::uint32_t last = (rings - 1) * m;
        for (std::uint32_t i = 0; i < m; ++i)
            mesh.triangles.push_back({bottom, (i + 1) % m, i});
        for (std::uint32_t i = 0; i < m; ++i)
            mesh.triangles.push_back({top, last + i, last + (i + 1) % m});
    }

    mesh.object_groups.push_back({0, 0, mesh.triangles.size()});
    return mesh;
}

void export_obj(std::span<const std::pair<int, Mesh>> meshes, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "# corallite colony reconstruction\n";
    out << "# objects " << meshes.size() << "\n";

    char line[160];
    std::size_t offset = 1;
    for (const auto& [id, mesh] : meshes) {
        out << "o corallite_" << id << "\n";
        for (const auto& v : mesh.vertices) {
            std::snprintf(line, sizeof line, "v %.6f %.6f %.6f\n", v.x, v.y, v.z);
            out << line;
        }
        for (const auto& t : mesh.triangles) {
            std::snprintf(line, sizeof line, "f %zu %zu %zu\n", offset + t[0], offset + t[1], offset + t[2]);
            out << line;
        }
        offset += mesh.vertices.size();
    }
    if (!out)
        throw IoError("write failed: " + path.string());
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 u{b.x - a.x, b.y - a.y, b.z - a.z};
    const Vec3 v{c.x - a.x, c.y - a.y, c.z - a.z};
    const double cx = u.y * v.z - u.z * v.y;
    const double cy = u.z * v.x - u.x * v.z;
    const double cz = u.x * v.y - u.y * v.x;
    return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

double surface_area(const Mesh& mesh)
{
    double total = 0.0;
    for (const auto& t : mesh.triangles)
        total += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    return total;
}

} // namespace corallite
