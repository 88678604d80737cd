#pragma once

#include "corallite/image.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace corallite {

/// Raised for unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered grayscale slices of one colony volume. Slice i has index i.
struct SliceStack {
    std::vector<GrayImage> slices;
    int bit_depth = 8;           // 8 or 16
    double slice_spacing = 1.0;  // physical depth per slice index
    double pixel_pitch = 1.0;    // physical size per pixel
    std::string axis_label = "growth";

    int depth() const noexcept { return static_cast<int>(slices.size()); }
    int height() const noexcept { return slices.empty() ? 0 : slices.front().height(); }
    int width() const noexcept { return slices.empty() ? 0 : slices.front().width(); }

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;
};

struct MaskSlice {
    BinaryImage raster;
    int slice_index = 0;
};

enum class AnnotationKind { full, partial_points };

struct AnnotationEntry {
    std::filesystem::path path;
    AnnotationKind kind = AnnotationKind::full;
};

/// Dataset description. Relative paths are resolved against base_dir.
struct Manifest {
    std::string specimen_id;
    std::string axis_label = "growth";
    std::vector<std::filesystem::path> slice_files;
    std::map<int, AnnotationEntry> annotation_files;
    double slice_spacing = 1.0;
    double pixel_pitch = 1.0;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::filesystem::path& p) const;
    void validate() const;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

GrayImage load_gray(const std::filesystem::path& path, int* bit_depth = nullptr);
/// Writes 8-bit when every value fits, unless force_16 is set.
void save_gray(const GrayImage& image, const std::filesystem::path& path, bool force_16 = false);

SliceStack load_stack(const Manifest& manifest);

/// Values >= 128 are true. Only 8-bit single-channel rasters are accepted.
MaskSlice load_mask(const std::filesystem::path& path, int slice_index);
/// Writes an 8-bit PNG holding exactly {0, 255}.
void save_mask(const MaskSlice& mask, const std::filesystem::path& path);
void save_mask(const BinaryImage& mask, const std::filesystem::path& path);

struct PointAnnotation {
    int slice_index = 0;
    std::vector<std::pair<int, int>> points;  // (row, col)
};

/// Point annotations are stored as masks whose true pixels are the points.
PointAnnotation load_point_annotation(const std::filesystem::path& path, int slice_index);

std::string to_string(AnnotationKind kind);
AnnotationKind annotation_kind_from_string(const std::string& s);

} // namespace corallite
