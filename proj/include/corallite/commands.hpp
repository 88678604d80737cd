#pragma once

#include "corallite/baseline_seg.hpp"
#include "corallite/evaluation.hpp"
#include "corallite/mesher.hpp"
#include "corallite/tracer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

// File-level operations behind the CLI subcommands. Each returns a summary
// JSON describing what it wrote.
namespace corallite::commands {

std::string slice_file_name(const char* prefix, int index);

/// Snippets centred on annotated slices (all slices when none are annotated),
/// written as vertical PNG strips of D tiles plus index.json.
nlohmann::json write_snippets(const std::filesystem::path& manifest, int tile_size, int step, int depth,
                              const std::filesystem::path& out_dir);

/// Full-slice baseline segmentation of every manifest slice.
nlohmann::json segment_manifest(const std::filesystem::path& manifest, const SegParams& params,
                                const std::filesystem::path& out_dir);

/// Index format: {"height": H, "width": W, "tiles": [{"row": r, "col": c, "path": p}]}.
/// Tile values are read as probabilities (8- or 16-bit).
nlohmann::json stitch_index(const std::filesystem::path& index, const std::filesystem::path& out_mask);

/// CSV header: label,area,centroid_r,centroid_c,major,minor,orientation
nlohmann::json write_region_csv(const std::filesystem::path& mask, Connectivity connectivity,
                                const std::filesystem::path& out_csv);

struct EvaluateFiles {
    std::filesystem::path pred;
    std::filesystem::path truth;
    std::optional<std::filesystem::path> prob;
    std::filesystem::path report;
    std::optional<std::filesystem::path> error_map;
    EvalOptions options;
};
nlohmann::json evaluate_files(const EvaluateFiles& args);

/// Masks are the PNG files of a directory in lexicographic order; slice i is file i.
std::vector<MaskSlice> load_mask_directory(const std::filesystem::path& dir);

nlohmann::json trace_directory(const std::filesystem::path& masks_dir, const TraceParams& params,
                               const std::filesystem::path& out_json,
                               const std::optional<std::filesystem::path>& phantom_dir = std::nullopt);

struct ReconstructOptions {
    int ring = 16;
    bool caps = true;
    StackGeometry geometry;
    std::optional<std::pair<int, int>> id_range;  // inclusive
};
nlohmann::json reconstruct_tracks(const std::vector<Track>& tracks, const ReconstructOptions& options,
                                  const std::filesystem::path& out_obj);
nlohmann::json reconstruct_file(const std::filesystem::path& tracks_json, const ReconstructOptions& options,
                                const std::filesystem::path& out_obj);

/// Parses "a..b" into an inclusive id range.
std::pair<int, int> parse_id_range(const std::string& text);

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace corallite::commands
