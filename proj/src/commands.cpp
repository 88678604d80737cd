#include "corallite/commands.hpp"

#include "corallite/parallel.hpp"
#include "corallite/tiler.hpp"
#include "corallite/volume_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace corallite::commands {

std::string slice_file_name(const char* prefix, int index)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d.png", prefix, index);
    return buf;
}

void write_json_file(const json& j, const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("write failed: " + path.string());
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

json write_snippets(const fs::path& manifest_path, int tile_size, int step, int depth, const fs::path& out_dir)
{
    const Manifest manifest = read_manifest(manifest_path);
    const SliceStack stack = load_stack(manifest);
    const TileGrid grid = plan_grid(stack.height(), stack.width(), tile_size, step);
    fs::create_directories(out_dir);

    std::vector<int> centers;
    for (const auto& [index, entry] : manifest.annotation_files)
        centers.push_back(index);
    if (centers.empty())
        for (int s = 0; s < stack.depth(); ++s)
            centers.push_back(s);

    json snippets = json::array();
    for (int center : centers) {
        std::optional<BinaryImage> annotation;
        const auto it = manifest.annotation_files.find(center);
        if (it != manifest.annotation_files.end() && it->second.kind == AnnotationKind::full)
            annotation = load_mask(manifest.resolve(it->second.path), center).raster;

        for (std::size_t t = 0; t < grid.origins.size(); ++t) {
            const Snippet snip = extract_snippet(stack, grid.origins[t], tile_size, center, depth,
                                                 annotation ? &*annotation : nullptr);
            GrayImage strip(depth * tile_size, tile_size);
            for (int d = 0; d < depth; ++d)
                for (int r = 0; r < tile_size; ++r)
                    for (int c = 0; c < tile_size; ++c)
                        strip(d * tile_size + r, c) = snip.voxels[d](r, c);

            char name[96];
            std::snprintf(name, sizeof name, "snippet_s%04d_r%05d_c%05d", center, snip.origin.row, snip.origin.col);
            save_gray(strip, out_dir / (std::string(name) + ".png"), stack.bit_depth == 16);
            json entry{{"center_slice", center},
                       {"origin", {snip.origin.row, snip.origin.col}},
                       {"slices", snip.slice_indices},
                       {"path", std::string(name) + ".png"},
                       {"annotation", nullptr}};
            if (snip.center_annotation) {
                save_mask(*snip.center_annotation, out_dir / (std::string(name) + "_mask.png"));
                entry["annotation"] = std::string(name) + "_mask.png";
            }
            snippets.push_back(entry);
        }
    }

    json index{{"tile_size", tile_size}, {"step", step},          {"depth", depth},
               {"height", stack.height()}, {"width", stack.width()}, {"tiles_per_slice", grid.origins.size()},
               {"snippets", snippets}};
    write_json_file(index, out_dir / "index.json");
    return json{{"snippets", snippets.size()}, {"tiles_per_slice", grid.origins.size()}};
}

json segment_manifest(const fs::path& manifest_path, const SegParams& params, const fs::path& out_dir)
{
    params.validate();
    const Manifest manifest = read_manifest(manifest_path);
    const SliceStack stack = load_stack(manifest);
    fs::create_directories(out_dir);
    std::vector<std::size_t> foreground(stack.slices.size());
    parallel_for(stack.slices.size(), [&](std::size_t s) {
        const BinaryImage mask = segment_slice(stack.slices[s], params);
        foreground[s] = count_true(mask);
        save_mask(mask, out_dir / slice_file_name("slice", static_cast<int>(s)));
    });
    return json{{"slices", stack.depth()}, {"params", params}, {"foreground_pixels", foreground}};
}

json stitch_index(const fs::path& index_path, const fs::path& out_mask)
{
    const json index = read_json_file(index_path);
    std::vector<Tile> tiles;
    int height = 0, width = 0;
    try {
        height = index.at("height").get<int>();
        width = index.at("width").get<int>();
        for (const auto& t : index.at("tiles")) {
            fs::path p = t.at("path").get<std::string>();
            if (p.is_relative())
                p = index_path.parent_path() / p;
            tiles.push_back({{t.at("row").get<int>(), t.at("col").get<int>()}, ingest_probability_map(p)});
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed stitch index: ") + e.what());
    }
    const BinaryImage mask = stitch(tiles, height, width);
    save_mask(mask, out_mask);
    return json{{"tiles", tiles.size()}, {"height", height}, {"width", width}, {"foreground_pixels", count_true(mask)}};
}

json write_region_csv(const fs::path& mask_path, Connectivity connectivity, const fs::path& out_csv)
{
    const MaskSlice mask = load_mask(mask_path, 0);
    const auto labeled = label_components(mask.raster, connectivity);
    const auto props = region_props(labeled);
    std::ofstream out(out_csv, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + out_csv.string());
    out << "label,area,centroid_r,centroid_c,major,minor,orientation\n";
    char line[256];
    for (const auto& p : props) {
        std::snprintf(line, sizeof line, "%d,%ld,%.6f,%.6f,%.6f,%.6f,%.6f\n", p.label, p.area, p.centroid_row,
                      p.centroid_col, p.major_axis_len, p.minor_axis_len, p.orientation);
        out << line;
    }
    return json{{"regions", labeled.region_count}};
}

json evaluate_files(const EvaluateFiles& args)
{
    const MaskSlice pred = load_mask(args.pred, 0);
    const MaskSlice truth = load_mask(args.truth, 0);
    std::optional<RealImage> prob;
    if (args.prob)
        prob = ingest_probability_map(*args.prob);
    ErrorMap em;
    const EvalReport report = evaluate(pred.raster, truth.raster, args.options, prob ? &*prob : nullptr, &em);
    json j = to_json(report);
    write_json_file(j, args.report);
    if (args.error_map)
        render_error_map(em, *args.error_map);
    return j;
}

std::vector<MaskSlice> load_mask_directory(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<MaskSlice> masks(files.size());
    parallel_for(files.size(), [&](std::size_t i) { masks[i] = load_mask(files[i], static_cast<int>(i)); });
    return masks;
}

json trace_directory(const fs::path& masks_dir, const TraceParams& params, const fs::path& out_json,
                     const std::optional<fs::path>& phantom_dir)
{
    const auto masks = load_mask_directory(masks_dir);
    const TraceResult result = trace_stack(masks, params);
    write_json_file(tracks_to_json(result, params), out_json);
    json summary{{"slices", masks.size()}, {"tracks", result.tracks.size()}, {"short_tracks", result.short_tracks.size()}};
    if (phantom_dir)
        summary["purity"] = track_purity(result, read_phantom_truth(*phantom_dir));
    return summary;
}

std::pair<int, int> parse_id_range(const std::string& text)
{
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const int id = std::stoi(text);
            return {id, id};
        }
        const int a = std::stoi(text.substr(0, dots));
        const int b = std::stoi(text.substr(dots + 2));
        if (a <= b)
            return {a, b};
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("id range must look like A..B with A <= B: " + text);
}
json reconstruct_tracks(const std::vector<Track>& tracks, const ReconstructOptions& options, const fs::path& out_obj)
{
    std::vector<const Track*> selected;
    std::size_t too_short = 0;
    for (const auto& t : tracks) {
        if (options.id_range && (t.id < options.id_range->first || t.id > options.id_range->second))
            continue;
        if (t.sections.size() < 2) {
            ++too_short;
            continue;
        }
        selected.push_back(&t);
    }

    std::vector<std::pair<int, Mesh>> meshes(selected.size());
    std::vector<std::size_t> degenerate(selected.size(), 0);
    parallel_for(selected.size(), [&](std::size_t i) {
        std::vector<EllipseSection> sections;
        for (const auto& s : selected[i]->sections) {
            sections.push_back(section_from_props(s.props, s.slice_index, options.geometry));
            degenerate[i] += sections.back().degenerate;
        }
        Mesh mesh = loft_track(sections, options.ring, options.caps);
        mesh.object_groups.front().id = selected[i]->id;
        meshes[i] = {selected[i]->id, std::move(mesh)};
    });
    if (out_obj.has_parent_path())
        fs::create_directories(out_obj.parent_path());
    export_obj(meshes, out_obj);

    std::size_t vertices = 0, triangles = 0, flagged = 0;
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        vertices += meshes[i].second.vertices.size();
        triangles += meshes[i].second.triangles.size();
        flagged += degenerate[i];
    }
    return json{{"objects", meshes.size()},
                {"skipped_single_section", too_short},
                {"degenerate_sections", flagged},
                {"vertices", vertices},
                {"triangles", triangles},
                {"ring", options.ring},
                {"caps", options.caps}};
}

json reconstruct_file(const fs::path& tracks_json, const ReconstructOptions& options, const fs::path& out_obj)
{
    return reconstruct_tracks(tracks_from_json(read_json_file(tracks_json)), options, out_obj);
}

} // namespace corallite::commands
