#include "corallite/pipeline.hpp"

#include "corallite/evaluation.hpp"
#include "corallite/parallel.hpp"
#include "corallite/tiler.hpp"
#include "corallite/volume_io.hpp"

#include <functional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace corallite {

using commands::slice_file_name;
using commands::write_json_file;

void PipelineConfig::validate() const
{
    if (manifest.empty())
        throw std::invalid_argument("config: manifest path is required");
    if (work_dir.empty())
        throw std::invalid_argument("config: work_dir is required");
    if (tile_size < 1)
        throw std::invalid_argument("config: tile_size must be positive");
    if (step < 1 || step > tile_size)
        throw std::invalid_argument("config: step must satisfy 1 <= step <= tile_size");
    if (depth < 1 || depth % 2 == 0)
        throw std::invalid_argument("config: snippet depth must be odd");
    if (segmentation == SegmentationMode::ingest && prob_dir.empty())
        throw std::invalid_argument("config: ingest mode needs prob_dir");
    if (topo_weight < 0.0)
        throw std::invalid_argument("config: topo_weight must be >= 0");
    if (ring < 3)
        throw std::invalid_argument("config: ring must be >= 3");
    seg.validate();
    trace.validate();
}

PipelineConfig pipeline_config_from_json(const json& j, const fs::path& base_dir)
{
    auto resolve = [&](const std::string& p) {
        const fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    PipelineConfig c;
    try {
        c.manifest = resolve(j.at("manifest").get<std::string>());
        c.work_dir = resolve(j.at("work_dir").get<std::string>());
        if (j.contains("tile")) {
            const auto& t = j["tile"];
            c.tile_size = t.value("tile_size", c.tile_size);
            c.step = t.value("step", c.step);
            c.depth = t.value("depth", c.depth);
        }
        if (j.contains("segmentation")) {
            const auto& s = j["segmentation"];
            const std::string mode = s.value("mode", std::string{"baseline"});
            if (mode == "baseline")
                c.segmentation = SegmentationMode::baseline;
            else if (mode == "ingest")
                c.segmentation = SegmentationMode::ingest;
            else
                throw std::invalid_argument("config: segmentation mode must be baseline or ingest");
            if (s.contains("params"))
                c.seg = s["params"].get<SegParams>();
            if (s.contains("prob_dir"))
                c.prob_dir = resolve(s["prob_dir"].get<std::string>());
        }
        if (j.contains("evaluation")) {
            c.topo_weight = j["evaluation"].value("topo_weight", c.topo_weight);
        }
        if (j.contains("connectivity"))
            c.connectivity = connectivity_from_int(j["connectivity"].get<int>());
        if (j.contains("trace"))
            c.trace = j["trace"].get<TraceParams>();
        if (j.contains("mesh")) {
            c.ring = j["mesh"].value("ring", c.ring);
            c.caps = j["mesh"].value("caps", c.caps);
        }
        if (j.contains("stages")) {
            const auto& st = j["stages"];
            c.run_evaluate = st.value("evaluate", c.run_evaluate);
            c.run_trace = st.value("trace", c.run_trace);
            c.run_reconstruct = st.value("reconstruct", c.run_reconstruct);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig read_pipeline_config(const fs::path& path)
{
    return pipeline_config_from_json(commands::read_json_file(path), path.parent_path());
}

json to_json(const PipelineConfig& c)
{
    return json{{"manifest", c.manifest.generic_string()},
                {"work_dir", c.work_dir.generic_string()},
                {"tile", {{"tile_size", c.tile_size}, {"step", c.step}, {"depth", c.depth}}},
                {"segmentation",
                 {{"mode", c.segmentation == SegmentationMode::baseline ? "baseline" : "ingest"},
                  {"params", c.seg},
                  {"prob_dir", c.prob_dir.generic_string()}}},
                {"evaluation", {{"topo_weight", c.topo_weight}}},
                {"connectivity", static_cast<int>(c.connectivity)},
                {"trace", c.trace},
                {"mesh", {{"ring", c.ring}, {"caps", c.caps}}},
                {"stages", {{"evaluate", c.run_evaluate}, {"trace", c.run_trace}, {"reconstruct", c.run_reconstruct}}}};
}

namespace {

template <typename F>
auto stage(const char* name, F&& body)
{
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

} // namespace

json run_pipeline(const PipelineConfig& config)
{
    stage("config", [&] { config.validate(); });
    const fs::path work = config.work_dir;
    fs::create_directories(work);
    json summary{{"config", to_json(config)}, {"stages", json::array()}};
    auto record = [&](const std::string& name, const json& s) {
        write_json_file(s, work / (name + "_summary.json"));
        summary["stages"].push_back({{"stage", name}, {"status", s.value("status", std::string{"done"})}});
    };

    // tile: load the stack and lay out the snippet grid.
    Manifest manifest;
    SliceStack stack;
    TileGrid grid;
    stage("tile", [&] {
        manifest = read_manifest(config.manifest);
        stack = load_stack(manifest);
        if (stack.depth() == 0)
            throw std::invalid_argument("manifest lists no slices");
        grid = plan_grid(stack.height(), stack.width(), config.tile_size, config.step);
        json origins = json::array();
        for (const auto& o : grid.origins)
            origins.push_back({o.row, o.col});
        record("tile", {{"status", "done"},
                        {"slices", stack.depth()},
                        {"height", stack.height()},
                        {"width", stack.width()},
                        {"tile_size", grid.tile_size},
                        {"step", grid.step},
                        {"depth", config.depth},
                        {"origins", origins}});
        return 0;
    });

    // segment: one prediction per snippet (its centre tile).
    std::vector<std::vector<Tile>> tiles(stack.slices.size());
    stage("segment", [&] {
        SegParams tile_params = config.seg;
        tile_params.min_area = 0;  // applied after stitching, where regions are whole
        std::vector<RealImage> probs(stack.slices.size());
        if (config.segmentation == SegmentationMode::ingest) {
            parallel_for(stack.slices.size(), [&](std::size_t s) {
                probs[s] = ingest_probability_map(config.prob_dir / slice_file_name("prob", static_cast<int>(s)));
                require_same_shape(probs[s], stack.slices[s], "probability map");
            });
        }
        parallel_for(stack.slices.size(), [&](std::size_t s) {
            // one global threshold per slice, shared by all of its tiles
            SegParams slice_params = tile_params;
            std::optional<double> threshold;
            if (config.segmentation == SegmentationMode::baseline) {
                threshold = effective_threshold(stack.slices[s], tile_params);
                slice_params.threshold_mode = ThresholdMode::fixed;
                slice_params.threshold = threshold.value_or(0.0);
            }
            for (const auto& o : grid.origins) {
                if (config.segmentation == SegmentationMode::ingest) {
                    tiles[s].push_back({o, extract_tile(probs[s], o, grid.tile_size)});
                    continue;
                }
                if (!threshold) {
                    tiles[s].push_back({o, RealImage(grid.tile_size, grid.tile_size)});
                    continue;
                }
                const Snippet snip = extract_snippet(stack, o, grid.tile_size, static_cast<int>(s), config.depth);
                const BinaryImage pred = segment_slice(snip.voxels[(snip.depth() - 1) / 2], slice_params);
                tiles[s].push_back({o, to_probability(pred)});
            }
        });
        record("segment", {{"status", "done"},
                           {"mode", config.segmentation == SegmentationMode::baseline ? "baseline" : "ingest"},
                           {"tiles", stack.slices.size() * grid.origins.size()}});
        return 0;
    });

    // stitch: mean-then-threshold back to full slices.
    std::vector<MaskSlice> masks(stack.slices.size());
    stage("stitch", [&] {
        fs::create_directories(work / "masks");
        std::vector<std::size_t> fg(stack.slices.size());
        parallel_for(stack.slices.size(), [&](std::size_t s) {
            BinaryImage mask = stitch(tiles[s], stack.height(), stack.width());
            mask = remove_small_components(mask, config.seg.min_area, config.connectivity);
            fg[s] = count_true(mask);
            save_mask(mask, work / "masks" / slice_file_name("slice", static_cast<int>(s)));
            masks[s] = {std::move(mask), static_cast<int>(s)};
        });
        tiles.clear();
        record("stitch", {{"status", "done"}, {"masks", masks.size()}, {"foreground_pixels", fg}});
        return 0;
    });

    // evaluate: only slices with full annotations.
    stage("evaluate", [&] {
        std::vector<int> annotated;
        for (const auto& [index, entry] : manifest.annotation_files)
            if (entry.kind == AnnotationKind::full)
                annotated.push_back(index);
        json report;
        if (!config.run_evaluate || annotated.empty()) {
            const std::string why = config.run_evaluate ? "no full annotations in manifest" : "disabled in config";
            report = {{"evaluation", "skipped"}, {"reason", why}};
            write_json_file(report, work / "report.json");
            record("evaluate", {{"status", "skipped"}, {"reason", why}});
            return 0;
        }
        fs::create_directories(work / "error_maps");
        EvalOptions options{config.tile_size, config.step, config.topo_weight, config.connectivity};
        std::vector<EvalReport> per(annotated.size());
        parallel_for(annotated.size(), [&](std::size_t i) {
            const int s = annotated[i];
            const MaskSlice truth = load_mask(manifest.resolve(manifest.annotation_files.at(s).path), s);
            ErrorMap em;
            per[i] = evaluate(masks[s].raster, truth.raster, options, nullptr, &em);
            render_error_map(em, work / "error_maps" / slice_file_name("em", s));
        });
        json slices = json::array();
        for (std::size_t i = 0; i < annotated.size(); ++i) {
            json r = to_json(per[i]);
            r["slice"] = annotated[i];
            slices.push_back(r);
        }
        report = {{"evaluation", "done"}, {"mean", to_json(mean_report(per))}, {"slices", slices}};
        write_json_file(report, work / "report.json");
        record("evaluate", {{"status", "done"}, {"slices", annotated.size()}});
        return 0;
    });

    TraceResult traced;
    stage("trace", [&] {
        if (!config.run_trace) {
            record("trace", {{"status", "skipped"}, {"reason", "disabled in config"}});
            return 0;
        }
        traced = trace_stack(masks, config.trace);
        write_json_file(tracks_to_json(traced, config.trace), work / "tracks.json");
        record("trace", {{"status", "done"},
                         {"tracks", traced.tracks.size()},
                         {"short_tracks", traced.short_tracks.size()}});
        return 0;
    });

    stage("reconstruct", [&] {
        if (!config.run_reconstruct || !config.run_trace) {
            record("reconstruct", {{"status", "skipped"}, {"reason", "disabled in config"}});
            return 0;
        }
        commands::ReconstructOptions options;
        options.ring = config.ring;
        options.caps = config.caps;
        options.geometry = {stack.pixel_pitch, stack.slice_spacing};
        json s = commands::reconstruct_tracks(traced.tracks, options, work / "colony.obj");
        s["status"] = "done";
        record("reconstruct", s);
        return 0;
    });

    write_json_file(summary, work / "pipeline_summary.json");
    return summary;
}

} // namespace corallite
