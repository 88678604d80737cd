// corallite: command-line front end for the reconstruction pipeline.

#include "corallite/commands.hpp"
#include "corallite/parallel.hpp"
#include "corallite/phantom.hpp"
#include "corallite/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace fs = std::filesystem;
using namespace corallite;

namespace {

void print_summary(const nlohmann::json& j, bool verbose)
{
    if (verbose)
        std::cout << j.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Corallite reconstruction toolkit: phantoms, tiling, segmentation, metrics, tracing and meshing"};
    app.require_subcommand(1);
    app.fallthrough();

    unsigned threads = 0;
    bool verbose = false;
    std::string config_path;
    app.add_option("--threads", threads, "Worker thread cap (0 = all cores)");
    app.add_flag("--verbose,-v", verbose, "Print stage summaries");
    app.add_option("--config", config_path, "Pipeline config JSON (for `run`)");

    // phantom
    auto* phantom_cmd = app.add_subcommand("phantom", "Generate a synthetic colony with ground truth");
    std::string phantom_spec, phantom_out;
    phantom_cmd->add_option("--spec", phantom_spec, "Phantom spec JSON")->required();
    phantom_cmd->add_option("--out", phantom_out, "Output directory")->required();

    // tile
    auto* tile_cmd = app.add_subcommand("tile", "Write D-deep snippets as PNG strips plus index.json");
    std::string tile_manifest, tile_out;
    int tile_size = 224, tile_step = 224, tile_depth = 5;
    tile_cmd->add_option("--manifest", tile_manifest)->required();
    tile_cmd->add_option("--tile-size", tile_size);
    tile_cmd->add_option("--step", tile_step);
    tile_cmd->add_option("--depth", tile_depth);
    tile_cmd->add_option("--out", tile_out)->required();

    // segment
    auto* seg_cmd = app.add_subcommand("segment", "Baseline segmentation of every manifest slice");
    std::string seg_manifest, seg_params, seg_out;
    seg_cmd->add_option("--manifest", seg_manifest)->required();
    seg_cmd->add_option("--params", seg_params, "SegParams JSON");
    seg_cmd->add_option("--out", seg_out)->required();

    // stitch
    auto* stitch_cmd = app.add_subcommand("stitch", "Reassemble tile predictions into one slice mask");
    std::string stitch_index_path, stitch_out;
    stitch_cmd->add_option("--index", stitch_index_path, "Tile index JSON")->required();
    stitch_cmd->add_option("--out", stitch_out, "Output mask PNG")->required();

    // regions
    auto* regions_cmd = app.add_subcommand("regions", "Connected regions of a mask as CSV");
    std::string regions_mask, regions_out;
    int regions_conn = 8;
    regions_cmd->add_option("--mask", regions_mask)->required();
    regions_cmd->add_option("--connectivity", regions_conn)->check(CLI::IsMember({4, 8}));
    regions_cmd->add_option("--out", regions_out)->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Dice, topology score, losses and count error");
    commands::EvaluateFiles eval_args;
    std::string eval_pred, eval_truth, eval_prob, eval_report, eval_em;
    int eval_conn = 8;
    eval_cmd->add_option("--pred", eval_pred)->required();
    eval_cmd->add_option("--truth", eval_truth)->required();
    eval_cmd->add_option("--prob", eval_prob, "Optional probability map for BCE");
    eval_cmd->add_option("--tile-size", eval_args.options.tile_size);
    eval_cmd->add_option("--step", eval_args.options.step);
    eval_cmd->add_option("--topo-weight", eval_args.options.topo_weight);
    eval_cmd->add_option("--connectivity", eval_conn)->check(CLI::IsMember({4, 8}));
    eval_cmd->add_option("--report", eval_report)->required();
    eval_cmd->add_option("--error-map", eval_em);

    // trace
    auto* trace_cmd = app.add_subcommand("trace", "Link per-slice regions into tracks");
    std::string trace_masks, trace_out, trace_units = "normalised", trace_truth;
    TraceParams trace_params;
    int trace_conn = 8;
    trace_cmd->add_option("--masks", trace_masks, "Directory of mask PNGs")->required();
    trace_cmd->add_option("--gamma", trace_params.gamma);
    trace_cmd->add_option("--gamma-units", trace_units)->check(CLI::IsMember({"normalised", "normalized", "pixels"}));
    trace_cmd->add_option("--beta", trace_params.beta);
    trace_cmd->add_option("--min-len", trace_params.min_track_len);
    trace_cmd->add_option("--connectivity", trace_conn)->check(CLI::IsMember({4, 8}));
    trace_cmd->add_option("--phantom", trace_truth, "Phantom directory; reports track purity");
    trace_cmd->add_option("--out", trace_out)->required();

    // reconstruct
    auto* recon_cmd = app.add_subcommand("reconstruct", "Loft tracks into an OBJ colony model");
    std::string recon_tracks, recon_out, recon_ids;
    commands::ReconstructOptions recon;
    bool no_caps = false;
    recon_cmd->add_option("--tracks", recon_tracks)->required();
    recon_cmd->add_option("--ring", recon.ring);
    recon_cmd->add_option("--pitch", recon.geometry.pixel_pitch);
    recon_cmd->add_option("--spacing", recon.geometry.slice_spacing);
    recon_cmd->add_option("--ids", recon_ids, "Inclusive id range A..B");
    recon_cmd->add_flag("--no-caps", no_caps);
    recon_cmd->add_option("--out", recon_out)->required();

    // run
    auto* run_cmd = app.add_subcommand("run", "Full pipeline from a config file");
    std::string run_config;
    run_cmd->add_option("config", run_config, "Pipeline config JSON (or use global --config)");

    CLI11_PARSE(app, argc, argv);
    set_thread_count(threads);

    try {
        nlohmann::json summary;
        if (*phantom_cmd) {
            const PhantomSpec spec = commands::read_json_file(phantom_spec).get<PhantomSpec>();
            const fs::path manifest = write_phantom(generate(spec), spec, phantom_out);
            summary = {{"manifest", manifest.generic_string()}};
        } else if (*tile_cmd) {
            summary = commands::write_snippets(tile_manifest, tile_size, tile_step, tile_depth, tile_out);
        } else if (*seg_cmd) {
            SegParams params;
            if (!seg_params.empty())
                params = commands::read_json_file(seg_params).get<SegParams>();
            summary = commands::segment_manifest(seg_manifest, params, seg_out);
        } else if (*stitch_cmd) {
            summary = commands::stitch_index(stitch_index_path, stitch_out);
        } else if (*regions_cmd) {
            summary = commands::write_region_csv(regions_mask, connectivity_from_int(regions_conn), regions_out);
        } else if (*eval_cmd) {
            eval_args.pred = eval_pred;
            eval_args.truth = eval_truth;
            if (!eval_prob.empty())
                eval_args.prob = eval_prob;
            eval_args.report = eval_report;
            if (!eval_em.empty())
                eval_args.error_map = eval_em;
            eval_args.options.connectivity = connectivity_from_int(eval_conn);
            summary = commands::evaluate_files(eval_args);
        } else if (*trace_cmd) {
            trace_params.gamma_units = gamma_units_from_string(trace_units);
            trace_params.connectivity = connectivity_from_int(trace_conn);
            std::optional<fs::path> truth;
            if (!trace_truth.empty())
                truth = trace_truth;
            summary = commands::trace_directory(trace_masks, trace_params, trace_out, truth);
        } else if (*recon_cmd) {
            recon.caps = !no_caps;
            if (!recon_ids.empty())
                recon.id_range = commands::parse_id_range(recon_ids);
            summary = commands::reconstruct_file(recon_tracks, recon, recon_out);
        } else if (*run_cmd) {
            const std::string path = run_config.empty() ? config_path : run_config;
            if (path.empty())
                throw std::invalid_argument("run needs a config file");
            summary = run_pipeline(read_pipeline_config(path));
        }
        print_summary(summary, verbose);
    } catch (const StageError& e) {
        std::cerr << "corallite: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "corallite: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
