#include "doctest.h"
#include "oracles.hpp"

#include "corallite/commands.hpp"
#include "corallite/phantom.hpp"
#include "corallite/pipeline.hpp"
#include "corallite/tiler.hpp"

#include <fstream>

using namespace corallite;
namespace fs = std::filesystem;

namespace {

fs::path small_phantom(const fs::path& dir)
{
    PhantomSpec spec;
    spec.seed = 5;
    spec.depth = 8;
    spec.height = spec.width = 128;
    spec.n_tubes = 4;
    return write_phantom(generate(spec), spec, dir);
}

PipelineConfig base_config(const fs::path& manifest, const fs::path& work)
{
    PipelineConfig c;
    c.manifest = manifest;
    c.work_dir = work;
    c.tile_size = 64;
    c.step = 48;
    c.seg.invert = true;
    c.seg.opening_radius = 1;
    c.seg.min_area = 10;
    return c;
}

}  // namespace

TEST_CASE("pipeline end to end on a phantom")
{
    const auto root = fs::temp_directory_path() / "corallite_test_pipeline";
    fs::remove_all(root);
    const auto manifest = small_phantom(root / "ph");
    const auto summary = run_pipeline(base_config(manifest, root / "work"));
    CHECK(fs::exists(root / "work" / "colony.obj"));
    CHECK(fs::exists(root / "work" / "report.json"));
    CHECK(fs::exists(root / "work" / "tracks.json"));
    CHECK(fs::exists(root / "work" / "masks" / "slice_0007.png"));
    const auto report = commands::read_json_file(root / "work" / "report.json");
    CHECK(report.at("mean").at("dsc_full").get<double>() > 0.8);
    const auto obj = oracle::read_obj(root / "work" / "colony.obj");
    CHECK(obj.error.empty());
    CHECK(obj.objects.size() == 4);
    fs::remove_all(root);
}

TEST_CASE("evaluation is skipped without annotations")
{
    const auto root = fs::temp_directory_path() / "corallite_test_noeval";
    fs::remove_all(root);
    const auto manifest_path = small_phantom(root / "ph");
    auto manifest = read_manifest(manifest_path);
    manifest.annotation_files.clear();
    write_manifest(manifest, manifest_path);
    run_pipeline(base_config(manifest_path, root / "work"));
    const auto eval = commands::read_json_file(root / "work" / "evaluate_summary.json");
    CHECK(eval.at("status") == "skipped");
    CHECK(fs::exists(root / "work" / "colony.obj"));
    fs::remove_all(root);
}

TEST_CASE("config validation happens before any work")
{
    const auto root = fs::temp_directory_path() / "corallite_test_badcfg";
    fs::remove_all(root);
    auto c = base_config(root / "none.json", root / "work");
    c.step = c.tile_size + 1;
    CHECK_THROWS_AS(run_pipeline(c), StageError);
    CHECK_FALSE(fs::exists(root / "work"));
}

TEST_CASE("stage errors name the stage")
{
    const auto root = fs::temp_directory_path() / "corallite_test_stageerr";
    fs::remove_all(root);
    auto c = base_config(root / "missing_manifest.json", root / "work");
    try {
        run_pipeline(c);
        FAIL("expected a StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "tile");
    }
    fs::remove_all(root);
}

TEST_CASE("config json")
{
    const auto root = fs::temp_directory_path() / "corallite_test_cfgjson";
    fs::create_directories(root);
    std::ofstream(root / "cfg.json") << R"({"manifest": "m.json", "work_dir": "w",
        "tile": {"tile_size": 128, "step": 64},
        "segmentation": {"mode": "baseline", "params": {"invert": true, "threshold": 80}},
        "trace": {"gamma": 4, "gamma_units": "pixels", "min_track_len": 3},
        "mesh": {"ring": 24, "caps": false}})";
    const auto c = read_pipeline_config(root / "cfg.json");
    CHECK(c.manifest == root / "m.json");
    CHECK(c.tile_size == 128);
    CHECK(c.step == 64);
    CHECK(c.seg.invert);
    CHECK(c.seg.threshold == 80);
    CHECK(c.trace.gamma_units == GammaUnits::pixels);
    CHECK(c.trace.min_track_len == 3);
    CHECK(c.ring == 24);
    CHECK_FALSE(c.caps);
    fs::remove_all(root);
}

TEST_CASE("parse_id_range")
{
    CHECK(commands::parse_id_range("3..7") == std::pair{3, 7});
    CHECK_THROWS(commands::parse_id_range("7..3"));
    CHECK_THROWS(commands::parse_id_range("abc"));
}

TEST_CASE("stitch_index reassembles saved tiles")
{
    const auto root = fs::temp_directory_path() / "corallite_test_stitchindex";
    fs::remove_all(root);
    fs::create_directories(root);
    std::mt19937_64 rng(6);
    const auto m = oracle::random_mask(rng, 70, 90, 0.5);
    const auto grid = plan_grid(70, 90, 40, 25);
    nlohmann::json index{{"height", 70}, {"width", 90}, {"tiles", nlohmann::json::array()}};
    int i = 0;
    for (const auto& t : cut_tiles(m, grid)) {
        const auto name = "t" + std::to_string(i++) + ".png";
        save_mask(binarise(t.values), root / name);
        index["tiles"].push_back({{"row", t.origin.row}, {"col", t.origin.col}, {"path", name}});
    }
    commands::write_json_file(index, root / "index.json");
    commands::stitch_index(root / "index.json", root / "out.png");
    CHECK(load_mask(root / "out.png", 0).raster == m);
    fs::remove_all(root);
}
