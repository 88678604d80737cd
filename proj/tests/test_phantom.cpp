#include "doctest.h"

#include "corallite/phantom.hpp"
#include "corallite/regions.hpp"

#include <cmath>

using namespace corallite;
namespace fs = std::filesystem;

TEST_CASE("straight tube has a constant centroid")
{
    PhantomSpec spec;
    spec.seed = 1;
    spec.depth = 16;
    spec.height = spec.width = 64;
    spec.n_tubes = 1;
    spec.curvature = 0;
    const auto ph = generate(spec);
    REQUIRE(ph.truth.tube_paths.size() == 1);
    const auto& path = ph.truth.tube_paths.begin()->second;
    REQUIRE(path.size() == 16);
    for (const auto& p : path) {
        CHECK(p.centroid_row == path.front().centroid_row);
        CHECK(p.centroid_col == path.front().centroid_col);
    }
    for (int s = 0; s < 16; ++s) {
        const auto props = region_props(label_components(ph.truth.mask(s)));
        REQUIRE(props.size() == 1);
        CHECK(props[0].centroid_row == doctest::Approx(path.front().centroid_row));
        CHECK(props[0].centroid_col == doctest::Approx(path.front().centroid_col));
    }
}

TEST_CASE("twelve tubes, twelve regions per slice")
{
    PhantomSpec spec;
    spec.seed = 7;
    const auto ph = generate(spec);
    CHECK(ph.truth.tube_paths.size() == 12);
    CHECK(ph.stack.depth() == 64);
    CHECK(ph.stack.height() == 256);
    for (int s = 0; s < spec.depth; ++s) {
        CHECK(ph.truth.tubes_in_slice(s).size() == 12);
        CHECK(label_components(ph.truth.mask(s)).region_count == 12);
    }
}

TEST_CASE("phantom invariants")
{
    PhantomSpec spec;
    spec.seed = 3;
    spec.curvature = 2.0;
    const auto ph = generate(spec);
    for (const auto& [id, path] : ph.truth.tube_paths) {
        for (std::size_t i = 1; i < path.size(); ++i) {
            CHECK(path[i].slice == path[i - 1].slice + 1);
            const double drift = std::hypot(path[i].centroid_row - path[i - 1].centroid_row,
                                            path[i].centroid_col - path[i - 1].centroid_col);
            CHECK(drift <= spec.curvature + 1e-9);
        }
        for (const auto& p : path) {
            CHECK(p.radius >= spec.radius_min);
            CHECK(p.radius <= spec.radius_max);
            CHECK(p.semi_major / p.radius < 1.5);
        }
    }
    // no two ids touch each other
    for (int s = 0; s < spec.depth; ++s) {
        const auto& lab = ph.truth.instance_labels[s];
        for (int r = 0; r + 1 < lab.height(); ++r)
            for (int c = 0; c + 1 < lab.width(); ++c) {
                const int a = lab(r, c);
                for (auto [dr, dc] : {std::pair{0, 1}, {1, 0}, {1, 1}}) {
                    const int b = lab(r + dr, c + dc);
                    if (a && b)
                        CHECK(a == b);
                }
            }
    }
}

TEST_CASE("generation is deterministic and seed dependent")
{
    PhantomSpec spec;
    spec.depth = 8;
    spec.branch_prob = 0.05;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.stack.slices == b.stack.slices);
    CHECK(a.truth.instance_labels == b.truth.instance_labels);
    spec.seed = 2;
    CHECK(generate(spec).stack.slices != a.stack.slices);
}

TEST_CASE("branching phantom records events")
{
    PhantomSpec spec;
    spec.seed = 11;
    spec.branch_prob = 0.05;
    const auto ph = generate(spec);
    CHECK_FALSE(ph.truth.branches.empty());
    for (const auto& ev : ph.truth.branches) {
        CHECK(ph.truth.parent.at(ev.child) == ev.parent);
        CHECK(ev.footprint_iou >= 0.35);
        CHECK(ph.truth.tube_paths.at(ev.child).front().slice == ev.slice);
    }
}

TEST_CASE("PhantomSpec validation")
{
    PhantomSpec spec;
    spec.branch_prob = 0.2;
    CHECK_THROWS(spec.validate());
    spec = PhantomSpec{};
    spec.radius_min = 9;
    CHECK_THROWS(spec.validate());
    spec = PhantomSpec{};
    spec.height = spec.width = 40;
    spec.n_tubes = 50;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("write and read back")
{
    const auto dir = fs::temp_directory_path() / "corallite_test_phantom";
    fs::remove_all(dir);
    PhantomSpec spec;
    spec.depth = 5;
    spec.height = spec.width = 96;
    spec.n_tubes = 3;
    const auto ph = generate(spec);
    const auto manifest = write_phantom(ph, spec, dir);
    CHECK(fs::exists(manifest));
    CHECK(fs::exists(dir / "slices" / "slice_0004.png"));
    CHECK(fs::exists(dir / "truth" / "mask_0000.png"));
    const auto back = read_phantom_truth(dir);
    CHECK(back.instance_labels == ph.truth.instance_labels);
    CHECK(back.tube_paths.size() == 3);
    const auto round = nlohmann::json(spec).get<PhantomSpec>();
    CHECK(round.depth == 5);
    CHECK(round.n_tubes == 3);
    fs::remove_all(dir);
}
