#include "doctest.h"
#include "oracles.hpp"

#include "corallite/regions.hpp"

#include <cmath>
#include <numbers>

using namespace corallite;

TEST_CASE("label_components: empty and diagonal adjacency")
{
    BinaryImage empty(5, 7);
    CHECK(label_components(empty).region_count == 0);

    BinaryImage diag(3, 3);
    diag(0, 0) = 1;
    diag(1, 1) = 1;
    CHECK(label_components(diag, Connectivity::eight).region_count == 1);
    CHECK(label_components(diag, Connectivity::four).region_count == 2);
}

TEST_CASE("label_components: labels follow raster order of first pixel")
{
    BinaryImage m(4, 6);
    m(0, 4) = 1;
    m(1, 0) = 1;
    m(3, 3) = 1;
    const auto lab = label_components(m);
    REQUIRE(lab.region_count == 3);
    CHECK(lab.labels(0, 4) == 1);
    CHECK(lab.labels(1, 0) == 2);
    CHECK(lab.labels(3, 3) == 3);
}

TEST_CASE("label_components agrees with flood fill on random masks")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double density = 0.2 + 0.5 * (trial % 5) / 4.0;
        const auto m = oracle::random_mask(rng, 16, 16, density);
        for (int conn : {4, 8}) {
            int n = 0;
            const auto ref = oracle::flood_fill(m, conn, &n);
            const auto got = label_components(m, connectivity_from_int(conn));
            REQUIRE(got.region_count == n);
            REQUIRE(oracle::same_partition(ref, got.labels));
        }
    }
}

TEST_CASE("connectivity_from_int rejects other values")
{
    CHECK_THROWS_AS(connectivity_from_int(6), std::invalid_argument);
}

TEST_CASE("region_props: single pixel and horizontal bar")
{
    BinaryImage px(8, 8);
    px(3, 5) = 1;
    auto p = region_props(label_components(px));
    REQUIRE(p.size() == 1);
    CHECK(p[0].area == 1);
    CHECK(p[0].centroid_row == 3.0);
    CHECK(p[0].centroid_col == 5.0);

    BinaryImage bar(4, 4);
    bar(0, 0) = bar(0, 1) = bar(0, 2) = 1;
    p = region_props(label_components(bar));
    REQUIRE(p.size() == 1);
    CHECK(p[0].centroid_row == 0.0);
    CHECK(p[0].centroid_col == doctest::Approx(1.0));
    CHECK(p[0].orientation == doctest::Approx(0.0));
    CHECK(p[0].major_axis_len > p[0].minor_axis_len);
    CHECK(p[0].bbox.min_col == 0);
    CHECK(p[0].bbox.max_col == 2);
}

TEST_CASE("region_props matches direct moment summation")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const auto m = oracle::random_mask(rng, 24, 24, 0.55);
        const auto lab = label_components(m);
        const auto props = region_props(lab);
        REQUIRE(static_cast<int>(props.size()) == lab.region_count);
        for (const auto& p : props) {
            const auto ref = oracle::moments(lab.labels, p.label);
            CHECK(p.area == ref.area);
            CHECK(p.centroid_row == doctest::Approx(ref.row).epsilon(1e-12));
            CHECK(p.centroid_col == doctest::Approx(ref.col).epsilon(1e-12));
            CHECK(p.major_axis_len == doctest::Approx(ref.major).epsilon(1e-9));
            CHECK(p.minor_axis_len == doctest::Approx(ref.minor).epsilon(1e-9));
            CHECK(p.minor_axis_len <= p.major_axis_len);
            // orientation is only defined when the axes differ
            if (ref.major - ref.minor > 1e-6) {
                double d = std::fmod(std::abs(p.orientation - ref.orientation), std::numbers::pi);
                d = std::min(d, std::numbers::pi - d);
                CHECK(d < 1e-9);
            }
            CHECK(p.orientation > -std::numbers::pi / 2 - 1e-12);
            CHECK(p.orientation <= std::numbers::pi / 2 + 1e-12);
        }
    }
}

TEST_CASE("region_props recovers a rasterised ellipse")
{
    for (double theta : {0.0, 0.5, -1.0}) {
        const auto m = oracle::raster_ellipse(80, 80, 40, 40, 20, 10, theta);
        const auto p = region_props(label_components(m));
        REQUIRE(p.size() == 1);
        CHECK(std::abs(p[0].major_axis_len - 40.0) < 0.05 * 40.0);
        CHECK(std::abs(p[0].minor_axis_len - 20.0) < 0.05 * 20.0);
        CHECK(p[0].centroid_row == doctest::Approx(40.0));
        CHECK(p[0].centroid_col == doctest::Approx(40.0));
    }
}

TEST_CASE("match_regions: overlap first, centroid distance fallback")
{
    SUBCASE("identical region")
    {
        BinaryImage m(10, 10);
        for (int r = 2; r < 5; ++r)
            for (int c = 2; c < 6; ++c)
                m(r, c) = 1;
        const auto lab = label_components(m);
        const auto match = match_regions(lab, lab);
        REQUIRE(match.size() == 1);
        CHECK(match[0].truth_label == 1);
        CHECK(match[0].overlap == 12);
    }
    SUBCASE("larger overlap wins")
    {
        BinaryImage truth(20, 20), pred(20, 20);
        for (int c = 0; c < 10; ++c)
            truth(0, c) = 1;  // A
        for (int c = 0; c < 3; ++c)
            truth(5, c) = 1;  // B
        for (int c = 0; c < 10; ++c)
            pred(0, c) = 1;
        for (int r = 1; r <= 4; ++r)
            pred(r, 0) = 1;
        for (int c = 0; c < 3; ++c)
            pred(5, c) = 1;
        const auto lt = label_components(truth, Connectivity::four);
        const auto lp = label_components(pred, Connectivity::four);
        REQUIRE(lt.region_count == 2);
        REQUIRE(lp.region_count == 1);
        const auto match = match_regions(lp, lt);
        CHECK(match[0].truth_label == lt.labels(0, 0));
        CHECK(match[0].overlap == 10);
    }
    SUBCASE("no overlap: nearest truth centroid")
    {
        BinaryImage truth(32, 32), pred(32, 32);
        pred(10, 10) = 1;
        truth(10, 15) = 1;  // distance 5
        truth(22, 10) = 1;  // distance 12
        const auto lt = label_components(truth);
        const auto match = match_regions(label_components(pred), lt);
        REQUIRE(match[0].truth_label.has_value());
        CHECK(lt.labels(10, 15) == *match[0].truth_label);
        CHECK(match[0].centroid_distance == doctest::Approx(5.0));
        CHECK(match[0].overlap == 0);
    }
    SUBCASE("empty truth: unmatched")
    {
        BinaryImage pred(4, 4), truth(4, 4);
        pred(1, 1) = 1;
        const auto match = match_regions(label_components(pred), label_components(truth));
        CHECK_FALSE(match[0].truth_label.has_value());
    }
}

TEST_CASE("remove_small_components drops regions below min_area")
{
    BinaryImage m(6, 6);
    m(0, 0) = 1;
    for (int c = 2; c < 6; ++c)
        m(3, c) = 1;
    const auto out = remove_small_components(m, 2);
    CHECK(out(0, 0) == 0);
    CHECK(count_true(out) == 4);
    CHECK(remove_small_components(m, 0) == m);
}
