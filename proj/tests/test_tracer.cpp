#include "doctest.h"

#include "corallite/phantom.hpp"
#include "corallite/tracer.hpp"

using namespace corallite;

namespace {

BinaryImage square(int h, int w, int r0, int c0, int side)
{
    BinaryImage m(h, w);
    for (int r = r0; r < r0 + side; ++r)
        for (int c = c0; c < c0 + side; ++c)
            m(r, c) = 1;
    return m;
}

std::vector<MaskSlice> truth_masks(const Phantom& ph)
{
    std::vector<MaskSlice> out;
    for (int s = 0; s < ph.stack.depth(); ++s)
        out.push_back({ph.truth.mask(s), s});
    return out;
}

}  // namespace

TEST_CASE("match_slice_pair gates")
{
    TraceParams params;
    const auto a = analyse_slice({square(32, 32, 4, 4, 6), 0});
    auto m = match_slice_pair(a, a, params);
    REQUIRE(m.size() == 1);
    CHECK(m[0] == 0);

    const auto moved = analyse_slice({square(32, 32, 20, 20, 6), 1});
    params.gamma = 1000;
    params.gamma_units = GammaUnits::pixels;
    m = match_slice_pair(moved, a, params);
    CHECK_FALSE(m[0].has_value());
}

TEST_CASE("match_slice_pair is one-to-one by IoU")
{
    // prev: rows 0..10 joined by one pixel in row 6 (101 px). A = rows 0..5 (IoU 60/101),
    // B = rows 7..10 (IoU 40/101). Both pass the gates; only A may take prev.
    BinaryImage prev(32, 32), curr(32, 32);
    for (int r = 0; r <= 10; ++r)
        for (int c = 0; c < 10; ++c)
            if (r != 6 || c == 0)
                prev(r, c) = 1;
    for (int r = 0; r <= 10; ++r)
        for (int c = 0; c < 10; ++c)
            if (r != 6)
                curr(r, c) = 1;
    TraceParams params;
    params.gamma = 100;
    params.gamma_units = GammaUnits::pixels;
    const auto p = analyse_slice({prev, 0});
    const auto c = analyse_slice({curr, 1});
    REQUIRE(p.props.size() == 1);
    REQUIRE(c.props.size() == 2);
    const auto m = match_slice_pair(c, p, params);
    CHECK(m[0] == 0);
    CHECK_FALSE(m[1].has_value());

    std::vector<MaskSlice> pair{{prev, 0}, {curr, 1}};
    const auto res = trace_stack(pair, params);
    CHECK(res.tracks.size() == 2);
}

TEST_CASE("single straight tube gives one track")
{
    PhantomSpec spec;
    spec.depth = 16;
    spec.height = spec.width = 64;
    spec.n_tubes = 1;
    spec.curvature = 0;
    const auto ph = generate(spec);
    const auto masks = truth_masks(ph);
    const auto res = trace_stack(masks, TraceParams{});
    REQUIRE(res.tracks.size() == 1);
    CHECK(res.tracks[0].length() == 16);
    CHECK(res.tracks[0].first_slice() == 0);
    CHECK(track_purity(res, ph.truth) == 1.0);
}

TEST_CASE("twelve drifting tubes in pixel units")
{
    PhantomSpec spec;
    spec.seed = 7;
    spec.curvature = 2.0;
    const auto ph = generate(spec);
    TraceParams params;
    params.gamma = 5;
    params.gamma_units = GammaUnits::pixels;
    const auto res = trace_stack(truth_masks(ph), params);
    CHECK(res.tracks.size() == 12);
    CHECK(track_purity(res, ph.truth) >= 0.95);
}

TEST_CASE("empty input and min_track_len")
{
    CHECK(trace_stack(std::vector<MaskSlice>{}, TraceParams{}).tracks.empty());

    std::vector<MaskSlice> masks;
    for (int s = 0; s < 4; ++s) {
        BinaryImage m = square(20, 20, 2, 2, 4);
        if (s == 2)
            m(15, 15) = 1;  // one-slice blip
        masks.push_back({m, s});
    }
    TraceParams params;
    params.min_track_len = 2;
    const auto res = trace_stack(masks, params);
    CHECK(res.tracks.size() == 1);
    CHECK(res.short_tracks.size() == 1);

    masks[3].slice_index = 5;
    CHECK_THROWS(trace_stack(masks, params));
}

TEST_CASE("track_purity by hand")
{
    CHECK(track_purity(std::vector<std::vector<int>>{{1, 1, 1, 1, 1, 1, 1, 1, 1, 2}}) == doctest::Approx(0.9));
    CHECK(track_purity(std::vector<std::vector<int>>{{1, 1}, {2, 2, 2}}) == 1.0);
    CHECK(track_purity(std::vector<std::vector<int>>{}) == 0.0);
}

TEST_CASE("tracks json round trip")
{
    std::vector<MaskSlice> masks;
    for (int s = 0; s < 3; ++s)
        masks.push_back({square(20, 20, 2 + s, 2, 5), s});
    const TraceParams params;
    const auto res = trace_stack(masks, params);
    const auto j = tracks_to_json(res, params);
    const auto back = tracks_from_json(j);
    REQUIRE(back.size() == res.tracks.size());
    REQUIRE(back[0].sections.size() == 3);
    CHECK(back[0].sections[2].props.centroid_row == doctest::Approx(res.tracks[0].sections[2].props.centroid_row));
    CHECK(back[0].sections[1].slice_index == 1);
    CHECK(nlohmann::json(params).get<TraceParams>().gamma == params.gamma);
    CHECK_THROWS(gamma_units_from_string("furlongs"));
}
