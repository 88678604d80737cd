#include "corallite/tracer.hpp"

#include "corallite/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

using nlohmann::json;

namespace corallite {

void TraceParams::validate() const
{
    if (!(gamma > 0.0))
        throw std::invalid_argument("TraceParams: gamma must be > 0");
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("TraceParams: beta must lie in [0, 1]");
    if (min_track_len < 1)
        throw std::invalid_argument("TraceParams: min_track_len must be >= 1");
}

std::string to_string(GammaUnits units)
{
    return units == GammaUnits::pixels ? "pixels" : "normalised";
}

GammaUnits gamma_units_from_string(const std::string& s)
{
    if (s == "pixels" || s == "px")
        return GammaUnits::pixels;
    if (s == "normalised" || s == "normalized")
        return GammaUnits::normalised;
    throw std::invalid_argument("unknown gamma units: " + s);
}

void to_json(json& j, const TraceParams& p)
{
    j = json{{"gamma", p.gamma},
             {"gamma_units", to_string(p.gamma_units)},
             {"beta", p.beta},
             {"min_track_len", p.min_track_len},
             {"connectivity", static_cast<int>(p.connectivity)}};
}

void from_json(const json& j, TraceParams& p)
{
    p = TraceParams{};
    p.gamma = j.value("gamma", p.gamma);
    if (j.contains("gamma_units"))
        p.gamma_units = gamma_units_from_string(j["gamma_units"].get<std::string>());
    p.beta = j.value("beta", p.beta);
    p.min_track_len = j.value("min_track_len", p.min_track_len);
    if (j.contains("connectivity"))
        p.connectivity = connectivity_from_int(j["connectivity"].get<int>());
    p.validate();
}

SliceRegions analyse_slice(const MaskSlice& mask, Connectivity connectivity)
{
    SliceRegions s;
    s.slice_index = mask.slice_index;
    s.labeled = label_components(mask.raster, connectivity);
    s.props = region_props(s.labeled);
    return s;
}

double gated_distance(const RegionProps& a, const RegionProps& b, GammaUnits units)
{
    const double d = std::hypot(a.centroid_row - b.centroid_row, a.centroid_col - b.centroid_col);
    if (units == GammaUnits::pixels)
        return d;
    const double scale = 0.5 * (a.major_axis_len + b.major_axis_len);
    if (scale <= 0.0)
        return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / scale;
}

std::vector<std::optional<int>> match_slice_pair(const SliceRegions& curr, const SliceRegions& prev,
                                                 const TraceParams& params)
{
    params.validate();
    std::vector<std::optional<int>> links(curr.props.size());
    if (curr.props.empty() || prev.props.empty())
        return links;

    struct Candidate {
        double iou;
        double distance;
        int curr;
        int prev;
    };
    std::vector<Candidate> candidates;
    for (const auto& o : overlap_table(curr.labeled, prev.labeled)) {
        const auto& a = curr.props[o.label_a - 1];
        const auto& b = prev.props[o.label_b - 1];
        const double iou = static_cast<double>(o.pixels) / static_cast<double>(a.area + b.area - o.pixels);
        const double d = gated_distance(a, b, params.gamma_units);
        if (d < params.gamma && iou > params.beta)
            candidates.push_back({iou, d, o.label_a - 1, o.label_b - 1});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
        return std::tie(y.iou, x.distance, x.curr, x.prev) < std::tie(x.iou, y.distance, y.curr, y.prev);
    });

    std::vector<bool> prev_taken(prev.props.size(), false);
    for (const auto& c : candidates) {
        if (links[c.curr] || prev_taken[c.prev])
            continue;
        links[c.curr] = c.prev;
        prev_taken[c.prev] = true;
    }
    return links;
}

TraceResult trace_stack(std::span<const MaskSlice> masks, const TraceParams& params)
{
    params.validate();
    TraceResult result;
    if (masks.empty())
        return result;
    for (std::size_t i = 1; i < masks.size(); ++i) {
        require_same_shape(masks[i].raster, masks[0].raster, "trace_stack");
        if (masks[i].slice_index != masks[i - 1].slice_index + 1)
            throw std::invalid_argument("trace_stack: slice indices must be consecutive");
    }

    result.slices.resize(masks.size());
    parallel_for(masks.size(), [&](std::size_t i) {
        result.slices[i] = analyse_slice(masks[i], params.connectivity);
    });

    std::vector<Track> all;
    std::vector<int> track_of_prev;  // prev region index -> index into `all`
    for (std::size_t s = 0; s < result.slices.size(); ++s) {
        const auto& curr = result.slices[s];
        std::vector<std::optional<int>> links(curr.props.size());
        if (s > 0)
            links = match_slice_pair(curr, result.slices[s - 1], params);

        std::vector<int> track_of_curr(curr.props.size(), -1);
        for (std::size_t i = 0; i < curr.props.size(); ++i) {
            int t;
            if (links[i]) {
                t = track_of_prev[*links[i]];
            } else {
                t = static_cast<int>(all.size());
                all.push_back({t, {}, TrackStatus::open});
            }
            all[t].sections.push_back({curr.slice_index, curr.props[i]});
            track_of_curr[i] = t;
        }
        track_of_prev = std::move(track_of_curr);
    }

    const int last = result.slices.back().slice_index;
    for (auto& t : all) {
        t.status = t.last_slice() == last ? TrackStatus::open : TrackStatus::closed;
        (t.length() >= params.min_track_len ? result.tracks : result.short_tracks).push_back(std::move(t));
    }
    return result;
}

std::vector<std::vector<int>> section_truth_ids(const TraceResult& result, const PhantomTruth& truth)
{
    std::map<int, const SliceRegions*> by_slice;
    for (const auto& s : result.slices)
        by_slice[s.slice_index] = &s;

    // Dominant tube per (slice, region label).
    std::map<std::pair<int, int>, int> dominant;
    for (const auto& [slice, regions] : by_slice) {
        if (slice < 0 || slice >= static_cast<int>(truth.instance_labels.size()))
            continue;
        const auto& labels = truth.instance_labels[slice];
        require_same_shape(labels, regions->labeled.labels, "section_truth_ids");
        std::map<std::pair<int, int>, long> counts;
        const auto rl = regions->labeled.labels.pixels();
        const auto tl = labels.pixels();
        for (std::size_t i = 0; i < rl.size(); ++i)
            if (rl[i] > 0 && tl[i] > 0)
                ++counts[{rl[i], tl[i]}];
        std::map<int, long> best;
        for (const auto& [key, n] : counts) {
            auto it = best.find(key.first);
            if (it == best.end() || n > it->second) {
                best[key.first] = n;
                dominant[{slice, key.first}] = key.second;
            }
        }
    }

    std::vector<std::vector<int>> ids;
    for (const auto& t : result.tracks) {
        std::vector<int> per;
        for (const auto& s : t.sections) {
            const auto it = dominant.find({s.slice_index, s.props.label});
            per.push_back(it == dominant.end() ? 0 : it->second);
        }
        ids.push_back(std::move(per));
    }
    return ids;
}

double track_purity(const std::vector<std::vector<int>>& section_ids)
{
    long total = 0, agreeing = 0;
    for (const auto& track : section_ids) {
        std::map<int, long> votes;
        for (int id : track)
            ++votes[id];
        long majority = 0;
        for (const auto& [id, n] : votes)
            majority = std::max(majority, n);
        agreeing += majority;
        total += static_cast<long>(track.size());
    }
    return total == 0 ? 0.0 : static_cast<double>(agreeing) / static_cast<double>(total);
}

double track_purity(const TraceResult& result, const PhantomTruth& truth)
{
    return track_purity(section_truth_ids(result, truth));
}

namespace {

json track_to_json(const Track& t)
{
    json sections = json::array();
    for (const auto& s : t.sections)
        sections.push_back({{"slice", s.slice_index},
                            {"label", s.props.label},
                            {"centroid", {s.props.centroid_row, s.props.centroid_col}},
                            {"major", s.props.major_axis_len},
                            {"minor", s.props.minor_axis_len},
                            {"orientation", s.props.orientation},
                            {"area", s.props.area}});
    return json{{"id", t.id}, {"status", t.status == TrackStatus::open ? "open" : "closed"}, {"sections", sections}};
}

} // namespace

json tracks_to_json(const TraceResult& result, const TraceParams& params)
{
    json j;
    j["params"] = params;
    j["tracks"] = json::array();
    for (const auto& t : result.tracks)
        j["tracks"].push_back(track_to_json(t));
    j["short_tracks"] = json::array();
    for (const auto& t : result.short_tracks)
        j["short_tracks"].push_back({{"id", t.id}, {"first_slice", t.first_slice()}, {"length", t.length()}});
    return j;
}

std::vector<Track> tracks_from_json(const json& j)
{
    std::vector<Track> tracks;
    try {
        for (const auto& jt : j.at("tracks")) {
            Track t;
            t.id = jt.at("id").get<int>();
            t.status = jt.value("status", std::string{"closed"}) == "open" ? TrackStatus::open : TrackStatus::closed;
            for (const auto& js : jt.at("sections")) {
                Section s;
                s.slice_index = js.at("slice").get<int>();
                s.props.label = js.value("label", 0);
                s.props.centroid_row = js.at("centroid").at(0).get<double>();
                s.props.centroid_col = js.at("centroid").at(1).get<double>();
                s.props.major_axis_len = js.at("major").get<double>();
                s.props.minor_axis_len = js.at("minor").get<double>();
                s.props.orientation = js.at("orientation").get<double>();
                s.props.area = js.value("area", 0L);
                t.sections.push_back(s);
            }
            tracks.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed tracks file: ") + e.what());
    }
    return tracks;
}

} // namespace corallite
