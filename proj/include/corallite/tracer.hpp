#pragma once

#include "corallite/phantom.hpp"
#include "corallite/regions.hpp"
#include "corallite/volume_io.hpp"

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace corallite {

enum class GammaUnits { pixels, normalised };

/// A pair of regions in consecutive slices links when centroid distance < gamma
/// and IoU > beta. In normalised units gamma is a fraction of the pair's mean
/// major-axis length.
struct TraceParams {
    double gamma = 0.3;
    GammaUnits gamma_units = GammaUnits::normalised;
    double beta = 0.3;
    int min_track_len = 1;
    Connectivity connectivity = Connectivity::eight;

    void validate() const;
};

void to_json(nlohmann::json& j, const TraceParams& p);
void from_json(const nlohmann::json& j, TraceParams& p);
GammaUnits gamma_units_from_string(const std::string& s);
std::string to_string(GammaUnits units);

struct SliceRegions {
    int slice_index = 0;
    LabeledMask labeled;
    std::vector<RegionProps> props;  // props[i].label == i + 1
};

SliceRegions analyse_slice(const MaskSlice& mask, Connectivity connectivity = Connectivity::eight);

/// Centroid distance in the configured units.
double gated_distance(const RegionProps& a, const RegionProps& b, GammaUnits units);

/// Result index i is current region i (0-based); the value is the linked
/// previous region. Admissible pairs are taken greedily by descending IoU,
/// then ascending distance, then ascending labels; links are one-to-one.
std::vector<std::optional<int>> match_slice_pair(const SliceRegions& curr, const SliceRegions& prev,
                                                 const TraceParams& params);

struct Section {
    int slice_index = 0;
    RegionProps props;
};

enum class TrackStatus { open, closed };

struct Track {
    int id = 0;
    std::vector<Section> sections;
    TrackStatus status = TrackStatus::open;

    int first_slice() const { return sections.front().slice_index; }
    int last_slice() const { return sections.back().slice_index; }
    int length() const { return static_cast<int>(sections.size()); }
};

struct TraceResult {
    std::vector<Track> tracks;        // length >= min_track_len
    std::vector<Track> short_tracks;  // diagnostics
    std::vector<SliceRegions> slices;
};

/// Forward single pass over consecutive slices. Open tracks end at the final slice.
TraceResult trace_stack(std::span<const MaskSlice> masks, const TraceParams& params);

/// Dominant truth tube of every section (0 when the region touches no tube).
std::vector<std::vector<int>> section_truth_ids(const TraceResult& result, const PhantomTruth& truth);

/// Fraction of sections that belong to their track's majority tube; 0 with no tracks.
double track_purity(const std::vector<std::vector<int>>& section_ids);
double track_purity(const TraceResult& result, const PhantomTruth& truth);

nlohmann::json tracks_to_json(const TraceResult& result, const TraceParams& params);
/// Reads the tracks array back; sections carry the stored region statistics.
std::vector<Track> tracks_from_json(const nlohmann::json& j);

} // namespace corallite
