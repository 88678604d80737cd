#pragma once

#include "corallite/image.hpp"
#include "corallite/volume_io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

namespace corallite {

/// Synthetic colony description. Cross-sections are ellipses whose semi-minor
/// axis is drawn from radius_range; the major/minor ratio stays below 1.5.
struct PhantomSpec {
    std::uint64_t seed = 1;
    int depth = 64;
    int height = 256;
    int width = 256;
    int n_tubes = 12;
    double radius_min = 4.0;
    double radius_max = 8.0;
    double curvature = 1.5;    // max lateral centre drift per slice, pixels
    double branch_prob = 0.0;  // per tube per slice
    double noise_sigma = 10.0;
    int wall_thickness = 2;

    void validate() const;
};

void to_json(nlohmann::json& j, const PhantomSpec& s);
void from_json(const nlohmann::json& j, PhantomSpec& s);

inline constexpr double kInteriorIntensity = 40.0;
inline constexpr double kWallIntensity = 200.0;
inline constexpr double kBackgroundIntensity = 120.0;

struct PathPoint {
    int slice = 0;
    double centroid_row = 0.0;  // of the rendered truth region
    double centroid_col = 0.0;
    double radius = 0.0;        // semi-minor axis of the drawn ellipse
    double semi_major = 0.0;
    double orientation = 0.0;
    long area = 0;
};

struct BranchEvent {
    int child = 0;
    int parent = 0;
    int slice = 0;
    double footprint_iou = 0.0;  // of the undivided ellipse interiors
};

struct PhantomTruth {
    std::vector<Image<std::uint16_t>> instance_labels;  // 0 background, tube id otherwise
    std::map<int, std::vector<PathPoint>> tube_paths;
    std::map<int, std::optional<int>> parent;
    std::vector<BranchEvent> branches;

    BinaryImage mask(int slice) const;
    /// Tube ids present in a slice, from the generator's bookkeeping.
    std::vector<int> tubes_in_slice(int slice) const;
};

struct Phantom {
    SliceStack stack;
    PhantomTruth truth;
};

/// Deterministic for a fixed spec. Throws std::invalid_argument if the
/// extent cannot host n_tubes separated tubes.
Phantom generate(const PhantomSpec& spec);

/// Writes slices/, truth/ (binary masks), labels/ (16-bit ids),
/// tube_paths.json, spec.json and manifest.json. Returns the manifest path.
std::filesystem::path write_phantom(const Phantom& phantom, const PhantomSpec& spec,
                                    const std::filesystem::path& dir);

/// Reads labels/ and tube_paths.json written by write_phantom.
PhantomTruth read_phantom_truth(const std::filesystem::path& dir);

nlohmann::json tube_paths_to_json(const PhantomTruth& truth);

} // namespace corallite
