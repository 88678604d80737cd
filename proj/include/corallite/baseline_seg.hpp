#pragma once

#include "corallite/image.hpp"

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

namespace corallite {

enum class ThresholdMode { fixed, otsu };

/// Classical stand-in segmenter: blur, global threshold, optional inversion,
/// opening, small-component removal.
struct SegParams {
    bool invert = false;         // foreground is darker than the threshold
    double blur_sigma = 0.0;     // pixels; 0 disables
    ThresholdMode threshold_mode = ThresholdMode::otsu;
    double threshold = 128.0;    // used when threshold_mode == fixed
    long min_area = 0;           // pixels
    int opening_radius = 0;      // pixels; 0 disables

    void validate() const;
};

void to_json(nlohmann::json& j, const SegParams& p);
void from_json(const nlohmann::json& j, SegParams& p);

/// Otsu threshold over the integer histogram; nullopt for a constant image.
std::optional<double> otsu_threshold(const GrayImage& image);

/// Threshold segment_slice would apply to this slice (Otsu after blurring, or
/// the fixed value); nullopt for a constant image under Otsu.
std::optional<double> effective_threshold(const GrayImage& slice, const SegParams& params);

/// Deterministic: identical inputs give bit-identical masks. Foreground is
/// value > threshold (or <= threshold when inverted).
BinaryImage segment_slice(const GrayImage& slice, const SegParams& params);

/// 8- or 16-bit grayscale file scaled by the format maximum into [0, 1].
RealImage ingest_probability_map(const std::filesystem::path& path);

} // namespace corallite
