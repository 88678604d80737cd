#pragma once

#include "corallite/image.hpp"

#include <optional>
#include <vector>

namespace corallite {

enum class Connectivity { four = 4, eight = 8 };

Connectivity connectivity_from_int(int n);

/// Label raster: 0 is background, regions are 1..region_count.
struct LabeledMask {
    LabelImage labels;
    int region_count = 0;
};

/// Labels follow the raster-scan order of each region's first pixel.
LabeledMask label_components(const BinaryImage& mask, Connectivity connectivity = Connectivity::eight);

struct BoundingBox {
    int min_row = 0;
    int min_col = 0;
    int max_row = 0;
    int max_col = 0;
};

/// Shape statistics of one region. The ellipse has the same second central
/// moments as the pixel set, so a solid ellipse recovers its own axes.
struct RegionProps {
    int label = 0;
    long area = 0;
    double centroid_row = 0.0;
    double centroid_col = 0.0;
    double major_axis_len = 0.0;
    double minor_axis_len = 0.0;
    double orientation = 0.0;  // major axis vs column axis, (-pi/2, pi/2]
    BoundingBox bbox;
};

/// One entry per region, ordered by label.
std::vector<RegionProps> region_props(const LabeledMask& labeled);

/// Ellipse parameters from raw second central moments (variances, not sums).
struct MomentEllipse {
    double major_axis_len = 0.0;
    double minor_axis_len = 0.0;
    double orientation = 0.0;
};
MomentEllipse ellipse_from_moments(double var_row, double var_col, double cov_row_col);

/// Sparse overlap table between two label rasters of equal shape.
struct Overlap {
    int label_a = 0;
    int label_b = 0;
    long pixels = 0;
};
/// Sorted by (label_a, label_b); only nonzero overlaps of foreground labels.
std::vector<Overlap> overlap_table(const LabeledMask& a, const LabeledMask& b);

struct RegionMatch {
    std::optional<int> truth_label;
    long overlap = 0;               // pixels shared with the matched truth region
    double centroid_distance = 0.0; // to the matched truth region
};

/// Index i describes pred label i + 1. Overlap dominates; centroid distance
/// is the fallback when a prediction touches no truth region.
std::vector<RegionMatch> match_regions(const LabeledMask& pred, const LabeledMask& truth);

/// Removes connected components with fewer than min_area pixels.
BinaryImage remove_small_components(const BinaryImage& mask, long min_area,
                                    Connectivity connectivity = Connectivity::eight);

BinaryImage foreground(const LabeledMask& labeled);

} // namespace corallite
