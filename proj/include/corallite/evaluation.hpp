#pragma once

#include "corallite/image.hpp"
#include "corallite/regions.hpp"
#include "corallite/tiler.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace corallite {

/// min(|1 - exp((A_p - A_l) / A_p)|, 1). A truth area of 0 means "no truth
/// region", which the clamp turns into a full penalty.
double component_penalty(double area_pred, double area_truth);

/// Per-pixel topological penalty in [0, 1].
struct ErrorMap {
    RealImage values;
    std::string source;
};

/// Every pixel of a predicted region that lies outside its matched truth
/// region carries that region's component penalty; all other pixels are 0.
ErrorMap error_map(const LabeledMask& pred, const LabeledMask& truth);

/// (1 / 2N) * sum_n (sigmoid(E(n)) - 0.5). Zero for a perfect prediction.
double topo_loss(const ErrorMap& em);
double topo_loss(const RealImage& values);
inline double topo_score(double loss) { return 1.0 - loss; }

/// Upper bound of topo_loss, reached when every pixel carries penalty 1.
double topo_loss_ceiling();

/// 2|P n T| / (|P| + |T|); 1 when both are empty.
double dice(const BinaryImage& pred, const BinaryImage& truth);

inline constexpr double kBceEpsilon = 1e-7;
/// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
double bce(const RealImage& prob, const BinaryImage& truth);

struct LossParts {
    double bce = 0.0;
    double dice = 0.0;   // 1 - Dice of the binarised prediction
    double topo = 0.0;   // on the binarised prediction
    double total = 0.0;  // (bce + dice) / 2 + T * topo
};

/// T = 0 gives the plain BCE + Dice objective.
LossParts combined_loss(const RealImage& prob, const BinaryImage& truth, double topo_weight,
                        Connectivity connectivity = Connectivity::eight);

/// Probabilities >= 0.5 are foreground.
BinaryImage binarise(const RealImage& prob, double threshold = 0.5);
RealImage to_probability(const BinaryImage& mask);

/// |R_pred - R_truth| / R_truth; throws std::domain_error for empty truth.
double count_error(const LabeledMask& pred, const LabeledMask& truth);
double count_error(int pred_regions, int truth_regions);

/// 8-bit PNG with value round(255 * E(n)).
void render_error_map(const ErrorMap& em, const std::filesystem::path& path);

struct EvalReport {
    double mdsc_tiles = 0.0;
    double dsc_full = 0.0;
    double topo_score = 1.0;        // 1 - loss_topo, full slice
    double topo_score_tiles = 1.0;  // mean over evaluation tiles
    double loss_bce = 0.0;
    double loss_dice = 0.0;
    double loss_topo = 0.0;
    double loss_total = 0.0;
    double topo_weight = 0.1;
    std::optional<double> count_error;  // absent when truth has no regions
    int pred_regions = 0;
    int truth_regions = 0;
    int tiles = 0;
};

struct EvalOptions {
    int tile_size = 224;
    int step = 224;
    double topo_weight = 0.1;
    Connectivity connectivity = Connectivity::eight;
};

/// Full evaluation of one slice. prob may be null, in which case the binary
/// prediction stands in for the probability map.
EvalReport evaluate(const BinaryImage& pred, const BinaryImage& truth, const EvalOptions& options,
                    const RealImage* prob = nullptr, ErrorMap* error_map_out = nullptr);

/// Field-wise mean (count_error averaged over slices where it is defined).
EvalReport mean_report(std::span<const EvalReport> reports);

nlohmann::json to_json(const EvalReport& report);

/// Kahan-Neumaier summation.
double compensated_sum(std::span<const double> values);

} // namespace corallite
