#include "corallite/evaluation.hpp"

#include "corallite/volume_io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace corallite {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

double compensated_sum(std::span<const double> values)
{
    double sum = 0.0;
    double carry = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    return sum + carry;
}

double component_penalty(double area_pred, double area_truth)
{
    if (!(area_pred > 0.0))
        throw std::invalid_argument("component_penalty: predicted area must be positive");
    if (area_truth < 0.0)
        throw std::invalid_argument("component_penalty: truth area must be non-negative");
    return std::min(std::abs(1.0 - std::exp((area_pred - area_truth) / area_pred)), 1.0);
}

ErrorMap error_map(const LabeledMask& pred, const LabeledMask& truth)
{
    require_same_shape(pred.labels, truth.labels, "error_map");
    ErrorMap em{RealImage(pred.labels.height(), pred.labels.width(), 0.0), {}};

    std::vector<long> pred_area(pred.region_count + 1, 0);
    std::vector<long> truth_area(truth.region_count + 1, 0);
    for (auto l : pred.labels.pixels())
        ++pred_area[l];
    for (auto l : truth.labels.pixels())
        ++truth_area[l];

    const auto matches = match_regions(pred, truth);
    std::vector<double> penalty(pred.region_count + 1, 0.0);
    std::vector<int> matched(pred.region_count + 1, 0);
    for (int p = 1; p <= pred.region_count; ++p) {
        const auto& m = matches[p - 1];
        matched[p] = m.truth_label.value_or(0);
        const double area_truth = m.truth_label ? static_cast<double>(truth_area[*m.truth_label]) : 0.0;
        penalty[p] = component_penalty(static_cast<double>(pred_area[p]), area_truth);
    }

    const auto pl = pred.labels.pixels();
    const auto tl = truth.labels.pixels();
    auto out = em.values.pixels();
    for (std::size_t i = 0; i < pl.size(); ++i) {
        const int p = pl[i];
        if (p == 0)
            continue;
        out[i] = (matched[p] != 0 && tl[i] == matched[p]) ? 0.0 : penalty[p];
    }
    return em;
}

double topo_loss(const RealImage& values)
{
    if (values.empty())
        return 0.0;
    std::vector<double> terms;
    terms.reserve(values.size());
    for (double e : values.pixels())
        terms.push_back(sigmoid(e) - 0.5);
    return compensated_sum(terms) / (2.0 * static_cast<double>(values.size()));
}

double topo_loss(const ErrorMap& em) { return topo_loss(em.values); }

double topo_loss_ceiling() { return (sigmoid(1.0) - 0.5) / 2.0; }

double dice(const BinaryImage& pred, const BinaryImage& truth)
{
    require_same_shape(pred, truth, "dice");
    std::size_t np = 0, nt = 0, both = 0;
    const auto a = pred.pixels();
    const auto b = truth.pixels();
    for (std::size_t i = 0; i < a.size(); ++i) {
        np += a[i] != 0;
        nt += b[i] != 0;
        both += (a[i] != 0) && (b[i] != 0);
    }
    if (np + nt == 0)
        return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(np + nt);
}

double bce(const RealImage& prob, const BinaryImage& truth)
{
    require_same_shape(prob, truth, "bce");
    if (prob.empty())
        return 0.0;
    std::vector<double> terms;
    terms.reserve(prob.size());
    const auto p = prob.pixels();
    const auto t = truth.pixels();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], kBceEpsilon, 1.0 - kBceEpsilon);
        terms.push_back(t[i] ? -std::log(q) : -std::log(1.0 - q));
    }
    return compensated_sum(terms) / static_cast<double>(prob.size());
}

BinaryImage binarise(const RealImage& prob, double threshold)
{
    BinaryImage out(prob.height(), prob.width());
    const auto src = prob.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] >= threshold ? 1 : 0;
    return out;
}

RealImage to_probability(const BinaryImage& mask)
{
    RealImage out(mask.height(), mask.width());
    const auto src = mask.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] ? 1.0 : 0.0;
    return out;
}

LossParts combined_loss(const RealImage& prob, const BinaryImage& truth, double topo_weight,
                        Connectivity connectivity)
{
    if (topo_weight < 0.0)
        throw std::invalid_argument("combined_loss: topological weight must be non-negative");
    LossParts parts;
    const BinaryImage pred = binarise(prob);
    parts.bce = bce(prob, truth);
    parts.dice = 1.0 - dice(pred, truth);
    parts.topo = topo_loss(error_map(label_components(pred, connectivity), label_components(truth, connectivity)));
    parts.total = 0.5 * (parts.bce + parts.dice) + topo_weight * parts.topo;
    return parts;
}

double count_error(int pred_regions, int truth_regions)
{
    if (truth_regions < 1)
        throw std::domain_error("count_error: truth has no regions");
    return std::abs(static_cast<double>(pred_regions - truth_regions)) / static_cast<double>(truth_regions);
}

double count_error(const LabeledMask& pred, const LabeledMask& truth)
{
    return count_error(pred.region_count, truth.region_count);
}

void render_error_map(const ErrorMap& em, const std::filesystem::path& path)
{
    GrayImage img(em.values.height(), em.values.width());
    const auto src = em.values.pixels();
    auto dst = img.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = static_cast<std::uint16_t>(std::lround(255.0 * std::clamp(src[i], 0.0, 1.0)));
    save_gray(img, path);
}

EvalReport evaluate(const BinaryImage& pred, const BinaryImage& truth, const EvalOptions& options,
                    const RealImage* prob, ErrorMap* error_map_out)
{
    require_same_shape(pred, truth, "evaluate");
    if (prob)
        require_same_shape(*prob, truth, "evaluate");

    EvalReport report;
    report.topo_weight = options.topo_weight;

    const LabeledMask pred_labels = label_components(pred, options.connectivity);
    const LabeledMask truth_labels = label_components(truth, options.connectivity);
    report.pred_regions = pred_labels.region_count;
    report.truth_regions = truth_labels.region_count;

    ErrorMap em = error_map(pred_labels, truth_labels);
    report.loss_topo = topo_loss(em);
    report.topo_score = topo_score(report.loss_topo);
    report.dsc_full = dice(pred, truth);
    report.loss_dice = 1.0 - report.dsc_full;
    const RealImage fallback = prob ? RealImage{} : to_probability(pred);
    report.loss_bce = bce(prob ? *prob : fallback, truth);
    report.loss_total = 0.5 * (report.loss_bce + report.loss_dice) + options.topo_weight * report.loss_topo;
    if (truth_labels.region_count > 0)
        report.count_error = count_error(pred_labels, truth_labels);

    // Tiles smaller than the slice fall back to one slice-sized window.
    const int tile = std::min({options.tile_size, pred.height(), pred.width()});
    const int step = std::min(options.step, tile);
    if (tile > 0) {
        const TileGrid grid = plan_grid(pred.height(), pred.width(), tile, step);
        std::vector<double> dices, scores;
        for (const auto& o : grid.origins) {
            const BinaryImage pt = crop(pred, o.row, o.col, tile, tile);
            const BinaryImage tt = crop(truth, o.row, o.col, tile, tile);
            dices.push_back(dice(pt, tt));
            scores.push_back(topo_score(topo_loss(
                error_map(label_components(pt, options.connectivity), label_components(tt, options.connectivity)))));
        }
        report.tiles = static_cast<int>(grid.origins.size());
        report.mdsc_tiles = compensated_sum(dices) / static_cast<double>(dices.size());
        report.topo_score_tiles = compensated_sum(scores) / static_cast<double>(scores.size());
    }

    if (error_map_out)
        *error_map_out = std::move(em);
    return report;
}

EvalReport mean_report(std::span<const EvalReport> reports)
{
    EvalReport out;
    if (reports.empty())
        return out;
    auto mean_of = [&](auto field) {
        std::vector<double> v;
        for (const auto& r : reports)
            v.push_back(field(r));
        return compensated_sum(v) / static_cast<double>(v.size());
    };
    out.mdsc_tiles = mean_of([](const EvalReport& r) { return r.mdsc_tiles; });
    out.dsc_full = mean_of([](const EvalReport& r) { return r.dsc_full; });
    out.topo_score = mean_of([](const EvalReport& r) { return r.topo_score; });
    out.topo_score_tiles = mean_of([](const EvalReport& r) { return r.topo_score_tiles; });
    out.loss_bce = mean_of([](const EvalReport& r) { return r.loss_bce; });
    out.loss_dice = mean_of([](const EvalReport& r) { return r.loss_dice; });
    out.loss_topo = mean_of([](const EvalReport& r) { return r.loss_topo; });
    out.loss_total = mean_of([](const EvalReport& r) { return r.loss_total; });
    out.topo_weight = reports.front().topo_weight;

    std::vector<double> errors;
    for (const auto& r : reports) {
        out.pred_regions += r.pred_regions;
        out.truth_regions += r.truth_regions;
        out.tiles += r.tiles;
        if (r.count_error)
            errors.push_back(*r.count_error);
    }
    if (!errors.empty())
        out.count_error = compensated_sum(errors) / static_cast<double>(errors.size());
    return out;
}

nlohmann::json to_json(const EvalReport& r)
{
    nlohmann::json j;
    j["mdsc_tiles"] = r.mdsc_tiles;
    j["dsc_full"] = r.dsc_full;
    j["topo_score"] = r.topo_score;
    j["topo_score_tiles"] = r.topo_score_tiles;
    j["loss_bce"] = r.loss_bce;
    j["loss_dice"] = r.loss_dice;
    j["loss_topo"] = r.loss_topo;
    j["loss_total"] = r.loss_total;
    j["topo_weight"] = r.topo_weight;
    j["count_error"] = r.count_error ? nlohmann::json(*r.count_error) : nlohmann::json(nullptr);
    j["pred_regions"] = r.pred_regions;
    j["truth_regions"] = r.truth_regions;
    j["tiles"] = r.tiles;
    return j;
}

} // namespace corallite
