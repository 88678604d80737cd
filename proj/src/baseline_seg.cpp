#include "corallite/baseline_seg.hpp"

#include "corallite/regions.hpp"
#include "corallite/volume_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace corallite {

void SegParams::validate() const
{
    if (!(blur_sigma >= 0.0))
        throw std::invalid_argument("SegParams: blur_sigma must be >= 0");
    if (min_area < 0)
        throw std::invalid_argument("SegParams: min_area must be >= 0");
    if (opening_radius < 0)
        throw std::invalid_argument("SegParams: opening_radius must be >= 0");
}

void to_json(nlohmann::json& j, const SegParams& p)
{
    j = nlohmann::json{{"invert", p.invert},
                       {"blur_sigma", p.blur_sigma},
                       {"threshold", p.threshold_mode == ThresholdMode::otsu ? nlohmann::json("otsu")
                                                                            : nlohmann::json(p.threshold)},
                       {"min_area", p.min_area},
                       {"opening_radius", p.opening_radius}};
}

void from_json(const nlohmann::json& j, SegParams& p)
{
    p = SegParams{};
    p.invert = j.value("invert", p.invert);
    p.blur_sigma = j.value("blur_sigma", p.blur_sigma);
    p.min_area = j.value("min_area", p.min_area);
    p.opening_radius = j.value("opening_radius", p.opening_radius);
    if (j.contains("threshold")) {
        const auto& t = j["threshold"];
        if (t.is_string()) {
            if (t.get<std::string>() != "otsu")
                throw std::invalid_argument("SegParams: threshold must be a number or \"otsu\"");
            p.threshold_mode = ThresholdMode::otsu;
        } else {
            p.threshold_mode = ThresholdMode::fixed;
            p.threshold = t.get<double>();
        }
    }
    p.validate();
}

std::optional<double> otsu_threshold(const GrayImage& image)
{
    if (image.empty())
        return std::nullopt;
    std::vector<double> hist(65536, 0.0);
    int lo = 65535, hi = 0;
    for (auto v : image.pixels()) {
        hist[v] += 1.0;
        lo = std::min<int>(lo, v);
        hi = std::max<int>(hi, v);
    }
    if (lo == hi)
        return std::nullopt;

    const double total = static_cast<double>(image.size());
    double sum_all = 0.0;
    for (int v = lo; v <= hi; ++v)
        sum_all += v * hist[v];

    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int best_t = lo;
    for (int t = lo; t < hi; ++t) {
        w0 += hist[t];
        sum0 += t * hist[t];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0)
            continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_t = t;
        }
    }
    return static_cast<double>(best_t);
}

namespace {

GrayImage smooth(const GrayImage& slice, double sigma)
{
    if (sigma <= 0.0)
        return slice;
    const int h = slice.height();
    const int w = slice.width();
    cv::Mat src(h, w, CV_32F);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            src.at<float>(r, c) = static_cast<float>(slice(r, c));
    cv::Mat dst;
    cv::GaussianBlur(src, dst, cv::Size(0, 0), sigma, sigma, cv::BORDER_REPLICATE);
    GrayImage out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            out(r, c) = static_cast<std::uint16_t>(std::clamp(std::lround(dst.at<float>(r, c)), 0L, 65535L));
    return out;
}

} // namespace

std::optional<double> effective_threshold(const GrayImage& slice, const SegParams& params)
{
    params.validate();
    if (params.threshold_mode == ThresholdMode::fixed)
        return params.threshold;
    return otsu_threshold(smooth(slice, params.blur_sigma));
}

BinaryImage segment_slice(const GrayImage& slice, const SegParams& params)
{
    params.validate();
    const int h = slice.height();
    const int w = slice.width();
    if (h == 0 || w == 0)
        return BinaryImage(h, w);

    const GrayImage smoothed = smooth(slice, params.blur_sigma);
    std::optional<double> threshold = params.threshold;
    if (params.threshold_mode == ThresholdMode::otsu)
        threshold = otsu_threshold(smoothed);
    if (!threshold)
        return BinaryImage(h, w, 0);

    cv::Mat mask(h, w, CV_8U);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const bool above = smoothed(r, c) > *threshold;
            mask.at<std::uint8_t>(r, c) = (above != params.invert) ? 1 : 0;
        }

    if (params.opening_radius > 0) {
        const int k = 2 * params.opening_radius + 1;
        const cv::Mat disk = cv::getStructuringElement(cv::MORPH_ELLIPSE, cv::Size(k, k));
        cv::morphologyEx(mask, mask, cv::MORPH_OPEN, disk);
    }

    BinaryImage out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            out(r, c) = mask.at<std::uint8_t>(r, c) ? 1 : 0;
    return remove_small_components(out, params.min_area);
}

RealImage ingest_probability_map(const std::filesystem::path& path)
{
    int depth = 8;
    const GrayImage raw = load_gray(path, &depth);
    const double scale = depth == 16 ? 65535.0 : 255.0;
    RealImage out(raw.height(), raw.width());
    const auto src = raw.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] / scale;
    return out;
}

} // namespace corallite
