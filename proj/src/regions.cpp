#include "corallite/regions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace corallite {

namespace {

struct DisjointSet {
    std::vector<int> parent;

    int make()
    {
        parent.push_back(static_cast<int>(parent.size()));
        return parent.back();
    }
    int find(int x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        if (a < b)
            parent[b] = a;
        else
            parent[a] = b;
    }
};

double distance(double r0, double c0, double r1, double c1)
{
    return std::hypot(r0 - r1, c0 - c1);
}

} // namespace

Connectivity connectivity_from_int(int n)
{
    if (n == 4)
        return Connectivity::four;
    if (n == 8)
        return Connectivity::eight;
    throw std::invalid_argument("connectivity must be 4 or 8");
}

LabeledMask label_components(const BinaryImage& mask, Connectivity connectivity)
{
    const int h = mask.height();
    const int w = mask.width();
    LabelImage provisional(h, w, -1);
    DisjointSet sets;

    // First pass: provisional labels from the already-visited neighbours.
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!mask(r, c))
                continue;
            int label = -1;
            auto visit = [&](int rr, int cc) {
                if (!provisional.contains(rr, cc))
                    return;
                const int other = provisional(rr, cc);
                if (other < 0)
                    return;
                if (label < 0)
                    label = other;
                else
                    sets.unite(label, other);
            };
            visit(r, c - 1);
            visit(r - 1, c);
            if (connectivity == Connectivity::eight) {
                visit(r - 1, c - 1);
                visit(r - 1, c + 1);
            }
            provisional(r, c) = label < 0 ? sets.make() : label;
        }
    }

    // Second pass: compact labels in order of first appearance.
    LabeledMask out{LabelImage(h, w, 0), 0};
    std::vector<int> final_label(sets.parent.size(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int p = provisional(r, c);
            if (p < 0)
                continue;
            const int root = sets.find(p);
            if (final_label[root] == 0)
                final_label[root] = ++out.region_count;
            out.labels(r, c) = final_label[root];
        }
    }
    return out;
}

MomentEllipse ellipse_from_moments(double var_row, double var_col, double cov_row_col)
{
    // Eigenvalues of [[var_col, cov], [cov, var_row]] in (col, row) coordinates.
    const double mean = 0.5 * (var_row + var_col);
    const double diff = 0.5 * (var_col - var_row);
    const double root = std::sqrt(diff * diff + cov_row_col * cov_row_col);
    const double l1 = mean + root;
    const double l2 = std::max(0.0, mean - root);

    MomentEllipse e;
    e.major_axis_len = 4.0 * std::sqrt(std::max(0.0, l1));
    e.minor_axis_len = 4.0 * std::sqrt(l2);
    e.orientation = 0.5 * std::atan2(2.0 * cov_row_col, var_col - var_row);
    if (e.orientation <= -std::numbers::pi / 2)
        e.orientation += std::numbers::pi;
    return e;
}

std::vector<RegionProps> region_props(const LabeledMask& labeled)
{
    const int n = labeled.region_count;
    std::vector<RegionProps> props(n);
    std::vector<double> sum_r(n, 0.0), sum_c(n, 0.0);
    for (int i = 0; i < n; ++i) {
        props[i].label = i + 1;
        props[i].bbox = {labeled.labels.height(), labeled.labels.width(), -1, -1};
    }

    const auto& L = labeled.labels;
    for (int r = 0; r < L.height(); ++r) {
        for (int c = 0; c < L.width(); ++c) {
            const int l = L(r, c);
            if (l <= 0)
                continue;
            if (l > n)
                throw std::invalid_argument("region_props: label exceeds region count");
            auto& p = props[l - 1];
            ++p.area;
            sum_r[l - 1] += r;
            sum_c[l - 1] += c;
            p.bbox.min_row = std::min(p.bbox.min_row, r);
            p.bbox.min_col = std::min(p.bbox.min_col, c);
            p.bbox.max_row = std::max(p.bbox.max_row, r);
            p.bbox.max_col = std::max(p.bbox.max_col, c);
        }
    }
    for (int i = 0; i < n; ++i) {
        if (props[i].area == 0)
            throw std::invalid_argument("region_props: label " + std::to_string(i + 1) + " has no pixels");
        props[i].centroid_row = sum_r[i] / static_cast<double>(props[i].area);
        props[i].centroid_col = sum_c[i] / static_cast<double>(props[i].area);
    }

    // Central moments in a second pass to avoid cancellation.
    std::vector<double> mrr(n, 0.0), mcc(n, 0.0), mrc(n, 0.0);
    for (int r = 0; r < L.height(); ++r) {
        for (int c = 0; c < L.width(); ++c) {
            const int l = L(r, c);
            if (l <= 0)
                continue;
            const double dr = r - props[l - 1].centroid_row;
            const double dc = c - props[l - 1].centroid_col;
            mrr[l - 1] += dr * dr;
            mcc[l - 1] += dc * dc;
            mrc[l - 1] += dr * dc;
        }
    }
    for (int i = 0; i < n; ++i) {
        const double a = static_cast<double>(props[i].area);
        const auto e = ellipse_from_moments(mrr[i] / a, mcc[i] / a, mrc[i] / a);
        props[i].major_axis_len = e.major_axis_len;
        props[i].minor_axis_len = e.minor_axis_len;
        props[i].orientation = e.orientation;
    }
    return props;
}

std::vector<Overlap> overlap_table(const LabeledMask& a, const LabeledMask& b)
{
    require_same_shape(a.labels, b.labels, "overlap_table");
    std::map<std::pair<int, int>, long> counts;
    const auto pa = a.labels.pixels();
    const auto pb = b.labels.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (pa[i] > 0 && pb[i] > 0)
            ++counts[{pa[i], pb[i]}];
    std::vector<Overlap> out;
    out.reserve(counts.size());
    for (const auto& [key, n] : counts)
        out.push_back({key.first, key.second, n});
    return out;
}

std::vector<RegionMatch> match_regions(const LabeledMask& pred, const LabeledMask& truth)
{
    require_same_shape(pred.labels, truth.labels, "match_regions");
    const auto pp = region_props(pred);
    const auto tp = region_props(truth);
    std::vector<RegionMatch> matches(pred.region_count);
    if (truth.region_count == 0)
        return matches;

    auto dist = [&](int p, int t) {
        return distance(pp[p - 1].centroid_row, pp[p - 1].centroid_col, tp[t - 1].centroid_row,
                        tp[t - 1].centroid_col);
    };

    for (const auto& o : overlap_table(pred, truth)) {
        auto& m = matches[o.label_a - 1];
        const double d = dist(o.label_a, o.label_b);
        const bool better = !m.truth_label || o.pixels > m.overlap ||
                            (o.pixels == m.overlap && d < m.centroid_distance);
        // Table is sorted by truth label, so equal (overlap, distance) keeps the lower label.
        if (better)
            m = {o.label_b, o.pixels, d};
    }

    for (int p = 1; p <= pred.region_count; ++p) {
        auto& m = matches[p - 1];
        if (m.truth_label)
            continue;
        for (int t = 1; t <= truth.region_count; ++t) {
            const double d = dist(p, t);
            if (!m.truth_label || d < m.centroid_distance)
                m = {t, 0, d};
        }
    }
    return matches;
}

BinaryImage remove_small_components(const BinaryImage& mask, long min_area, Connectivity connectivity)
{
    if (min_area <= 1)
        return mask;
    const auto labeled = label_components(mask, connectivity);
    std::vector<long> area(labeled.region_count + 1, 0);
    for (auto l : labeled.labels.pixels())
        ++area[l];
    BinaryImage out(mask.height(), mask.width(), 0);
    const auto src = labeled.labels.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] > 0 && area[src[i]] >= min_area ? 1 : 0;
    return out;
}

BinaryImage foreground(const LabeledMask& labeled)
{
    BinaryImage out(labeled.labels.height(), labeled.labels.width(), 0);
    const auto src = labeled.labels.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] > 0 ? 1 : 0;
    return out;
}

} // namespace corallite
