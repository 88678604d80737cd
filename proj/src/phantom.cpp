#include "corallite/phantom.hpp"

#include "corallite/regions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace corallite {

namespace {

constexpr double kBaseRatioMax = 1.4;
constexpr double kAxisJitter = 0.03;
constexpr double kOrientationDrift = 0.05;
constexpr double kBudScale = 0.85;
constexpr double kBudTargetIou = 0.35;

struct Tube {
    int id = 0;
    int row = 0;
    int col = 0;
    double pos_row = 0.0;  // sub-pixel target the rendered centre follows
    double pos_col = 0.0;
    double vel_row = 0.0;
    double vel_col = 0.0;
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double orientation = 0.0;
    int sibling = 0;  // parent or child still being separated from
};

struct Ellipse {
    double row, col, a, b, theta;

    double rho(double r, double c, double grow = 0.0) const
    {
        const double dr = r - row;
        const double dc = c - col;
        const double u = dc * std::cos(theta) + dr * std::sin(theta);
        const double v = -dc * std::sin(theta) + dr * std::cos(theta);
        return (u * u) / ((a + grow) * (a + grow)) + (v * v) / ((b + grow) * (b + grow));
    }
};

std::string slice_name(const char* prefix, int index)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d.png", prefix, index);
    return buf;
}

double footprint_iou(const Ellipse& e0, const Ellipse& e1)
{
    const int reach = static_cast<int>(std::ceil(std::max(e0.a, e1.a))) + 1;
    const int r0 = static_cast<int>(std::floor(std::min(e0.row, e1.row))) - reach;
    const int r1 = static_cast<int>(std::ceil(std::max(e0.row, e1.row))) + reach;
    const int c0 = static_cast<int>(std::floor(std::min(e0.col, e1.col))) - reach;
    const int c1 = static_cast<int>(std::ceil(std::max(e0.col, e1.col))) + reach;
    long inter = 0, uni = 0;
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) {
            const bool in0 = e0.rho(r, c) <= 1.0;
            const bool in1 = e1.rho(r, c) <= 1.0;
            inter += in0 && in1;
            uni += in0 || in1;
        }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

class Generator {
public:
    explicit Generator(const PhantomSpec& spec)
        : spec_(spec), rng_(spec.seed), noise_rng_(spec.seed ^ 0x9e3779b97f4a7c15ULL)
    {
        reach_ = spec.radius_max * kBaseRatioMax * (1.0 + kAxisJitter) + spec.wall_thickness;
        min_separation_ = 2.0 * reach_ + 2.0;
        margin_ = static_cast<int>(std::ceil(reach_)) + 1;
    }

    Phantom run()
    {
        place_initial_tubes();
        Phantom out;
        out.stack.bit_depth = 8;
        out.stack.axis_label = "growth";
        for (int s = 0; s < spec_.depth; ++s) {
            if (s > 0)
                for (auto& t : tubes_)
                    move(t);
            jitter_shapes();
            if (s > 0)
                branch(s);
            render(s, out);
        }
        for (const auto& [id, parent] : parents_)
            out.truth.parent[id] = parent;
        out.truth.branches = branches_;
        return out;
    }

private:
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    bool inside_margins(int row, int col) const
    {
        return row >= margin_ && col >= margin_ && row <= spec_.height - 1 - margin_ &&
               col <= spec_.width - 1 - margin_;
    }

    static double dist(int r0, int c0, int r1, int c1) { return std::hypot(r0 - r1, c0 - c1); }

    // Whether `t` may occupy (row, col) given everyone else's current position.
    bool position_allowed(const Tube& t, int row, int col, int exempt = 0) const
    {
        if (!inside_margins(row, col))
            return false;
        for (const auto& o : tubes_) {
            if (o.id == t.id || o.id == exempt)
                continue;
            const double d = dist(row, col, o.row, o.col);
            if (o.id == t.sibling) {
                if (d < dist(t.row, t.col, o.row, o.col))
                    return false;
            } else if (d < min_separation_) {
                return false;
            }
        }
        return true;
    }

    void place_initial_tubes()
    {
        if (spec_.height - 1 - 2 * margin_ < 0 || spec_.width - 1 - 2 * margin_ < 0)
            throw std::invalid_argument("phantom extent too small for the requested tube radius");
        std::uniform_int_distribution<int> rows(margin_, spec_.height - 1 - margin_);
        std::uniform_int_distribution<int> cols(margin_, spec_.width - 1 - margin_);
        for (int i = 0; i < spec_.n_tubes; ++i) {
            Tube t;
            t.id = static_cast<int>(tubes_.size()) + 1;
            bool placed = false;
            for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
                t.row = rows(rng_);
                t.col = cols(rng_);
                placed = position_allowed(t, t.row, t.col);
            }
            if (!placed)
                throw std::invalid_argument("phantom extent too small to place " + std::to_string(spec_.n_tubes) +
                                            " non-overlapping tubes");
            t.pos_row = t.row;
            t.pos_col = t.col;
            t.semi_minor = uniform(spec_.radius_min, spec_.radius_max);
            t.semi_major = t.semi_minor * uniform(1.0, kBaseRatioMax);
            t.orientation = uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
            const double heading = uniform(-std::numbers::pi, std::numbers::pi);
            t.vel_row = 0.5 * spec_.curvature * std::sin(heading);
            t.vel_col = 0.5 * spec_.curvature * std::cos(heading);
            base_.push_back({t.semi_major, t.semi_minor});
            parents_[t.id] = std::nullopt;
            tubes_.push_back(t);
        }
    }

    // Largest integer step no longer than `limit`, shrinking the larger component first.
    static std::pair<int, int> cap_step(int dr, int dc, double limit)
    {
        while (std::hypot(dr, dc) > limit + 1e-12) {
            if (std::abs(dr) >= std::abs(dc))
                dr -= (dr > 0) - (dr < 0);
            else
                dc -= (dc > 0) - (dc < 0);
        }
        return {dr, dc};
    }

    void move(Tube& t)
    {
        const Tube* sib = sibling_of(t);
        if (sib && dist(t.row, t.col, sib->row, sib->col) >= min_separation_) {
            release(t);
            sib = nullptr;
        }

        const bool is_bud = sib && parents_[t.id] == sib->id;
        if (is_bud) {
            // Buds push directly away from their parent until clear.
            const double limit = std::max(1.0, spec_.curvature);
            const double dr = t.row - sib->row, dc = t.col - sib->col;
            const double n = std::max(1e-9, std::hypot(dr, dc));
            auto [sr, sc] = cap_step(static_cast<int>(std::lround(limit * dr / n)),
                                     static_cast<int>(std::lround(limit * dc / n)), limit);
            if (position_allowed(t, t.row + sr, t.col + sc)) {
                t.row += sr;
                t.col += sc;
            }
            t.pos_row = t.row;
            t.pos_col = t.col;
            return;
        }

        const double c = spec_.curvature;
        std::normal_distribution<double> kick(0.0, 0.3 * c + 1e-12);
        t.vel_row += kick(rng_);
        t.vel_col += kick(rng_);
        const double speed = std::hypot(t.vel_row, t.vel_col);
        if (speed > c && speed > 0.0) {
            t.vel_row *= c / speed;
            t.vel_col *= c / speed;
        }
        if (c == 0.0)
            return;

        const double target_row = t.pos_row + t.vel_row;
        const double target_col = t.pos_col + t.vel_col;
        auto [sr, sc] = cap_step(static_cast<int>(std::lround(target_row)) - t.row,
                                 static_cast<int>(std::lround(target_col)) - t.col, c);
        if (position_allowed(t, t.row + sr, t.col + sc)) {
            t.row += sr;
            t.col += sc;
            t.pos_row = std::clamp(target_row, t.row - 1.0, t.row + 1.0);
            t.pos_col = std::clamp(target_col, t.col - 1.0, t.col + 1.0);
        } else {
            t.vel_row = -0.5 * t.vel_row;
            t.vel_col = -0.5 * t.vel_col;
            t.pos_row = t.row;
            t.pos_col = t.col;
        }
    }

    const Tube* sibling_of(const Tube& t) const
    {
        if (t.sibling == 0)
            return nullptr;
        for (const auto& o : tubes_)
            if (o.id == t.sibling)
                return &o;
        return nullptr;
    }

    void release(Tube& t)
    {
        for (auto& o : tubes_)
            if (o.id == t.sibling)
                o.sibling = 0;
        t.sibling = 0;
    }

    void branch(int slice)
    {
        const std::size_t existing = tubes_.size();
        for (std::size_t i = 0; i < existing; ++i) {
            if (uniform(0.0, 1.0) >= spec_.branch_prob)
                continue;
            const double heading = uniform(-std::numbers::pi, std::numbers::pi);
            Tube& parent = tubes_[i];
            if (parent.sibling != 0)
                continue;

            Tube bud;
            bud.id = static_cast<int>(tubes_.size()) + 1;
            bud.semi_major = std::max(2.0, kBudScale * parent.semi_major);
            bud.semi_minor = std::max(2.0, kBudScale * parent.semi_minor);
            bud.orientation = parent.orientation;
            const Ellipse pe{double(parent.row), double(parent.col), parent.semi_major, parent.semi_minor,
                             parent.orientation};

            // Furthest offset along the heading that keeps the footprints overlapping enough.
            int best_r = 0, best_c = 0;
            double best_iou = 0.0;
            for (int k = 1; k <= static_cast<int>(std::ceil(2.0 * parent.semi_major)); ++k) {
                const int dr = static_cast<int>(std::lround(k * std::sin(heading)));
                const int dc = static_cast<int>(std::lround(k * std::cos(heading)));
                if (dr == 0 && dc == 0)
                    continue;
                const Ellipse be{double(parent.row + dr), double(parent.col + dc), bud.semi_major, bud.semi_minor,
                                 bud.orientation};
                const double iou = footprint_iou(pe, be);
                if (iou < kBudTargetIou)
                    break;
                best_r = dr;
                best_c = dc;
                best_iou = iou;
            }
            if (best_iou == 0.0)
                continue;

            bud.row = parent.row + best_r;
            bud.col = parent.col + best_c;
            bud.pos_row = bud.row;
            bud.pos_col = bud.col;
            if (!position_allowed(bud, bud.row, bud.col, parent.id))
                continue;

            bud.sibling = parent.id;
            parent.sibling = bud.id;
            base_.push_back({bud.semi_major, bud.semi_minor});
            parents_[bud.id] = parent.id;
            branches_.push_back({bud.id, parent.id, slice, best_iou});
            tubes_.push_back(bud);
        }
    }

    void jitter_shapes()
    {
        for (std::size_t i = 0; i < tubes_.size(); ++i) {
            auto& t = tubes_[i];
            const double ja = 1.0 + uniform(-kAxisJitter, kAxisJitter);
            const double jb = 1.0 + uniform(-kAxisJitter, kAxisJitter);
            t.semi_major = std::max(base_[i].first * ja, base_[i].second * jb);
            t.semi_minor = std::min(base_[i].first * ja, base_[i].second * jb);
            t.orientation += uniform(-kOrientationDrift, kOrientationDrift);
        }
    }

    void render(int slice, Phantom& out)
    {
        const int h = spec_.height, w = spec_.width;
        const double wall = spec_.wall_thickness;
        Image<std::uint16_t> labels(h, w, 0);
        RealImage best(h, w, 2.0);
        BinaryImage walls(h, w, 0);

        for (const auto& t : tubes_) {
            const Ellipse e{double(t.row), double(t.col), t.semi_major, t.semi_minor, t.orientation};
            const int reach = static_cast<int>(std::ceil(t.semi_major + wall)) + 1;
            for (int r = std::max(0, t.row - reach); r <= std::min(h - 1, t.row + reach); ++r)
                for (int c = std::max(0, t.col - reach); c <= std::min(w - 1, t.col + reach); ++c) {
                    if (e.rho(r, c, wall) <= 1.0)
                        walls(r, c) = 1;
                    const double rho = e.rho(r, c);
                    if (rho <= 1.0 && rho < best(r, c)) {
                        best(r, c) = rho;
                        labels(r, c) = static_cast<std::uint16_t>(t.id);
                    }
                }
        }

        // Pixels near a differently labelled pixel become wall, so distinct
        // tubes never touch under 8-connectivity.
        const int band = std::max(1, spec_.wall_thickness / 2);
        Image<std::uint16_t> divided = labels;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const int id = labels(r, c);
                if (id == 0)
                    continue;
                for (int dr = -band; dr <= band && divided(r, c); ++dr)
                    for (int dc = -band; dc <= band; ++dc) {
                        if (!labels.contains(r + dr, c + dc))
                            continue;
                        const int other = labels(r + dr, c + dc);
                        if (other != 0 && other != id) {
                            divided(r, c) = 0;
                            break;
                        }
                    }
            }

        // One connected region per tube: keep the largest piece.
        BinaryImage fg(h, w, 0);
        for (std::size_t i = 0; i < fg.size(); ++i)
            fg.pixels()[i] = divided.pixels()[i] != 0;
        const LabeledMask pieces = label_components(fg, Connectivity::eight);
        std::vector<long> piece_area(pieces.region_count + 1, 0);
        std::vector<int> piece_tube(pieces.region_count + 1, 0);
        for (std::size_t i = 0; i < fg.size(); ++i) {
            const int p = pieces.labels.pixels()[i];
            ++piece_area[p];
            piece_tube[p] = divided.pixels()[i];
        }
        std::map<int, int> keep;  // tube id -> piece label
        for (int p = 1; p <= pieces.region_count; ++p) {
            auto [it, inserted] = keep.try_emplace(piece_tube[p], p);
            if (!inserted && piece_area[p] > piece_area[it->second])
                it->second = p;
        }
        for (std::size_t i = 0; i < fg.size(); ++i) {
            const int p = pieces.labels.pixels()[i];
            if (p != 0 && keep[piece_tube[p]] != p)
                divided.pixels()[i] = 0;
        }

        GrayImage intensity(h, w);
        std::normal_distribution<double> noise(0.0, spec_.noise_sigma > 0.0 ? spec_.noise_sigma : 1.0);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double v = kBackgroundIntensity;
                if (divided(r, c))
                    v = kInteriorIntensity;
                else if (walls(r, c) || labels(r, c))
                    v = kWallIntensity;
                if (spec_.noise_sigma > 0.0)
                    v += noise(noise_rng_);
                intensity(r, c) = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 255L));
            }

        std::map<int, std::array<double, 3>> sums;  // row sum, col sum, count
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if (const int id = divided(r, c)) {
                    auto& s = sums[id];
                    s[0] += r;
                    s[1] += c;
                    s[2] += 1.0;
                }
        for (const auto& t : tubes_) {
            const auto it = sums.find(t.id);
            if (it == sums.end())
                continue;
            const auto& s = it->second;
            out.truth.tube_paths[t.id].push_back({slice, s[0] / s[2], s[1] / s[2], t.semi_minor, t.semi_major,
                                                  t.orientation, static_cast<long>(s[2])});
        }

        out.stack.slices.push_back(std::move(intensity));
        out.truth.instance_labels.push_back(std::move(divided));
    }

    PhantomSpec spec_;
    std::mt19937_64 rng_;
    std::mt19937_64 noise_rng_;
    double reach_ = 0.0;
    double min_separation_ = 0.0;
    int margin_ = 0;
    std::vector<Tube> tubes_;
    std::vector<std::pair<double, double>> base_;  // (semi_major, semi_minor) per tube
    std::map<int, std::optional<int>> parents_;
    std::vector<BranchEvent> branches_;
};

} // namespace

void PhantomSpec::validate() const
{
    if (depth < 1 || height < 1 || width < 1)
        throw std::invalid_argument("PhantomSpec: extent must be positive");
    if (n_tubes < 1)
        throw std::invalid_argument("PhantomSpec: n_tubes must be >= 1");
    if (radius_min < 2.0 || radius_max < radius_min)
        throw std::invalid_argument("PhantomSpec: radius range must satisfy 2 <= min <= max");
    if (curvature < 0.0)
        throw std::invalid_argument("PhantomSpec: curvature must be >= 0");
    if (branch_prob < 0.0 || branch_prob >= 0.1)
        throw std::invalid_argument("PhantomSpec: branch_prob must lie in [0, 0.1)");
    if (noise_sigma < 0.0)
        throw std::invalid_argument("PhantomSpec: noise_sigma must be >= 0");
    if (wall_thickness < 1)
        throw std::invalid_argument("PhantomSpec: wall_thickness must be >= 1");
}

void to_json(json& j, const PhantomSpec& s)
{
    j = json{{"seed", s.seed},
             {"extent", {s.depth, s.height, s.width}},
             {"n_tubes", s.n_tubes},
             {"radius_range", {s.radius_min, s.radius_max}},
             {"curvature", s.curvature},
             {"branch_prob", s.branch_prob},
             {"noise_sigma", s.noise_sigma},
             {"wall_thickness", s.wall_thickness}};
}

void from_json(const json& j, PhantomSpec& s)
{
    s = PhantomSpec{};
    s.seed = j.value("seed", s.seed);
    if (j.contains("extent")) {
        const auto& e = j.at("extent");
        s.depth = e.at(0).get<int>();
        s.height = e.at(1).get<int>();
        s.width = e.at(2).get<int>();
    }
    s.n_tubes = j.value("n_tubes", s.n_tubes);
    if (j.contains("radius_range")) {
        s.radius_min = j["radius_range"].at(0).get<double>();
        s.radius_max = j["radius_range"].at(1).get<double>();
    }
    s.curvature = j.value("curvature", s.curvature);
    s.branch_prob = j.value("branch_prob", s.branch_prob);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.wall_thickness = j.value("wall_thickness", s.wall_thickness);
    s.validate();
}

BinaryImage PhantomTruth::mask(int slice) const
{
    const auto& l = instance_labels.at(slice);
    BinaryImage out(l.height(), l.width());
    for (std::size_t i = 0; i < l.size(); ++i)
        out.pixels()[i] = l.pixels()[i] != 0;
    return out;
}

std::vector<int> PhantomTruth::tubes_in_slice(int slice) const
{
    std::vector<int> ids;
    for (const auto& [id, path] : tube_paths)
        for (const auto& p : path)
            if (p.slice == slice) {
                ids.push_back(id);
                break;
            }
    return ids;
}

Phantom generate(const PhantomSpec& spec)
{
    spec.validate();
    return Generator(spec).run();
}

json tube_paths_to_json(const PhantomTruth& truth)
{
    json tubes = json::array();
    for (const auto& [id, path] : truth.tube_paths) {
        json t;
        t["id"] = id;
        const auto it = truth.parent.find(id);
        t["parent"] = (it != truth.parent.end() && it->second) ? json(*it->second) : json(nullptr);
        t["path"] = json::array();
        for (const auto& p : path)
            t["path"].push_back({{"slice", p.slice},
                                 {"centroid", {p.centroid_row, p.centroid_col}},
                                 {"radius", p.radius},
                                 {"semi_major", p.semi_major},
                                 {"orientation", p.orientation},
                                 {"area", p.area}});
        tubes.push_back(t);
    }
    json branches = json::array();
    for (const auto& b : truth.branches)
        branches.push_back({{"child", b.child}, {"parent", b.parent}, {"slice", b.slice},
                            {"footprint_iou", b.footprint_iou}});
    return json{{"tubes", tubes}, {"branches", branches}};
}

fs::path write_phantom(const Phantom& phantom, const PhantomSpec& spec, const fs::path& dir)
{
    fs::create_directories(dir / "slices");
    fs::create_directories(dir / "truth");
    fs::create_directories(dir / "labels");

    Manifest manifest;
    manifest.specimen_id = "phantom-seed-" + std::to_string(spec.seed);
    manifest.axis_label = phantom.stack.axis_label;
    manifest.slice_spacing = phantom.stack.slice_spacing;
    manifest.pixel_pitch = phantom.stack.pixel_pitch;
    manifest.base_dir = dir;

    for (int s = 0; s < phantom.stack.depth(); ++s) {
        const fs::path slice_rel = fs::path("slices") / slice_name("slice", s);
        const fs::path mask_rel = fs::path("truth") / slice_name("mask", s);
        save_gray(phantom.stack.slices[s], dir / slice_rel);
        save_mask(phantom.truth.mask(s), dir / mask_rel);
        save_gray(phantom.truth.instance_labels[s], dir / "labels" / slice_name("label", s), true);
        manifest.slice_files.push_back(slice_rel);
        manifest.annotation_files[s] = {mask_rel, AnnotationKind::full};
    }

    auto write_json = [](const json& j, const fs::path& path) {
        std::ofstream out(path);
        if (!out)
            throw IoError("cannot write " + path.string());
        out << j.dump(2) << '\n';
    };
    write_json(tube_paths_to_json(phantom.truth), dir / "tube_paths.json");
    write_json(json(spec), dir / "spec.json");
    const fs::path manifest_path = dir / "manifest.json";
    write_manifest(manifest, manifest_path);
    return manifest_path;
}

PhantomTruth read_phantom_truth(const fs::path& dir)
{
    PhantomTruth truth;
    std::ifstream in(dir / "tube_paths.json");
    if (!in)
        throw IoError("cannot open " + (dir / "tube_paths.json").string());
    json j;
    in >> j;
    int depth = 0;
    for (const auto& t : j.at("tubes")) {
        const int id = t.at("id").get<int>();
        truth.parent[id] = t.at("parent").is_null() ? std::nullopt : std::optional<int>(t["parent"].get<int>());
        auto& path = truth.tube_paths[id];
        for (const auto& p : t.at("path")) {
            path.push_back({p.at("slice").get<int>(), p.at("centroid").at(0).get<double>(),
                            p.at("centroid").at(1).get<double>(), p.at("radius").get<double>(),
                            p.at("semi_major").get<double>(), p.at("orientation").get<double>(),
                            p.at("area").get<long>()});
            depth = std::max(depth, path.back().slice + 1);
        }
    }
    for (const auto& b : j.value("branches", json::array()))
        truth.branches.push_back({b.at("child").get<int>(), b.at("parent").get<int>(), b.at("slice").get<int>(),
                                  b.at("footprint_iou").get<double>()});
    for (int s = 0;; ++s) {
        const fs::path p = dir / "labels" / slice_name("label", s);
        if (!fs::exists(p))
            break;
        truth.instance_labels.push_back(load_gray(p));
    }
    if (static_cast<int>(truth.instance_labels.size()) < depth)
        throw IoError("phantom truth labels missing slices in " + dir.string());
    return truth;
}

} // namespace corallite
