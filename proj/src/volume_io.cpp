#include "corallite/volume_io.hpp"

#include "corallite/parallel.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace corallite {

namespace {

cv::Mat read_raw(const fs::path& path)
{
    if (!fs::exists(path))
        throw IoError("missing file: " + path.string());
    cv::Mat m;
    try {
        m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        throw IoError("cannot decode " + path.string() + ": " + e.what());
    }
    if (m.empty())
        throw IoError("cannot decode " + path.string());
    if (m.channels() != 1)
        throw IoError("not a grayscale raster (" + std::to_string(m.channels()) + " channels): " + path.string());
    return m;
}

void write_raw(const cv::Mat& m, const fs::path& path)
{
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), m);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok)
        throw IoError("cannot write " + path.string());
}

} // namespace

void SliceStack::validate() const
{
    if (!(slice_spacing > 0.0) || !(pixel_pitch > 0.0))
        throw std::invalid_argument("SliceStack: slice_spacing and pixel_pitch must be positive");
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("SliceStack: bit depth must be 8 or 16");
    for (const auto& s : slices)
        if (!s.same_shape(slices.front()))
            throw std::invalid_argument("SliceStack: slices differ in size");
}

fs::path Manifest::resolve(const fs::path& p) const
{
    return p.is_absolute() ? p : base_dir / p;
}

void Manifest::validate() const
{
    if (!(slice_spacing > 0.0) || !(pixel_pitch > 0.0))
        throw std::invalid_argument("manifest: slice_spacing and pixel_pitch must be positive");
    for (const auto& [index, entry] : annotation_files) {
        if (index < 0 || index >= static_cast<int>(slice_files.size()))
            throw std::invalid_argument("manifest: annotation for slice " + std::to_string(index) +
                                        " outside slice range");
    }
}

std::string to_string(AnnotationKind kind)
{
    return kind == AnnotationKind::full ? "full" : "partial-points";
}

AnnotationKind annotation_kind_from_string(const std::string& s)
{
    if (s == "full")
        return AnnotationKind::full;
    if (s == "partial-points" || s == "partial")
        return AnnotationKind::partial_points;
    throw std::invalid_argument("unknown annotation kind: " + s);
}

json manifest_to_json(const Manifest& m)
{
    json j;
    j["specimen_id"] = m.specimen_id;
    j["axis_label"] = m.axis_label;
    j["slice_spacing"] = m.slice_spacing;
    j["pixel_pitch"] = m.pixel_pitch;
    j["slice_files"] = json::array();
    for (const auto& f : m.slice_files)
        j["slice_files"].push_back(f.generic_string());
    j["annotation_files"] = json::object();
    j["annotation_kind"] = json::object();
    for (const auto& [index, entry] : m.annotation_files) {
        j["annotation_files"][std::to_string(index)] = entry.path.generic_string();
        j["annotation_kind"][std::to_string(index)] = to_string(entry.kind);
    }
    return j;
}

Manifest manifest_from_json(const json& j, const fs::path& base_dir)
{
    Manifest m;
    m.base_dir = base_dir;
    try {
        m.specimen_id = j.value("specimen_id", std::string{});
        m.axis_label = j.value("axis_label", std::string{"growth"});
        m.slice_spacing = j.value("slice_spacing", 1.0);
        m.pixel_pitch = j.value("pixel_pitch", 1.0);
        for (const auto& f : j.at("slice_files"))
            m.slice_files.emplace_back(f.get<std::string>());
        if (j.contains("annotation_files")) {
            const json kinds = j.value("annotation_kind", json::object());
            for (const auto& [key, value] : j["annotation_files"].items()) {
                AnnotationEntry entry;
                entry.path = value.get<std::string>();
                if (kinds.contains(key))
                    entry.kind = annotation_kind_from_string(kinds[key].get<std::string>());
                m.annotation_files[std::stoi(key)] = entry;
            }
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    }
    m.validate();
    return m;
}

Manifest read_manifest(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("manifest is not valid JSON: " + path.string() + ": " + e.what());
    }
    return manifest_from_json(j, path.parent_path());
}

void write_manifest(const Manifest& manifest, const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write manifest: " + path.string());
    out << manifest_to_json(manifest).dump(2) << '\n';
}

GrayImage load_gray(const fs::path& path, int* bit_depth)
{
    const cv::Mat m = read_raw(path);
    GrayImage out(m.rows, m.cols);
    if (m.depth() == CV_8U) {
        for (int r = 0; r < m.rows; ++r) {
            const auto* src = m.ptr<std::uint8_t>(r);
            for (int c = 0; c < m.cols; ++c)
                out(r, c) = src[c];
        }
        if (bit_depth)
            *bit_depth = 8;
    } else if (m.depth() == CV_16U) {
        for (int r = 0; r < m.rows; ++r) {
            const auto* src = m.ptr<std::uint16_t>(r);
            for (int c = 0; c < m.cols; ++c)
                out(r, c) = src[c];
        }
        if (bit_depth)
            *bit_depth = 16;
    } else {
        throw IoError("unsupported pixel depth (need 8- or 16-bit unsigned): " + path.string());
    }
    return out;
}

void save_gray(const GrayImage& image, const fs::path& path, bool force_16)
{
    bool wide = force_16;
    for (auto v : image.pixels())
        wide = wide || v > 255;
    cv::Mat m(image.height(), image.width(), wide ? CV_16UC1 : CV_8UC1);
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c) {
            if (wide)
                m.at<std::uint16_t>(r, c) = image(r, c);
            else
                m.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(image(r, c));
        }
    write_raw(m, path);
}

SliceStack load_stack(const Manifest& manifest)
{
    manifest.validate();
    SliceStack stack;
    stack.slice_spacing = manifest.slice_spacing;
    stack.pixel_pitch = manifest.pixel_pitch;
    stack.axis_label = manifest.axis_label;
    stack.slices.resize(manifest.slice_files.size());
    std::vector<int> depths(manifest.slice_files.size(), 8);

    parallel_for(manifest.slice_files.size(), [&](std::size_t i) {
        stack.slices[i] = load_gray(manifest.resolve(manifest.slice_files[i]), &depths[i]);
    });

    for (std::size_t i = 1; i < stack.slices.size(); ++i) {
        if (!stack.slices[i].same_shape(stack.slices[0]))
            throw IoError("dimension mismatch: " + manifest.slice_files[i].string() + " is " +
                          std::to_string(stack.slices[i].height()) + "x" +
                          std::to_string(stack.slices[i].width()) + ", expected " +
                          std::to_string(stack.slices[0].height()) + "x" +
                          std::to_string(stack.slices[0].width()));
        if (depths[i] != depths[0])
            throw IoError("mixed bit depths in stack: " + manifest.slice_files[i].string());
    }
    if (!depths.empty())
        stack.bit_depth = depths[0];
    stack.validate();
    return stack;
}

MaskSlice load_mask(const fs::path& path, int slice_index)
{
    const cv::Mat m = read_raw(path);
    if (m.depth() != CV_8U)
        throw IoError("mask must be 8-bit single-channel: " + path.string());
    MaskSlice mask{BinaryImage(m.rows, m.cols), slice_index};
    for (int r = 0; r < m.rows; ++r) {
        const auto* src = m.ptr<std::uint8_t>(r);
        for (int c = 0; c < m.cols; ++c)
            mask.raster(r, c) = src[c] >= 128 ? 1 : 0;
    }
    return mask;
}

void save_mask(const BinaryImage& mask, const fs::path& path)
{
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            m.at<std::uint8_t>(r, c) = mask(r, c) ? 255 : 0;
    write_raw(m, path);
}

void save_mask(const MaskSlice& mask, const fs::path& path)
{
    save_mask(mask.raster, path);
}

PointAnnotation load_point_annotation(const fs::path& path, int slice_index)
{
    const MaskSlice mask = load_mask(path, slice_index);
    PointAnnotation out{slice_index, {}};
    for (int r = 0; r < mask.raster.height(); ++r)
        for (int c = 0; c < mask.raster.width(); ++c)
            if (mask.raster(r, c))
                out.points.emplace_back(r, c);
    return out;
}

} // namespace corallite
