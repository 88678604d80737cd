#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace corallite {

/// Dense row-major 2-D raster.
template <typename T>
class Image {
public:
    using value_type = T;

    Image() = default;
    Image(int height, int width, T fill = T{})
        : height_(height), width_(width)
    {
        if (height < 0 || width < 0)
            throw std::invalid_argument("Image: negative extent");
        data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

    bool contains(int row, int col) const noexcept
    {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    std::span<T> row(int r) noexcept { return std::span<T>(data_).subspan(index(r, 0), width_); }
    std::span<const T> row(int r) const noexcept { return std::span<const T>(data_).subspan(index(r, 0), width_); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    bool same_shape(const Image& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const Image& a, const Image& b) = default;

private:
    std::size_t index(int row, int col) const noexcept
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

/// Logical mask: 0 = false, 1 = true.
using BinaryImage = Image<std::uint8_t>;
/// Grayscale intensities; 8-bit sources occupy the low byte.
using GrayImage = Image<std::uint16_t>;
using LabelImage = Image<std::int32_t>;
using RealImage = Image<double>;

template <typename T, typename U>
void require_same_shape(const Image<T>& a, const Image<U>& b, const char* what)
{
    if (a.height() != b.height() || a.width() != b.width())
        throw std::invalid_argument(std::string(what) + ": raster shapes differ");
}

/// Crop a window; the window must lie inside the image.
template <typename T>
Image<T> crop(const Image<T>& src, int row0, int col0, int height, int width)
{
    if (row0 < 0 || col0 < 0 || row0 + height > src.height() || col0 + width > src.width())
        throw std::out_of_range("crop: window outside image");
    Image<T> out(height, width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            out(r, c) = src(row0 + r, col0 + c);
    return out;
}

inline std::size_t count_true(const BinaryImage& mask)
{
    std::size_t n = 0;
    for (auto v : mask.pixels())
        n += v != 0;
    return n;
}

} // namespace corallite
