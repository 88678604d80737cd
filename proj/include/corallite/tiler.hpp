#pragma once

#include "corallite/image.hpp"
#include "corallite/volume_io.hpp"

#include <optional>
#include <span>
#include <vector>

namespace corallite {

struct TileOrigin {
    int row = 0;
    int col = 0;
    friend bool operator==(const TileOrigin&, const TileOrigin&) = default;
};

/// Sliding-window layout over one slice. The last window on each axis is
/// clamped to the border, so it may overlap its predecessor.
struct TileGrid {
    int height = 0;
    int width = 0;
    int tile_size = 224;
    int step = 224;
    std::vector<TileOrigin> origins;  // row-major: rows outer, cols inner
};

/// Origins along one axis: 0, k, 2k, ... with the final origin clamped to extent - tile.
std::vector<int> axis_origins(int extent, int tile_size, int step);

/// Throws std::invalid_argument if the tile exceeds the slice or step is outside [1, tile_size].
TileGrid plan_grid(int height, int width, int tile_size = 224, int step = 224);

template <typename T>
Image<T> extract_tile(const Image<T>& slice, TileOrigin origin, int tile_size)
{
    return crop(slice, origin.row, origin.col, tile_size, tile_size);
}

/// D tiles centred on one slice; voxels[(D-1)/2] is the centre slice.
struct Snippet {
    std::vector<GrayImage> voxels;
    std::vector<int> slice_indices;  // source slice for each depth position
    int center_slice_index = 0;
    TileOrigin origin;
    std::optional<BinaryImage> center_annotation;

    int depth() const noexcept { return static_cast<int>(voxels.size()); }
};

/// Out-of-range depth positions replicate the nearest existing slice.
Snippet extract_snippet(const SliceStack& stack, TileOrigin origin, int tile_size,
                        int center_slice_index, int depth = 5,
                        const BinaryImage* center_annotation = nullptr);

struct Tile {
    TileOrigin origin;
    RealImage values;  // probabilities or {0,1}
};

/// Cuts a full slice into tiles following the grid.
std::vector<Tile> cut_tiles(const RealImage& slice, const TileGrid& grid);
std::vector<Tile> cut_tiles(const BinaryImage& mask, const TileGrid& grid);

/// Per-pixel mean of covering tiles, true where mean >= 0.5.
/// Throws std::invalid_argument if any pixel is left uncovered.
BinaryImage stitch(std::span<const Tile> tiles, int height, int width);

/// Per-pixel mean of covering tiles without binarisation.
RealImage stitch_mean(std::span<const Tile> tiles, int height, int width);

} // namespace corallite
