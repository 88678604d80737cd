#include "corallite/tiler.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace corallite {

std::vector<int> axis_origins(int extent, int tile_size, int step)
{
    if (tile_size < 1)
        throw std::invalid_argument("tile size must be positive");
    if (tile_size > extent)
        throw std::invalid_argument("tile size " + std::to_string(tile_size) + " exceeds slice extent " +
                                    std::to_string(extent));
    if (step < 1 || step > tile_size)
        throw std::invalid_argument("step must satisfy 1 <= step <= tile size (got " + std::to_string(step) + ")");

    std::vector<int> origins;
    const int last = extent - tile_size;
    for (int o = 0; o <= last; o += step)
        origins.push_back(o);
    if (origins.back() != last)
        origins.push_back(last);
    return origins;
}

TileGrid plan_grid(int height, int width, int tile_size, int step)
{
    TileGrid grid{height, width, tile_size, step, {}};
    const auto rows = axis_origins(height, tile_size, step);
    const auto cols = axis_origins(width, tile_size, step);
    grid.origins.reserve(rows.size() * cols.size());
    for (int r : rows)
        for (int c : cols)
            grid.origins.push_back({r, c});
    return grid;
}

Snippet extract_snippet(const SliceStack& stack, TileOrigin origin, int tile_size, int center_slice_index,
                        int depth, const BinaryImage* center_annotation)
{
    if (depth < 1 || depth % 2 == 0)
        throw std::invalid_argument("snippet depth must be odd");
    if (center_slice_index < 0 || center_slice_index >= stack.depth())
        throw std::out_of_range("centre slice " + std::to_string(center_slice_index) + " outside stack of " +
                                std::to_string(stack.depth()));

    Snippet snippet;
    snippet.center_slice_index = center_slice_index;
    snippet.origin = origin;
    const int half = (depth - 1) / 2;
    for (int d = 0; d < depth; ++d) {
        const int src = std::clamp(center_slice_index + d - half, 0, stack.depth() - 1);
        snippet.slice_indices.push_back(src);
        snippet.voxels.push_back(extract_tile(stack.slices[src], origin, tile_size));
    }
    if (center_annotation)
        snippet.center_annotation = extract_tile(*center_annotation, origin, tile_size);
    return snippet;
}

std::vector<Tile> cut_tiles(const RealImage& slice, const TileGrid& grid)
{
    std::vector<Tile> tiles;
    tiles.reserve(grid.origins.size());
    for (const auto& o : grid.origins)
        tiles.push_back({o, extract_tile(slice, o, grid.tile_size)});
    return tiles;
}

std::vector<Tile> cut_tiles(const BinaryImage& mask, const TileGrid& grid)
{
    std::vector<Tile> tiles;
    tiles.reserve(grid.origins.size());
    for (const auto& o : grid.origins) {
        RealImage t(grid.tile_size, grid.tile_size);
        for (int r = 0; r < grid.tile_size; ++r)
            for (int c = 0; c < grid.tile_size; ++c)
                t(r, c) = mask(o.row + r, o.col + c) ? 1.0 : 0.0;
        tiles.push_back({o, std::move(t)});
    }
    return tiles;
}

RealImage stitch_mean(std::span<const Tile> tiles, int height, int width)
{
    RealImage sum(height, width, 0.0);
    Image<int> count(height, width, 0);
    for (const auto& tile : tiles) {
        const auto& v = tile.values;
        if (tile.origin.row < 0 || tile.origin.col < 0 || tile.origin.row + v.height() > height ||
            tile.origin.col + v.width() > width)
            throw std::invalid_argument("stitch: tile outside target extent");
        for (int r = 0; r < v.height(); ++r)
            for (int c = 0; c < v.width(); ++c) {
                sum(tile.origin.row + r, tile.origin.col + c) += v(r, c);
                count(tile.origin.row + r, tile.origin.col + c) += 1;
            }
    }
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            if (count(r, c) == 0)
                throw std::invalid_argument("stitch: pixel (" + std::to_string(r) + "," + std::to_string(c) +
                                            ") not covered by any tile");
            sum(r, c) /= count(r, c);
        }
    return sum;
}

BinaryImage stitch(std::span<const Tile> tiles, int height, int width)
{
    const RealImage mean = stitch_mean(tiles, height, width);
    BinaryImage out(height, width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            out(r, c) = mean(r, c) >= 0.5 ? 1 : 0;
    return out;
}

} // namespace corallite
