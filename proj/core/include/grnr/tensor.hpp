#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace grnr {

struct GridPos {
    int h = 0;
    int w = 0;

    friend bool operator==(const GridPos&, const GridPos&) = default;
};

/// Decoded 8-bit RGB raster, interleaved, row-major.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // height * width * 3

    [[nodiscard]] std::uint8_t at(int h, int w, int c) const {
        return pixels[(static_cast<std::size_t>(h) * width + w) * 3 + c];
    }
};

/// Normalized network input, planar [3][height][width].
struct ImageTensor {
    int height = 0;
    int width = 0;
    std::vector<float> data;
    std::string source_path;

    [[nodiscard]] float at(int c, int h, int w) const {
        return data[(static_cast<std::size_t>(c) * height + h) * width + w];
    }
};

/// One hierarchy of patch features, stored [C][H][W] with W fastest
/// (the same order as the .fmap payload).
struct FeatureMap {
    int level = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int level_, int channels_, int height_, int width_)
        : level(level_), channels(channels_), height(height_), width(width_),
          data(static_cast<std::size_t>(channels_) * height_ * width_, 0.0f) {}

    [[nodiscard]] std::size_t index(int c, int h, int w) const {
        return (static_cast<std::size_t>(c) * height + h) * width + w;
    }
    [[nodiscard]] float at(int c, int h, int w) const { return data[index(c, h, w)]; }
    float& at(int c, int h, int w) { return data[index(c, h, w)]; }

    [[nodiscard]] std::size_t positions() const {
        return static_cast<std::size_t>(height) * width;
    }
    [[nodiscard]] bool contains(int h, int w) const {
        return h >= 0 && h < height && w >= 0 && w < width;
    }

    /// Throws Argument if dimensions are non-positive, the payload size is
    /// off, or any entry is non-finite.
    void validate() const;

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

struct FeatureStack {
    std::vector<FeatureMap> maps;

    [[nodiscard]] std::vector<int> hierarchy_ids() const;
    /// Non-empty, every map valid, level ids strictly increasing.
    void validate() const;

    friend bool operator==(const FeatureStack&, const FeatureStack&) = default;
};

/// Dense real-valued grid, row-major.
struct ScoreGrid {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    ScoreGrid() = default;
    ScoreGrid(int height_, int width_, double fill = 0.0)
        : height(height_), width(width_),
          values(static_cast<std::size_t>(height_) * width_, fill) {}

    [[nodiscard]] double at(int h, int w) const {
        return values[static_cast<std::size_t>(h) * width + w];
    }
    double& at(int h, int w) { return values[static_cast<std::size_t>(h) * width + w]; }
    [[nodiscard]] std::size_t size() const { return values.size(); }

    friend bool operator==(const ScoreGrid&, const ScoreGrid&) = default;
};

}  // namespace grnr
