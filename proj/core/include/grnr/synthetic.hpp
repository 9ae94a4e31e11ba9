#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "grnr/feature.hpp"
#include "grnr/tensor.hpp"

namespace grnr::synthetic {

enum class TextureKind { Sinusoid, Checker };

std::string to_string(TextureKind kind);

struct TextureSpec {
    TextureKind kind = TextureKind::Sinusoid;
    int size = 256;
    double period = 16.0;       // pixels
    double orientation = 0.0;   // radians, sinusoid only
    double noise = 0.05;        // uniform noise half-width, fraction of full scale
    std::uint64_t seed = 0;     // noise and tint stream
    bool blotch = false;
    int blotch_size = 16;
    GridPos blotch_origin{};    // top-left corner
};

struct TextureSample {
    RgbImage image;
    std::vector<std::uint8_t> mask;  // size*size, 1 inside the blotch
};

/// Periodic texture with bounded noise and an optional out-of-distribution
/// square blotch. Deterministic in `spec`.
TextureSample make_texture(const TextureSpec& spec);

/// The i-th texture of a seeded suite: kind alternates, period and
/// orientation and blotch position are drawn from the suite seed. The
/// blotch stays at least 32 px from the border.
TextureSpec suite_spec(std::uint64_t suite_seed, int index, bool with_blotch, int size = 256);

/// Writes an MVTec-style tree: <root>/<kind>/test/{good,blotch}/NNN.png and
/// <root>/<kind>/ground_truth/blotch/NNN_mask.png. Returns the categories written.
std::vector<std::string> write_suite(const std::filesystem::path& root, std::uint64_t suite_seed,
                                     int count, int size = 256);

struct MapShape {
    int level = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
};

/// Seeded stack of |N(0,1)| feature maps, for timing and property tests.
FeatureStack random_stack(std::uint64_t seed, std::span<const MapShape> shapes);

/// Fixed-seed random convolutional feature extractor used where no trained
/// backbone is available. Each stage is a 3x3 convolution, ReLU and 2x2
/// average pooling (4x4 for the first stage), so level 1 has stride 4,
/// level 2 stride 8 and level 3 stride 16. Emitted maps are additionally
/// averaged over a 3x3 neighborhood.
class RandomConvBackbone final : public feature::Backbone {
public:
    explicit RandomConvBackbone(std::uint64_t seed = 0, std::vector<int> channels = {16, 32, 64});

    FeatureStack extract(const ImageTensor& image, std::span<const int> hierarchy_ids) override;

    [[nodiscard]] static int stride_of(int level);

private:
    struct Stage {
        int in = 0;
        int out = 0;
        std::vector<float> weights;  // [out][in][3][3]
        std::vector<float> bias;
    };
    std::vector<Stage> stages_;
};

}  // namespace grnr::synthetic
