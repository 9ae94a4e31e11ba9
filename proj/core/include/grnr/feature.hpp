#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "grnr/tensor.hpp"

namespace grnr::feature {

inline constexpr std::array<double, 3> kImageNetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd{0.229, 0.224, 0.225};

struct PreprocessConfig {
    int resize = 320;
    int crop = 256;
    std::array<double, 3> mean = kImageNetMean;
    std::array<double, 3> std = kImageNetStd;

    /// Throws Config when crop > resize, a size is < 1, or a std entry is <= 0.
    void validate() const;
};

/// Reads an image file into an RGB raster (Input error if it cannot be decoded).
RgbImage decode_image(const std::filesystem::path& path);

/// Half-pixel-centered bilinear resampling of a planar single-channel
/// buffer; out-of-range taps clamp to the border.
std::vector<double> resize_bilinear(std::span<const double> src, int src_h, int src_w,
                                    int dst_h, int dst_w);

/// Bilinear resize to `resize`², center crop to `crop`², then
/// (v/255 - mean_c) / std_c per channel.
ImageTensor preprocess_image(const RgbImage& raw, const PreprocessConfig& config);

/// Top-left corner of the centered crop window inside a `resize`² image.
int crop_offset(const PreprocessConfig& config);

/// Anything that maps a preprocessed image to per-hierarchy feature maps.
class Backbone {
public:
    virtual ~Backbone() = default;
    virtual FeatureStack extract(const ImageTensor& image, std::span<const int> hierarchy_ids) = 0;
};

struct BackboneHandle {
    std::filesystem::path model_path;
    /// One output tensor name per requested hierarchy, in hierarchy order.
    /// Empty means "layer<id>" for every id.
    std::vector<std::string> output_names;
};

/// ONNX model executed through OpenCV's dnn module. Inference is serialized
/// internally, so one instance can be shared across threads.
class OnnxBackbone final : public Backbone {
public:
    explicit OnnxBackbone(BackboneHandle handle);
    ~OnnxBackbone() override;

    FeatureStack extract(const ImageTensor& image, std::span<const int> hierarchy_ids) override;

    [[nodiscard]] const BackboneHandle& handle() const { return handle_; }
    [[nodiscard]] std::vector<std::string> available_outputs() const;

private:
    struct Impl;
    BackboneHandle handle_;
    std::unique_ptr<Impl> impl_;
    std::mutex mutex_;
};

/// Runs `backbone` for each id in `hierarchy_ids` (strictly increasing).
FeatureStack extract_features(const ImageTensor& image, Backbone& backbone,
                              std::span<const int> hierarchy_ids);

// .fmap: "GRNRFMP1", u32 count, then per map u32 level, C, H, W and C*H*W
// little-endian float32 in [c][h][w] order.
inline constexpr std::array<char, 8> kFmapMagic{'G', 'R', 'N', 'R', 'F', 'M', 'P', '1'};

std::vector<std::uint8_t> encode_feature_stack(const FeatureStack& stack);
FeatureStack decode_feature_stack(std::span<const std::uint8_t> bytes);

void save_feature_stack(const FeatureStack& stack, const std::filesystem::path& path);
FeatureStack load_feature_stack(const std::filesystem::path& path);

}  // namespace grnr::feature
