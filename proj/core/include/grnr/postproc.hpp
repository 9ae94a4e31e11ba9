#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "grnr/regression.hpp"
#include "grnr/tensor.hpp"

namespace grnr::postproc {

struct AnomalyMap {
    ScoreGrid scores;          // image resolution
    double image_score = 0.0;  // max over scores
};

/// Bilinear (half-pixel centers, border clamp) upsampling. Target dims must
/// be >= source dims.
ScoreGrid upsample_map(const ScoreGrid& map, int target_h, int target_w);

/// Elementwise product across maps of identical dimensions.
ScoreGrid fuse_hierarchies(std::span<const ScoreGrid> maps);

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with half-sample symmetric reflection at the
/// borders (edge pixel repeated). sigma = 0 returns the input unchanged.
ScoreGrid gaussian_smooth(const ScoreGrid& map, double sigma);

/// Upsample every hierarchy to image size, fuse by product, smooth, take max.
AnomalyMap finalize(std::span<const core::HierarchyScoreMap> maps, int image_h, int image_w,
                    double sigma);

/// Jet-style ramp: t in [0,1] -> RGB.
std::array<std::uint8_t, 3> jet_color(double t);

/// Per-image min-max normalization then jet ramp; row-major RGB bytes.
std::vector<std::uint8_t> heatmap_rgb(const AnomalyMap& map);

/// Writes the heatmap as an 8-bit PNG.
void render_heatmap(const AnomalyMap& map, const std::filesystem::path& out_path);

/// Raw dump as a .fmap with a single 1-channel hierarchy (level 0).
void save_anomaly_map(const AnomalyMap& map, const std::filesystem::path& out_path);

}  // namespace grnr::postproc
