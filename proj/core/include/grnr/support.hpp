#pragma once

#include <vector>

#include <Eigen/Core>

#include "grnr/tensor.hpp"

namespace grnr::core {

/// Position-major copy of a feature map: row h*W + w holds the C-vector at (h, w).
using PatchMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

PatchMatrix to_patch_matrix(const FeatureMap& map);

/// Number of local support rows for radius m: (2m+1)^2 - 1 = 4m^2 + 4m.
constexpr int local_support_size(int m) { return 4 * m * m + 4 * m; }

struct LocalSupport {
    PatchMatrix rows;  // local_support_size(radius) x C
    int radius = 1;
    std::vector<GridPos> coordinates;  // clamped source of each row
};

/// Row-major enumeration of the (2m+1)^2 window around (h, w), minus the
/// center, with each coordinate clamped to the map border. Returns flat
/// indices h*W + w.
std::vector<int> neighborhood_indices(int height, int width, int h, int w, int m);

LocalSupport sample_local_support(const FeatureMap& map, int h, int w, int m);

struct GlobalSupport {
    PatchMatrix rows;                  // K x C
    std::vector<GridPos> positions;    // ascending by (distance_sum, row-major index)
    std::vector<double> distance_sums; // sum over all positions of squared distance

    [[nodiscard]] int count() const { return static_cast<int>(positions.size()); }
};

/// The K positions whose feature vectors have the smallest summed squared
/// distance to every position of the map (self-distance included). K is
/// clamped to H*W. Uses sum_j |x - f_j|^2 = HW|x|^2 + sum_j |f_j|^2 - 2 x . sum_j f_j.
GlobalSupport sample_global_support(const FeatureMap& map, int k);
GlobalSupport sample_global_support(const PatchMatrix& patches, int height, int width, int k);

}  // namespace grnr::core
