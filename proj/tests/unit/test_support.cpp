#include <gtest/gtest.h>

#include <random>

#include "grnr/error.hpp"
#include "grnr/support.hpp"
#include "oracles.hpp"

using namespace grnr;
using namespace grnr::core;

namespace {

// Channel 0 holds 10*h + w so every row identifies its source position.
FeatureMap labeled_grid(int h, int w) {
    FeatureMap map(1, 2, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            map.at(0, y, x) = static_cast<float>(10 * y + x);
            map.at(1, y, x) = 1.0f;
        }
    }
    return map;
}

}  // namespace

TEST(LocalSupport, RowCountIsFourMSquaredPlusFourM) {
    EXPECT_EQ(local_support_size(1), 8);
    EXPECT_EQ(local_support_size(2), 24);
    EXPECT_EQ(local_support_size(3), 48);
    const auto map = labeled_grid(6, 6);
    for (int m = 1; m <= 3; ++m) {
        for (auto [h, w] : {std::pair{0, 0}, std::pair{2, 3}, std::pair{5, 5}}) {
            EXPECT_EQ(sample_local_support(map, h, w, m).rows.rows(), 4 * m * m + 4 * m);
        }
    }
}

TEST(LocalSupport, InteriorNeighborsInRowMajorOrder) {
    const auto map = labeled_grid(4, 4);
    const auto s = sample_local_support(map, 1, 2, 1);
    const std::vector<double> expected{1, 2, 3, 11, 13, 21, 22, 23};
    ASSERT_EQ(s.rows.rows(), 8);
    ASSERT_EQ(s.rows.cols(), 2);
    for (int r = 0; r < 8; ++r) EXPECT_EQ(s.rows(r, 0), expected[r]) << "row " << r;
}

TEST(LocalSupport, CornerUsesClampedCoordinates) {
    // Window around (0,0) in row-major order, minus the center:
    // (-1,-1)(-1,0)(-1,1) (0,-1)(0,1) (1,-1)(1,0)(1,1), clamped to the grid.
    const auto map = labeled_grid(4, 4);
    const auto s = sample_local_support(map, 0, 0, 1);
    const std::vector<GridPos> coords{{0, 0}, {0, 0}, {0, 1}, {0, 0}, {0, 1}, {1, 0}, {1, 0}, {1, 1}};
    const std::vector<double> values{0, 0, 1, 0, 1, 10, 10, 11};
    ASSERT_EQ(s.coordinates.size(), coords.size());
    for (std::size_t r = 0; r < coords.size(); ++r) {
        EXPECT_EQ(s.coordinates[r], coords[r]) << "row " << r;
        EXPECT_EQ(s.rows(static_cast<Eigen::Index>(r), 0), values[r]) << "row " << r;
    }
    // the (-1, .) row duplicates the entry of row 0
    EXPECT_EQ(s.rows.row(1), s.rows.row(0));
}

TEST(LocalSupport, NeighborhoodIndicesAgreeWithCoordinates) {
    const auto map = labeled_grid(5, 3);
    const auto s = sample_local_support(map, 4, 2, 2);
    const auto idx = neighborhood_indices(5, 3, 4, 2, 2);
    ASSERT_EQ(idx.size(), s.coordinates.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        EXPECT_EQ(idx[r], s.coordinates[r].h * 3 + s.coordinates[r].w);
    }
}

TEST(LocalSupport, OutOfBoundsQueryIsArgumentError) {
    const auto map = labeled_grid(3, 3);
    try {
        sample_local_support(map, 3, 0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Argument);
    }
    EXPECT_THROW(sample_local_support(map, 0, -1, 1), Error);
    EXPECT_THROW(sample_local_support(map, 1, 1, 0), Error);
}

TEST(PatchMatrix, RowsArePositionsColumnsAreChannels) {
    std::mt19937_64 rng(3);
    const auto map = grnr::testing::random_map(rng, 1, 4, 3, 5);
    const auto p = to_patch_matrix(map);
    ASSERT_EQ(p.rows(), 15);
    ASSERT_EQ(p.cols(), 4);
    for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 5; ++w)
            for (int c = 0; c < 4; ++c) EXPECT_EQ(p(h * 5 + w, c), map.at(c, h, w));
}

// ---------------------------------------------------------------------------

TEST(GlobalSupport, TwoByTwoExample) {
    FeatureMap map(1, 1, 2, 2);
    map.data = {0.0f, 0.1f, 0.05f, 10.0f};
    const auto g = sample_global_support(map, 1);
    ASSERT_EQ(g.count(), 1);
    EXPECT_EQ(g.positions[0], (GridPos{0, 1}));
    EXPECT_NEAR(g.rows(0, 0), 0.1, 1e-7);

    const auto all = sample_global_support(map, 4);
    // hand-computed sums over the float32-rounded values
    const auto brute = grnr::testing::brute_global_support(map, 4);
    const std::vector<double> sums{100.0125, 98.0225, 99.0075, 297.0125};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(brute.all_sums[i], sums[i], 1e-5);
    const std::vector<GridPos> order{{0, 1}, {1, 0}, {0, 0}, {1, 1}};
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(all.positions[i], order[i]);
        EXPECT_NEAR(all.distance_sums[i], sums[i == 0 ? 1 : i == 1 ? 2 : i == 2 ? 0 : 3], 1e-5);
    }
}

TEST(GlobalSupport, SymmetricTieSurvivesCancellation) {
    // both positions have the same true sum ||a - b||^2; row-major order must win
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto map = grnr::testing::random_map(rng, 1, 4, 1, 2);
        const auto g = sample_global_support(map, 2);
        EXPECT_EQ(g.positions[0], (GridPos{0, 0}));
        EXPECT_EQ(g.distance_sums[0], g.distance_sums[1]);
    }
}

TEST(GlobalSupport, EqualFeaturesTieBreakRowMajor) {
    FeatureMap map(1, 3, 3, 3);
    std::fill(map.data.begin(), map.data.end(), 0.7f);
    const auto g = sample_global_support(map, 3);
    ASSERT_EQ(g.count(), 3);
    EXPECT_EQ(g.positions[0], (GridPos{0, 0}));
    EXPECT_EQ(g.positions[1], (GridPos{0, 1}));
    EXPECT_EQ(g.positions[2], (GridPos{0, 2}));
    for (double d : g.distance_sums) EXPECT_NEAR(d, 0.0, 1e-9);
}

TEST(GlobalSupport, KLargerThanMapIsClamped) {
    std::mt19937_64 rng(5);
    const auto map = grnr::testing::random_map(rng, 1, 3, 2, 3);
    const auto g = sample_global_support(map, 40);
    EXPECT_EQ(g.count(), 6);
    for (int i = 1; i < 6; ++i) EXPECT_LE(g.distance_sums[i - 1], g.distance_sums[i]);
}

TEST(GlobalSupport, NonPositiveKIsArgumentError) {
    FeatureMap map(1, 1, 2, 2);
    try {
        sample_global_support(map, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Argument);
    }
}

TEST(GlobalSupport, MatchesBruteForceOnRandomMaps) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_int_distribution<int> ch(1, 32);
    for (int trial = 0; trial < 60; ++trial) {
        const int h = dim(rng);
        const int w = std::min(dim(rng), 64 / h);
        const auto map = grnr::testing::random_map(rng, 2, ch(rng), h, w);
        const int k = 1 + trial % (h * w);
        const auto g = sample_global_support(map, k);
        const auto brute = grnr::testing::brute_global_support(map, k);
        ASSERT_EQ(g.positions, brute.positions) << "trial " << trial;
        for (int i = 0; i < g.count(); ++i) {
            EXPECT_NEAR(g.distance_sums[i], brute.distance_sums[i], 1e-4 * std::max(1.0, brute.distance_sums[i]));
            for (int c = 0; c < map.channels; ++c) {
                EXPECT_EQ(g.rows(i, c), map.at(c, g.positions[i].h, g.positions[i].w));
            }
        }
    }
}
