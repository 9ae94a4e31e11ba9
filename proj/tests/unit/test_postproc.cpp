#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "grnr/error.hpp"
#include "grnr/feature.hpp"
#include "grnr/postproc.hpp"
#include "oracles.hpp"

using namespace grnr;
using namespace grnr::postproc;

namespace {

ScoreGrid random_grid(std::mt19937_64& rng, int h, int w) {
    std::uniform_real_distribution<double> u(0.0, 5.0);
    ScoreGrid g(h, w);
    for (auto& v : g.values) v = u(rng);
    return g;
}

double max_abs_diff(const ScoreGrid& a, const ScoreGrid& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    return worst;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Upsample, ConstantIsPreserved) {
    const auto out = upsample_map(ScoreGrid(1, 1, 5.0), 4, 4);
    ASSERT_EQ(out.height, 4);
    ASSERT_EQ(out.width, 4);
    for (double v : out.values) EXPECT_DOUBLE_EQ(v, 5.0);
}

TEST(Upsample, RowRampIsColumnConstantAndMonotone) {
    ScoreGrid g(2, 2);
    g.values = {0, 0, 1, 1};
    const auto out = upsample_map(g, 4, 4);
    // half-pixel centers: source rows sit at 0.5 and 2.5 in target pixels
    const double expected[] = {0.0, 0.25, 0.75, 1.0};
    for (int h = 0; h < 4; ++h) {
        for (int w = 0; w < 4; ++w) EXPECT_DOUBLE_EQ(out.at(h, w), expected[h]);
    }
}

TEST(Upsample, IdentitySize) {
    std::mt19937_64 rng(1);
    const auto g = random_grid(rng, 5, 7);
    EXPECT_EQ(upsample_map(g, 5, 7), g);
}

TEST(Upsample, MatchesOpenCvBilinear) {
    std::mt19937_64 rng(2);
    const auto g = random_grid(rng, 16, 16);
    EXPECT_LT(max_abs_diff(upsample_map(g, 256, 256), grnr::testing::cv_bilinear(g, 256, 256)), 1e-9);
    // OpenCV keeps interpolation coefficients in float32 for non-integer ratios
    const auto h = random_grid(rng, 3, 5);
    EXPECT_LT(max_abs_diff(upsample_map(h, 7, 11), grnr::testing::cv_bilinear(h, 7, 11)), 1e-6);
}

TEST(Upsample, MatchesDoublePrecisionLoop) {
    std::mt19937_64 rng(5);
    const auto g = random_grid(rng, 3, 5);
    const int oh = 7, ow = 11;
    const auto up = upsample_map(g, oh, ow);
    auto src = [&](double y, double x) {
        const double cy = std::clamp(y, 0.0, static_cast<double>(g.height - 1));
        const double cx = std::clamp(x, 0.0, static_cast<double>(g.width - 1));
        const int y0 = static_cast<int>(std::floor(cy)), x0 = static_cast<int>(std::floor(cx));
        const int y1 = std::min(y0 + 1, g.height - 1), x1 = std::min(x0 + 1, g.width - 1);
        const double fy = cy - y0, fx = cx - x0;
        auto at = [&](int r, int c) { return g.values[static_cast<std::size_t>(r) * g.width + c]; };
        return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) + fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
    };
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const double sy = (y + 0.5) * g.height / oh - 0.5;
            const double sx = (x + 0.5) * g.width / ow - 0.5;
            EXPECT_NEAR(up.values[static_cast<std::size_t>(y) * ow + x], src(sy, sx), 1e-12);
        }
    }
}

TEST(Upsample, StaysWithinSourceRange) {
    std::mt19937_64 rng(3);
    const auto g = random_grid(rng, 4, 6);
    const auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
    for (double v : upsample_map(g, 32, 48).values) {
        EXPECT_GE(v, *lo);
        EXPECT_LE(v, *hi);
    }
}

TEST(Upsample, RejectsZeroOrShrinkingTargets) {
    EXPECT_THROW(upsample_map(ScoreGrid(2, 2), 0, 4), Error);
    EXPECT_THROW(upsample_map(ScoreGrid(4, 4), 2, 8), Error);
}

// ---------------------------------------------------------------------------

TEST(Fuse, SingleMapIsItself) {
    std::mt19937_64 rng(4);
    const std::vector<ScoreGrid> maps{random_grid(rng, 3, 3)};
    EXPECT_EQ(fuse_hierarchies(maps), maps[0]);
}

TEST(Fuse, PointwiseProduct) {
    ScoreGrid a(1, 2);
    ScoreGrid b(1, 2);
    a.values = {2, 3};
    b.values = {4, 5};
    const std::vector<ScoreGrid> maps{a, b};
    EXPECT_EQ(fuse_hierarchies(maps).values, (std::vector<double>{8, 15}));
}

TEST(Fuse, ZeroMapAnnihilates) {
    std::mt19937_64 rng(5);
    const std::vector<ScoreGrid> maps{random_grid(rng, 4, 4), ScoreGrid(4, 4, 0.0)};
    for (double v : fuse_hierarchies(maps).values) EXPECT_EQ(v, 0.0);
}

TEST(Fuse, CommutativeAndAssociative) {
    std::mt19937_64 rng(6);
    const auto a = random_grid(rng, 6, 6);
    const auto b = random_grid(rng, 6, 6);
    const auto c = random_grid(rng, 6, 6);
    const std::vector<ScoreGrid> abc{a, b, c};
    const std::vector<ScoreGrid> cab{c, a, b};
    const std::vector<ScoreGrid> ab{a, b};
    const std::vector<ScoreGrid> ab_c{fuse_hierarchies(ab), c};
    const auto x = fuse_hierarchies(abc);
    for (const auto& y : {fuse_hierarchies(cab), fuse_hierarchies(ab_c)}) {
        for (std::size_t i = 0; i < x.values.size(); ++i) EXPECT_NEAR(x.values[i], y.values[i], 1e-12 * x.values[i]);
    }
}

TEST(Fuse, MismatchedOrEmptyIsArgumentError) {
    const std::vector<ScoreGrid> bad{ScoreGrid(2, 2), ScoreGrid(2, 3)};
    EXPECT_THROW(fuse_hierarchies(bad), Error);
    EXPECT_THROW(fuse_hierarchies(std::vector<ScoreGrid>{}), Error);
}

// ---------------------------------------------------------------------------

TEST(Gaussian, KernelIsNormalizedWithRadiusThreeSigma) {
    const auto k = gaussian_kernel(4.0);
    ASSERT_EQ(k.size(), 25u);
    double sum = 0.0;
    for (double v : k) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(k[12] / k[13], std::exp(1.0 / 32.0), 1e-12);
    EXPECT_EQ(gaussian_kernel(0.4).size(), 5u);
}

TEST(Gaussian, ConstantMapUnchanged) {
    const ScoreGrid g(20, 9, 2.5);
    for (double s : {0.5, 4.0, 11.0}) {
        for (double v : gaussian_smooth(g, s).values) EXPECT_NEAR(v, 2.5, 1e-6);
    }
}

TEST(Gaussian, ZeroSigmaIsIdentity) {
    std::mt19937_64 rng(7);
    const auto g = random_grid(rng, 5, 5);
    EXPECT_EQ(gaussian_smooth(g, 0.0), g);
}

TEST(Gaussian, ImpulseGivesKernelPeakAndUnitMass) {
    ScoreGrid g(33, 33, 0.0);
    g.at(16, 16) = 1.0;
    const auto out = gaussian_smooth(g, 4.0);
    const auto k = gaussian_kernel(4.0);
    EXPECT_NEAR(out.at(16, 16), k[12] * k[12], 1e-15);
    double sum = 0.0;
    for (double v : out.values) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST(Gaussian, MatchesOpenCvReflectBorder) {
    std::mt19937_64 rng(8);
    const auto g = random_grid(rng, 40, 30);
    for (double s : {1.0, 4.0}) {
        EXPECT_LT(max_abs_diff(gaussian_smooth(g, s), grnr::testing::cv_gaussian_reflect(g, s)), 1e-9);
    }
}

TEST(Gaussian, NonNegativeInputStaysNonNegative) {
    std::mt19937_64 rng(9);
    auto g = random_grid(rng, 10, 10);
    for (std::size_t i = 0; i < g.values.size(); i += 3) g.values[i] = 0.0;
    for (double v : gaussian_smooth(g, 4.0).values) EXPECT_GE(v, 0.0);
}

// ---------------------------------------------------------------------------

TEST(Finalize, IdentityComposition) {
    std::mt19937_64 rng(10);
    core::HierarchyScoreMap m{2, random_grid(rng, 8, 8)};
    const std::vector<core::HierarchyScoreMap> maps{m};
    const auto a = finalize(maps, 8, 8, 0.0);
    EXPECT_EQ(a.scores, m.scores);
    EXPECT_EQ(a.image_score, *std::max_element(m.scores.values.begin(), m.scores.values.end()));
}

TEST(Finalize, ConstantsMultiply) {
    const std::vector<core::HierarchyScoreMap> maps{{2, ScoreGrid(4, 4, 1.5)}, {3, ScoreGrid(2, 2, 3.0)}};
    const auto a = finalize(maps, 16, 16, 4.0);
    for (double v : a.scores.values) EXPECT_NEAR(v, 4.5, 1e-9);
    EXPECT_NEAR(a.image_score, 4.5, 1e-9);
}

TEST(Finalize, ImageScoreIsExactMax) {
    std::mt19937_64 rng(11);
    const std::vector<core::HierarchyScoreMap> maps{{2, random_grid(rng, 8, 8)}, {3, random_grid(rng, 4, 4)}};
    const auto a = finalize(maps, 32, 32, 2.0);
    EXPECT_EQ(a.image_score, *std::max_element(a.scores.values.begin(), a.scores.values.end()));
}

TEST(Finalize, MonotoneInEachHierarchy) {
    std::mt19937_64 rng(12);
    std::vector<core::HierarchyScoreMap> maps{{2, random_grid(rng, 8, 8)}, {3, random_grid(rng, 4, 4)}};
    const auto before = finalize(maps, 32, 32, 0.0);
    for (auto& v : maps[1].scores.values) v += 0.5;
    const auto after = finalize(maps, 32, 32, 0.0);
    for (std::size_t i = 0; i < before.scores.values.size(); ++i) {
        EXPECT_GE(after.scores.values[i], before.scores.values[i]);
    }
}

TEST(Finalize, OutlierStandsOutAgainstMedian) {
    ScoreGrid coarse(16, 16, 0.01);
    coarse.at(7, 9) = 5.0;
    ScoreGrid finer(32, 32, 0.02);
    finer.at(15, 18) = 4.0;
    const std::vector<core::HierarchyScoreMap> maps{{2, finer}, {3, coarse}};
    const auto a = finalize(maps, 256, 256, 4.0);
    auto sorted = a.scores.values;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    EXPECT_GT(a.image_score, 10.0 * sorted[sorted.size() / 2]);
}

// ---------------------------------------------------------------------------

TEST(Heatmap, JetEndpoints) {
    EXPECT_EQ(jet_color(0.0), (std::array<std::uint8_t, 3>{0, 0, 128}));
    EXPECT_EQ(jet_color(1.0), (std::array<std::uint8_t, 3>{128, 0, 0}));
    EXPECT_EQ(jet_color(0.5), (std::array<std::uint8_t, 3>{128, 255, 128}));
}

TEST(Heatmap, ConstantMapIsSingleColor) {
    AnomalyMap m{ScoreGrid(5, 5, 3.0), 3.0};
    const auto rgb = heatmap_rgb(m);
    ASSERT_EQ(rgb.size(), 75u);
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        EXPECT_EQ(rgb[i], rgb[0]);
        EXPECT_EQ(rgb[i + 1], rgb[1]);
        EXPECT_EQ(rgb[i + 2], rgb[2]);
    }
}

TEST(Heatmap, TwoValuesMapToRampEnds) {
    AnomalyMap m{ScoreGrid(1, 2), 1.0};
    m.scores.values = {0.0, 1.0};
    const auto rgb = heatmap_rgb(m);
    const auto lo = jet_color(0.0);
    const auto hi = jet_color(1.0);
    EXPECT_TRUE(std::equal(lo.begin(), lo.end(), rgb.begin()));
    EXPECT_TRUE(std::equal(hi.begin(), hi.end(), rgb.begin() + 3));
}

TEST(Heatmap, PngIsDeterministicAndDecodes) {
    std::mt19937_64 rng(13);
    AnomalyMap m{random_grid(rng, 24, 40), 0.0};
    const auto dir = grnr::testing::scratch_dir("heatmap_png");
    render_heatmap(m, dir / "a.png");
    render_heatmap(m, dir / "b.png");
    EXPECT_EQ(file_bytes(dir / "a.png"), file_bytes(dir / "b.png"));
    const cv::Mat img = cv::imread((dir / "a.png").string(), cv::IMREAD_UNCHANGED);
    ASSERT_FALSE(img.empty());
    EXPECT_EQ(img.rows, 24);
    EXPECT_EQ(img.cols, 40);
    EXPECT_EQ(img.type(), CV_8UC3);
    const auto rgb = heatmap_rgb(m);
    const auto px = img.at<cv::Vec3b>(3, 5);  // BGR
    EXPECT_EQ(px[2], rgb[(3 * 40 + 5) * 3 + 0]);
    EXPECT_EQ(px[0], rgb[(3 * 40 + 5) * 3 + 2]);
}

TEST(Heatmap, UnwritablePathIsIoError) {
    AnomalyMap m{ScoreGrid(2, 2, 1.0), 1.0};
    try {
        render_heatmap(m, "/nonexistent/dir/a.png");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}

TEST(RawMap, DumpsAsSingleChannelFmap) {
    std::mt19937_64 rng(14);
    AnomalyMap m{random_grid(rng, 6, 4), 0.0};
    const auto dir = grnr::testing::scratch_dir("raw_map");
    save_anomaly_map(m, dir / "m.fmap");
    const auto s = feature::load_feature_stack(dir / "m.fmap");
    ASSERT_EQ(s.maps.size(), 1u);
    EXPECT_EQ(s.maps[0].level, 0);
    EXPECT_EQ(s.maps[0].channels, 1);
    EXPECT_EQ(s.maps[0].height, 6);
    EXPECT_EQ(s.maps[0].width, 4);
    EXPECT_FLOAT_EQ(s.maps[0].at(0, 2, 3), static_cast<float>(m.scores.at(2, 3)));
}
