#include "grnr/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "grnr/error.hpp"
#include "grnr/feature.hpp"

namespace grnr::postproc {

ScoreGrid upsample_map(const ScoreGrid& map, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1) fail(ErrorKind::Argument, "upsample target must be >= 1x1");
    if (map.height < 1 || map.width < 1) fail(ErrorKind::Argument, "cannot upsample an empty map");
    if (target_h < map.height || target_w < map.width) {
        fail(ErrorKind::Argument, "upsample target smaller than the source map");
    }
    if (target_h == map.height && target_w == map.width) return map;
    ScoreGrid out(target_h, target_w);
    out.values = feature::resize_bilinear(map.values, map.height, map.width, target_h, target_w);
    return out;
}

ScoreGrid fuse_hierarchies(std::span<const ScoreGrid> maps) {
    if (maps.empty()) fail(ErrorKind::Argument, "fusion needs at least one map");
    ScoreGrid out = maps.front();
    for (const auto& m : maps.subspan(1)) {
        if (m.height != out.height || m.width != out.width) {
            fail(ErrorKind::Argument, "fusion requires identical map dimensions");
        }
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= m.values[i];
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

namespace {

// Half-sample symmetric reflection, folded repeatedly for long kernels.
int reflect(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

}  // namespace

ScoreGrid gaussian_smooth(const ScoreGrid& map, double sigma) {
    if (!(sigma > 0.0)) return map;
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int hgt = map.height;
    const int wid = map.width;

    ScoreGrid tmp(hgt, wid);
    for (int h = 0; h < hgt; ++h) {
        for (int w = 0; w < wid; ++w) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                acc += kernel[static_cast<std::size_t>(t + radius)] * map.at(h, reflect(w + t, wid));
            }
            tmp.at(h, w) = acc;
        }
    }
    ScoreGrid out(hgt, wid);
    for (int h = 0; h < hgt; ++h) {
        for (int w = 0; w < wid; ++w) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                acc += kernel[static_cast<std::size_t>(t + radius)] * tmp.at(reflect(h + t, hgt), w);
            }
            out.at(h, w) = acc;
        }
    }
    return out;
}

AnomalyMap finalize(std::span<const core::HierarchyScoreMap> maps, int image_h, int image_w,
                    double sigma) {
    if (maps.empty()) fail(ErrorKind::Argument, "finalize needs at least one hierarchy map");
    if (!(sigma >= 0.0)) fail(ErrorKind::Argument, "sigma must be >= 0");
    std::vector<ScoreGrid> up;
    up.reserve(maps.size());
    for (const auto& m : maps) up.push_back(upsample_map(m.scores, image_h, image_w));
    AnomalyMap out;
    out.scores = gaussian_smooth(fuse_hierarchies(up), sigma);
    out.image_score = *std::max_element(out.scores.values.begin(), out.scores.values.end());
    return out;
}

std::array<std::uint8_t, 3> jet_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    auto channel = [](double x) {
        const double v = std::clamp(1.5 - std::abs(4.0 * x), 0.0, 1.0);
        return static_cast<std::uint8_t>(std::lround(v * 255.0));
    };
    // Red peaks at t = 0.75, green at 0.5, blue at 0.25.
    return {channel(t - 0.75), channel(t - 0.5), channel(t - 0.25)};
}

std::vector<std::uint8_t> heatmap_rgb(const AnomalyMap& map) {
    const auto& v = map.scores.values;
    std::vector<std::uint8_t> rgb(v.size() * 3);
    if (v.empty()) return rgb;
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double t = range > 0.0 ? (v[i] - lo) / range : 0.0;
        const auto c = jet_color(t);
        std::copy(c.begin(), c.end(), rgb.begin() + static_cast<std::ptrdiff_t>(i * 3));
    }
    return rgb;
}

void render_heatmap(const AnomalyMap& map, const std::filesystem::path& out_path) {
    const auto rgb = heatmap_rgb(map);
    cv::Mat bgr(map.scores.height, map.scores.width, CV_8UC3);
    for (int h = 0; h < bgr.rows; ++h) {
        auto* row = bgr.ptr<cv::Vec3b>(h);
        for (int w = 0; w < bgr.cols; ++w) {
            const auto* px = &rgb[(static_cast<std::size_t>(h) * bgr.cols + w) * 3];
            row[w] = cv::Vec3b(px[2], px[1], px[0]);
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(out_path.string(), bgr, {cv::IMWRITE_PNG_COMPRESSION, 6});
    } catch (const cv::Exception& e) {
        fail(ErrorKind::Io, "cannot write heatmap " + out_path.string() + ": " + e.what());
    }
    if (!ok) fail(ErrorKind::Io, "cannot write heatmap " + out_path.string());
}

void save_anomaly_map(const AnomalyMap& map, const std::filesystem::path& out_path) {
    FeatureStack stack;
    FeatureMap fm(0, 1, map.scores.height, map.scores.width);
    for (std::size_t i = 0; i < fm.data.size(); ++i) fm.data[i] = static_cast<float>(map.scores.values[i]);
    stack.maps.push_back(std::move(fm));
    feature::save_feature_stack(stack, out_path);
}

}  // namespace grnr::postproc
