#include "grnr/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "grnr/error.hpp"

namespace fs = std::filesystem;

namespace grnr::synthetic {

namespace {

// Distribution helpers built on raw engine output so streams are identical
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }
    double normal() {
        const double u1 = std::max(uniform(), 1e-300);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png(const fs::path& path, const cv::Mat& mat) {
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat);
    } catch (const cv::Exception& e) {
        fail(ErrorKind::Io, "cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) fail(ErrorKind::Io, "cannot write " + path.string());
}

}  // namespace

std::string to_string(TextureKind kind) {
    return kind == TextureKind::Sinusoid ? "sinusoid" : "checker";
}

TextureSample make_texture(const TextureSpec& spec) {
    if (spec.size < 1 || !(spec.period > 0.0)) fail(ErrorKind::Argument, "bad texture spec");
    Rng rng(spec.seed);
    const int n = spec.size;

    std::array<double, 3> tint{};
    for (auto& t : tint) t = rng.uniform(0.6, 1.0);
    const double base = rng.uniform(0.25, 0.4);
    const double amp = rng.uniform(0.3, 0.45);
    const double cos_o = std::cos(spec.orientation);
    const double sin_o = std::sin(spec.orientation);

    TextureSample out;
    out.image.height = n;
    out.image.width = n;
    out.image.pixels.resize(static_cast<std::size_t>(n) * n * 3);
    out.mask.assign(static_cast<std::size_t>(n) * n, 0);

    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double pattern = 0.0;
            if (spec.kind == TextureKind::Sinusoid) {
                const double u = x * cos_o + y * sin_o;
                pattern = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * u / spec.period);
            } else {
                const int cx = static_cast<int>(std::floor(x / spec.period));
                const int cy = static_cast<int>(std::floor(y / spec.period));
                pattern = ((cx + cy) % 2 == 0) ? 1.0 : 0.0;
            }
            for (int c = 0; c < 3; ++c) {
                const double v = tint[static_cast<std::size_t>(c)] * (base + amp * pattern) +
                                 rng.uniform(-spec.noise, spec.noise);
                out.image.pixels[(static_cast<std::size_t>(y) * n + x) * 3 + c] = to_byte(v);
            }
        }
    }

    if (spec.blotch) {
        const int s = spec.blotch_size;
        const auto [oy, ox] = spec.blotch_origin;
        if (s < 1 || oy < 0 || ox < 0 || oy + s > n || ox + s > n) {
            fail(ErrorKind::Argument, "blotch does not fit inside the texture");
        }
        // Separate stream so the background is identical with and without the blotch.
        Rng blotch_rng(mix(spec.seed, 0xB10C));
        for (int y = oy; y < oy + s; ++y) {
            for (int x = ox; x < ox + s; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const double v = blotch_rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0;
                    out.image.pixels[(static_cast<std::size_t>(y) * n + x) * 3 + c] = to_byte(v);
                }
                out.mask[static_cast<std::size_t>(y) * n + x] = 1;
            }
        }
    }
    return out;
}

TextureSpec suite_spec(std::uint64_t suite_seed, int index, bool with_blotch, int size) {
    Rng rng(mix(suite_seed, static_cast<std::uint64_t>(index)));
    TextureSpec spec;
    spec.size = size;
    spec.kind = index % 2 == 0 ? TextureKind::Sinusoid : TextureKind::Checker;
    const double sin_period = rng.uniform(6.0, 20.0);
    const int cell_quads = rng.integer(1, 2);
    // Checker cells of 4 or 8 px keep the pattern commensurate with the feature grid.
    spec.period = spec.kind == TextureKind::Sinusoid ? sin_period : 4.0 * cell_quads;
    spec.orientation = rng.uniform(0.0, std::numbers::pi);
    spec.seed = mix(suite_seed ^ 0x7E57, static_cast<std::uint64_t>(index));
    spec.blotch = with_blotch;
    const int margin = 32;
    const int hi = std::max(margin, size - margin - spec.blotch_size);
    spec.blotch_origin = {rng.integer(margin, hi), rng.integer(margin, hi)};
    return spec;
}

std::vector<std::string> write_suite(const fs::path& root, std::uint64_t suite_seed, int count, int size) {
    if (count < 1) fail(ErrorKind::Argument, "suite needs at least one texture");
    std::vector<std::string> categories;
    for (int i = 0; i < count; ++i) {
        for (bool defect : {false, true}) {
            const auto spec = suite_spec(suite_seed, i, defect, size);
            const auto sample = make_texture(spec);
            const std::string category = to_string(spec.kind);
            if (std::find(categories.begin(), categories.end(), category) == categories.end()) {
                categories.push_back(category);
            }
            char stem[16];
            std::snprintf(stem, sizeof(stem), "%03d", i);
            const fs::path dir = root / category / "test" / (defect ? "blotch" : "good");
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec) fail(ErrorKind::Io, "cannot create " + dir.string());

            cv::Mat bgr(size, size, CV_8UC3);
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) {
                    bgr.at<cv::Vec3b>(y, x) = cv::Vec3b(sample.image.at(y, x, 2), sample.image.at(y, x, 1),
                                                        sample.image.at(y, x, 0));
                }
            }
            write_png(dir / (std::string(stem) + ".png"), bgr);
            if (defect) {
                const fs::path gt = root / category / "ground_truth" / "blotch";
                fs::create_directories(gt, ec);
                if (ec) fail(ErrorKind::Io, "cannot create " + gt.string());
                cv::Mat mask(size, size, CV_8UC1);
                for (int y = 0; y < size; ++y) {
                    for (int x = 0; x < size; ++x) {
                        mask.at<std::uint8_t>(y, x) =
                            sample.mask[static_cast<std::size_t>(y) * size + x] ? 255 : 0;
                    }
                }
                write_png(gt / (std::string(stem) + "_mask.png"), mask);
            }
        }
    }
    std::sort(categories.begin(), categories.end());
    return categories;
}

FeatureStack random_stack(std::uint64_t seed, std::span<const MapShape> shapes) {
    FeatureStack stack;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& s = shapes[i];
        if (s.channels < 1 || s.height < 1 || s.width < 1) {
            fail(ErrorKind::Argument, "random stack: map dimensions must be >= 1");
        }
        Rng rng(mix(seed, 0x5EED + i));
        FeatureMap map(s.level, s.channels, s.height, s.width);
        for (auto& v : map.data) v = static_cast<float>(std::abs(rng.normal()));
        stack.maps.push_back(std::move(map));
    }
    stack.validate();
    return stack;
}

// ---------------------------------------------------------------------------

RandomConvBackbone::RandomConvBackbone(std::uint64_t seed, std::vector<int> channels) {
    if (channels.empty()) fail(ErrorKind::Config, "random backbone needs at least one stage");
    Rng rng(mix(seed, 0xC0DE));
    int in = 3;
    for (int out : channels) {
        if (out < 1) fail(ErrorKind::Config, "random backbone stage width must be >= 1");
        Stage s;
        s.in = in;
        s.out = out;
        s.weights.resize(static_cast<std::size_t>(out) * in * 9);
        s.bias.resize(static_cast<std::size_t>(out));
        const double scale = std::sqrt(2.0 / (in * 9));
        for (auto& w : s.weights) w = static_cast<float>(scale * rng.normal());
        for (auto& b : s.bias) b = static_cast<float>(0.05 * rng.normal());
        stages_.push_back(std::move(s));
        in = out;
    }
}

int RandomConvBackbone::stride_of(int level) { return level <= 1 ? 4 : 4 << (level - 1); }

namespace {

// 3x3 same-size convolution with mirror padding, then ReLU; planar [C][H][W].
std::vector<float> conv_relu(const std::vector<float>& src, int in, int h, int w, int out,
                             const std::vector<float>& weights, const std::vector<float>& bias) {
    const int ph = h + 2;
    const int pw = w + 2;
    auto mirror = [](int i, int n) { return i < 0 ? std::min(1, n - 1) : (i >= n ? std::max(n - 2, 0) : i); };
    std::vector<float> padded(static_cast<std::size_t>(in) * ph * pw);
    for (int i = 0; i < in; ++i) {
        for (int y = 0; y < ph; ++y) {
            const int sy = mirror(y - 1, h);
            for (int x = 0; x < pw; ++x) {
                padded[(static_cast<std::size_t>(i) * ph + y) * pw + x] =
                    src[(static_cast<std::size_t>(i) * h + sy) * w + mirror(x - 1, w)];
            }
        }
    }
    std::vector<float> dst(static_cast<std::size_t>(out) * h * w);
    for (int o = 0; o < out; ++o) {
        float* plane = dst.data() + static_cast<std::size_t>(o) * h * w;
        std::fill(plane, plane + static_cast<std::size_t>(h) * w, bias[static_cast<std::size_t>(o)]);
        for (int i = 0; i < in; ++i) {
            const float* sp = padded.data() + static_cast<std::size_t>(i) * ph * pw;
            const float* k = weights.data() + (static_cast<std::size_t>(o) * in + i) * 9;
            for (int dy = 0; dy < 3; ++dy) {
                for (int dx = 0; dx < 3; ++dx) {
                    const float kv = k[dy * 3 + dx];
                    for (int y = 0; y < h; ++y) {
                        const float* srow = sp + static_cast<std::size_t>(y + dy) * pw + dx;
                        float* drow = plane + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) drow[x] += kv * srow[x];
                    }
                }
            }
        }
        for (std::size_t p = 0; p < static_cast<std::size_t>(h) * w; ++p) plane[p] = std::max(plane[p], 0.0f);
    }
    return dst;
}

std::vector<float> avg_pool(const std::vector<float>& src, int c, int h, int w, int k) {
    const int oh = h / k;
    const int ow = w / k;
    std::vector<float> dst(static_cast<std::size_t>(c) * oh * ow);
    const float inv = 1.0f / static_cast<float>(k * k);
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                float acc = 0.0f;
                for (int dy = 0; dy < k; ++dy) {
                    for (int dx = 0; dx < k; ++dx) {
                        acc += src[(static_cast<std::size_t>(ch) * h + y * k + dy) * w + x * k + dx];
                    }
                }
                dst[(static_cast<std::size_t>(ch) * oh + y) * ow + x] = acc * inv;
            }
        }
    }
    return dst;
}

// 3x3 stride-1 box average with edge replication (local patch aggregation).
std::vector<float> box3(const std::vector<float>& src, int c, int h, int w) {
    std::vector<float> dst(src.size());
    for (int ch = 0; ch < c; ++ch) {
        const float* sp = src.data() + static_cast<std::size_t>(ch) * h * w;
        float* dp = dst.data() + static_cast<std::size_t>(ch) * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    for (int dx = -1; dx <= 1; ++dx) {
                        acc += sp[static_cast<std::size_t>(yy) * w + std::clamp(x + dx, 0, w - 1)];
                    }
                }
                dp[static_cast<std::size_t>(y) * w + x] = acc / 9.0f;
            }
        }
    }
    return dst;
}

}  // namespace

FeatureStack RandomConvBackbone::extract(const ImageTensor& image, std::span<const int> hierarchy_ids) {
    if (hierarchy_ids.empty()) fail(ErrorKind::Config, "no hierarchy requested");
    for (int id : hierarchy_ids) {
        if (id < 1 || id > static_cast<int>(stages_.size())) {
            fail(ErrorKind::Config, "random backbone has no hierarchy " + std::to_string(id));
        }
    }
    FeatureStack stack;
    std::vector<float> x = image.data;
    int h = image.height;
    int w = image.width;
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        const int level = static_cast<int>(s) + 1;
        if (std::find(hierarchy_ids.begin(), hierarchy_ids.end(), level) == hierarchy_ids.end() &&
            level > *std::max_element(hierarchy_ids.begin(), hierarchy_ids.end())) {
            break;
        }
        const auto& st = stages_[s];
        x = conv_relu(x, st.in, h, w, st.out, st.weights, st.bias);
        const int k = s == 0 ? 4 : 2;
        x = avg_pool(x, st.out, h, w, k);
        h /= k;
        w /= k;
        if (h < 1 || w < 1) fail(ErrorKind::Config, "input too small for the random backbone");
        if (std::find(hierarchy_ids.begin(), hierarchy_ids.end(), level) != hierarchy_ids.end()) {
            FeatureMap map(level, st.out, h, w);
            map.data = box3(x, st.out, h, w);
            stack.maps.push_back(std::move(map));
        }
    }
    return stack;
}

}  // namespace grnr::synthetic
