#include "grnr/feature.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#include <opencv2/imgcodecs.hpp>

#include "grnr/error.hpp"

namespace grnr::feature {

void PreprocessConfig::validate() const {
    if (resize < 1 || crop < 1) {
        fail(ErrorKind::Config, "resize and crop must be >= 1");
    }
    if (crop > resize) {
        fail(ErrorKind::Config, "crop (" + std::to_string(crop) + ") exceeds resize (" +
                                    std::to_string(resize) + ")");
    }
    for (double s : std) {
        if (!(s > 0.0)) fail(ErrorKind::Config, "normalization std must be > 0");
    }
}

RgbImage decode_image(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        fail(ErrorKind::Io, "cannot read image " + path.string());
    }
    cv::Mat bgr;
    try {
        bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        fail(ErrorKind::Input, "cannot decode image " + path.string() + ": " + e.what());
    }
    if (bgr.empty()) fail(ErrorKind::Input, "cannot decode image " + path.string());

    RgbImage out;
    out.height = bgr.rows;
    out.width = bgr.cols;
    out.pixels.resize(static_cast<std::size_t>(out.height) * out.width * 3);
    for (int h = 0; h < out.height; ++h) {
        const auto* row = bgr.ptr<cv::Vec3b>(h);
        for (int w = 0; w < out.width; ++w) {
            auto* px = &out.pixels[(static_cast<std::size_t>(h) * out.width + w) * 3];
            px[0] = row[w][2];
            px[1] = row[w][1];
            px[2] = row[w][0];
        }
    }
    return out;
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

std::vector<Tap> bilinear_taps(int src, int dst) {
    std::vector<Tap> taps(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        double x = (i + 0.5) * scale - 0.5;
        x = std::clamp(x, 0.0, static_cast<double>(src - 1));
        const int lo = static_cast<int>(std::floor(x));
        const int hi = std::min(lo + 1, src - 1);
        taps[static_cast<std::size_t>(i)] = {lo, hi, x - lo};
    }
    return taps;
}

}  // namespace

std::vector<double> resize_bilinear(std::span<const double> src, int src_h, int src_w,
                                    int dst_h, int dst_w) {
    if (src_h < 1 || src_w < 1 || dst_h < 1 || dst_w < 1) {
        fail(ErrorKind::Argument, "bilinear resize needs positive dimensions");
    }
    if (src.size() != static_cast<std::size_t>(src_h) * src_w) {
        fail(ErrorKind::Argument, "bilinear resize: buffer size does not match dimensions");
    }
    const auto ty = bilinear_taps(src_h, dst_h);
    const auto tx = bilinear_taps(src_w, dst_w);
    std::vector<double> out(static_cast<std::size_t>(dst_h) * dst_w);
    for (int y = 0; y < dst_h; ++y) {
        const auto& [y0, y1, fy] = ty[static_cast<std::size_t>(y)];
        const double* r0 = src.data() + static_cast<std::size_t>(y0) * src_w;
        const double* r1 = src.data() + static_cast<std::size_t>(y1) * src_w;
        for (int x = 0; x < dst_w; ++x) {
            const auto& [x0, x1, fx] = tx[static_cast<std::size_t>(x)];
            const double top = r0[x0] + (r0[x1] - r0[x0]) * fx;
            const double bottom = r1[x0] + (r1[x1] - r1[x0]) * fx;
            out[static_cast<std::size_t>(y) * dst_w + x] = top + (bottom - top) * fy;
        }
    }
    return out;
}

int crop_offset(const PreprocessConfig& config) { return (config.resize - config.crop) / 2; }

ImageTensor preprocess_image(const RgbImage& raw, const PreprocessConfig& config) {
    config.validate();
    if (raw.height < 1 || raw.width < 1 ||
        raw.pixels.size() != static_cast<std::size_t>(raw.height) * raw.width * 3) {
        fail(ErrorKind::Input, "image has no pixels or an inconsistent buffer");
    }
    const int crop = config.crop;
    const int off = crop_offset(config);

    ImageTensor out;
    out.height = crop;
    out.width = crop;
    out.data.resize(static_cast<std::size_t>(3) * crop * crop);

    std::vector<double> plane(static_cast<std::size_t>(raw.height) * raw.width);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = raw.pixels[i * 3 + c];
        const bool same = raw.height == config.resize && raw.width == config.resize;
        const auto resized =
            same ? plane : resize_bilinear(plane, raw.height, raw.width, config.resize, config.resize);
        const double mean = config.mean[static_cast<std::size_t>(c)];
        const double stdv = config.std[static_cast<std::size_t>(c)];
        for (int h = 0; h < crop; ++h) {
            for (int w = 0; w < crop; ++w) {
                const double v =
                    resized[static_cast<std::size_t>(h + off) * config.resize + (w + off)];
                out.data[(static_cast<std::size_t>(c) * crop + h) * crop + w] =
                    static_cast<float>((v / 255.0 - mean) / stdv);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

struct OnnxBackbone::Impl {
    cv::dnn::Net net;
};

OnnxBackbone::OnnxBackbone(BackboneHandle handle) : handle_(std::move(handle)) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(handle_.model_path, ec)) {
        fail(ErrorKind::Io, "model file not found: " + handle_.model_path.string());
    }
    impl_ = std::make_unique<Impl>();
    try {
        impl_->net = cv::dnn::readNetFromONNX(handle_.model_path.string());
    } catch (const cv::Exception& e) {
        fail(ErrorKind::Backend, "failed to load model " + handle_.model_path.string() + ": " + e.what());
    }
    if (impl_->net.empty()) {
        fail(ErrorKind::Backend, "model " + handle_.model_path.string() + " produced an empty network");
    }
    impl_->net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    impl_->net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
}

OnnxBackbone::~OnnxBackbone() = default;

std::vector<std::string> OnnxBackbone::available_outputs() const {
    std::vector<std::string> names;
    for (const auto& n : impl_->net.getLayerNames()) names.emplace_back(n);
    return names;
}

FeatureStack OnnxBackbone::extract(const ImageTensor& image, std::span<const int> hierarchy_ids) {
    std::vector<std::string> names;
    if (handle_.output_names.empty()) {
        for (int id : hierarchy_ids) names.push_back("layer" + std::to_string(id));
    } else {
        if (handle_.output_names.size() != hierarchy_ids.size()) {
            fail(ErrorKind::Config, "backbone declares " + std::to_string(handle_.output_names.size()) +
                                        " output names for " + std::to_string(hierarchy_ids.size()) +
                                        " hierarchies");
        }
        names = handle_.output_names;
    }
    const auto available = available_outputs();
    for (const auto& n : names) {
        if (std::find(available.begin(), available.end(), n) == available.end()) {
            fail(ErrorKind::Config, "model " + handle_.model_path.string() + " has no output named '" + n + "'");
        }
    }

    const int dims[] = {1, 3, image.height, image.width};
    cv::Mat blob(4, dims, CV_32F, const_cast<float*>(image.data.data()));
    std::vector<cv::Mat> outs;
    {
        std::lock_guard lock(mutex_);
        try {
            impl_->net.setInput(blob);
            std::vector<cv::String> cv_names(names.begin(), names.end());
            impl_->net.forward(outs, cv_names);
        } catch (const cv::Exception& e) {
            fail(ErrorKind::Backend, std::string("inference failed: ") + e.what());
        }
    }

    FeatureStack stack;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        const cv::Mat& o = outs[i];
        if (o.dims != 4 || o.size[0] != 1 || o.type() != CV_32F) {
            fail(ErrorKind::Backend, "output '" + names[i] + "' is not a 1xCxHxW float tensor");
        }
        FeatureMap map(hierarchy_ids[i], o.size[1], o.size[2], o.size[3]);
        const cv::Mat cont = o.isContinuous() ? o : o.clone();
        std::copy_n(cont.ptr<float>(), map.data.size(), map.data.begin());
        stack.maps.push_back(std::move(map));
    }
    return stack;
}

FeatureStack extract_features(const ImageTensor& image, Backbone& backbone,
                              std::span<const int> hierarchy_ids) {
    if (hierarchy_ids.empty()) fail(ErrorKind::Config, "at least one hierarchy id is required");
    for (std::size_t i = 1; i < hierarchy_ids.size(); ++i) {
        if (hierarchy_ids[i] <= hierarchy_ids[i - 1]) {
            fail(ErrorKind::Config, "hierarchy ids must be strictly increasing");
        }
    }
    auto stack = backbone.extract(image, hierarchy_ids);
    if (stack.hierarchy_ids() != std::vector<int>(hierarchy_ids.begin(), hierarchy_ids.end())) {
        fail(ErrorKind::Backend, "backbone returned hierarchies that differ from the request");
    }
    try {
        stack.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Backend, std::string("backbone output rejected: ") + e.what());
    }
    return stack;
}

// ---------------------------------------------------------------------------

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_feature_stack(const FeatureStack& stack) {
    if (stack.maps.empty()) fail(ErrorKind::Format, ".fmap requires at least one hierarchy");
    std::size_t total = kFmapMagic.size() + 4;
    for (const auto& m : stack.maps) {
        if (m.channels < 1 || m.height < 1 || m.width < 1 ||
            m.data.size() != static_cast<std::size_t>(m.channels) * m.height * m.width) {
            fail(ErrorKind::Format, "feature map level " + std::to_string(m.level) +
                                        " has inconsistent dimensions");
        }
        total += 16 + m.data.size() * 4;
    }
    for (std::size_t i = 1; i < stack.maps.size(); ++i) {
        if (stack.maps[i].level <= stack.maps[i - 1].level) {
            fail(ErrorKind::Format, ".fmap hierarchy ids must be strictly increasing");
        }
    }
    std::vector<std::uint8_t> out;
    out.reserve(total);
    out.insert(out.end(), kFmapMagic.begin(), kFmapMagic.end());
    put_u32(out, static_cast<std::uint32_t>(stack.maps.size()));
    for (const auto& m : stack.maps) {
        put_u32(out, static_cast<std::uint32_t>(m.level));
        put_u32(out, static_cast<std::uint32_t>(m.channels));
        put_u32(out, static_cast<std::uint32_t>(m.height));
        put_u32(out, static_cast<std::uint32_t>(m.width));
        for (float v : m.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

FeatureStack decode_feature_stack(std::span<const std::uint8_t> bytes) {
    const std::size_t header = kFmapMagic.size() + 4;
    if (bytes.size() < kFmapMagic.size() ||
        !std::equal(kFmapMagic.begin(), kFmapMagic.end(), bytes.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
        fail(ErrorKind::Format, "bad .fmap magic (expected GRNRFMP1)");
    }
    if (bytes.size() < header) {
        fail(ErrorKind::Format, "truncated .fmap header: expected " + std::to_string(header) +
                                    " bytes, got " + std::to_string(bytes.size()));
    }
    const std::uint32_t count = get_u32(bytes, kFmapMagic.size());
    if (count < 1) fail(ErrorKind::Format, ".fmap declares zero hierarchies");

    FeatureStack stack;
    std::size_t at = header;
    for (std::uint32_t k = 0; k < count; ++k) {
        if (bytes.size() < at + 16) {
            fail(ErrorKind::Format, "truncated .fmap: expected at least " + std::to_string(at + 16) +
                                        " bytes, got " + std::to_string(bytes.size()));
        }
        const auto level = get_u32(bytes, at);
        const auto c = get_u32(bytes, at + 4);
        const auto h = get_u32(bytes, at + 8);
        const auto w = get_u32(bytes, at + 12);
        at += 16;
        if (c == 0 || h == 0 || w == 0) {
            fail(ErrorKind::Format, ".fmap hierarchy " + std::to_string(level) + " has a zero dimension");
        }
        const std::uint64_t n = std::uint64_t{c} * h * w;
        const std::uint64_t need = at + n * 4;
        if (bytes.size() < need) {
            fail(ErrorKind::Format, "truncated .fmap payload: expected " + std::to_string(need) +
                                        " bytes, got " + std::to_string(bytes.size()));
        }
        if (!stack.maps.empty() && static_cast<int>(level) <= stack.maps.back().level) {
            fail(ErrorKind::Format, ".fmap hierarchy " + std::to_string(level) +
                                        " does not follow " + std::to_string(stack.maps.back().level));
        }
        FeatureMap map(static_cast<int>(level), static_cast<int>(c), static_cast<int>(h),
                       static_cast<int>(w));
        for (std::size_t i = 0; i < map.data.size(); ++i) {
            map.data[i] = std::bit_cast<float>(get_u32(bytes, at + i * 4));
        }
        at += static_cast<std::size_t>(n) * 4;
        stack.maps.push_back(std::move(map));
    }
    if (at != bytes.size()) {
        fail(ErrorKind::Format, ".fmap has " + std::to_string(bytes.size() - at) + " trailing bytes");
    }
    return stack;
}

void save_feature_stack(const FeatureStack& stack, const std::filesystem::path& path) {
    const auto bytes = encode_feature_stack(stack);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

FeatureStack load_feature_stack(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return decode_feature_stack(bytes);
    } catch (const Error& e) {
        fail(e.kind(), path.string() + ": " + e.what());
    }
}

}  // namespace grnr::feature
