#include <algorithm>
#include <cctype>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "grnr/error.hpp"
#include "grnr/eval.hpp"

namespace fs = std::filesystem;

namespace grnr::eval {

namespace {

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" ||
           ext == ".tiff";
}

std::vector<fs::directory_entry> sorted_entries(const fs::path& dir) {
    std::vector<fs::directory_entry> out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e);
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });
    return out;
}

}  // namespace

std::vector<std::string> list_categories(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) fail(ErrorKind::Dataset, "dataset root not found: " + root.string());
    std::vector<std::string> out;
    for (const auto& e : sorted_entries(root)) {
        if (e.is_directory() && fs::is_directory(e.path() / "test", ec)) {
            out.push_back(e.path().filename().string());
        }
    }
    return out;
}

DatasetIndex load_mvtec_layout(const fs::path& root, const std::string& category) {
    const fs::path test_dir = root / category / "test";
    const fs::path gt_dir = root / category / "ground_truth";
    std::error_code ec;
    if (!fs::is_directory(test_dir, ec)) {
        fail(ErrorKind::Dataset, "missing test directory " + test_dir.string());
    }

    DatasetIndex index;
    index.category = category;
    for (const auto& defect : sorted_entries(test_dir)) {
        if (!defect.is_directory()) {
            ++index.ignored_entries;
            continue;
        }
        const std::string label = defect.path().filename().string();
        const bool good = label == "good";
        for (const auto& file : sorted_entries(defect.path())) {
            if (file.is_directory() || !is_image_file(file.path())) {
                ++index.ignored_entries;
                continue;
            }
            Sample s;
            s.image_path = file.path();
            s.defect_label = label;
            s.image_label = good ? 0 : 1;
            if (!good) {
                const fs::path mask = gt_dir / label / (file.path().stem().string() + "_mask.png");
                if (!fs::is_regular_file(mask, ec)) {
                    fail(ErrorKind::Dataset, "missing mask " + mask.string() + " for defect image " +
                                                 file.path().string());
                }
                s.mask_path = mask;
            }
            index.samples.push_back(std::move(s));
        }
    }
    if (index.samples.empty()) fail(ErrorKind::Dataset, "empty test set in " + test_dir.string());
    return index;
}

std::vector<std::uint8_t> resize_nearest(std::span<const std::uint8_t> src, int src_h, int src_w,
                                         int dst_h, int dst_w) {
    if (src.size() != static_cast<std::size_t>(src_h) * src_w || dst_h < 1 || dst_w < 1) {
        fail(ErrorKind::Argument, "nearest resize: bad dimensions");
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(dst_h) * dst_w);
    for (int y = 0; y < dst_h; ++y) {
        const int sy = std::min(static_cast<int>((y + 0.5) * src_h / dst_h), src_h - 1);
        for (int x = 0; x < dst_w; ++x) {
            const int sx = std::min(static_cast<int>((x + 0.5) * src_w / dst_w), src_w - 1);
            out[static_cast<std::size_t>(y) * dst_w + x] = src[static_cast<std::size_t>(sy) * src_w + sx];
        }
    }
    return out;
}

std::vector<std::uint8_t> load_mask(const fs::path& path, const feature::PreprocessConfig& geometry) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) fail(ErrorKind::Io, "cannot read mask " + path.string());
    cv::Mat gray;
    try {
        gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    } catch (const cv::Exception& e) {
        fail(ErrorKind::Input, "cannot decode mask " + path.string() + ": " + e.what());
    }
    if (gray.empty()) fail(ErrorKind::Input, "cannot decode mask " + path.string());
    std::vector<std::uint8_t> binary(static_cast<std::size_t>(gray.rows) * gray.cols);
    for (int h = 0; h < gray.rows; ++h) {
        const auto* row = gray.ptr<std::uint8_t>(h);
        for (int w = 0; w < gray.cols; ++w) {
            binary[static_cast<std::size_t>(h) * gray.cols + w] = row[w] > 127 ? 1 : 0;
        }
    }
    const int r = geometry.resize;
    const auto resized = resize_nearest(binary, gray.rows, gray.cols, r, r);
    const int off = feature::crop_offset(geometry);
    const int c = geometry.crop;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(c) * c);
    for (int h = 0; h < c; ++h) {
        for (int w = 0; w < c; ++w) {
            out[static_cast<std::size_t>(h) * c + w] = resized[static_cast<std::size_t>(h + off) * r + (w + off)];
        }
    }
    return out;
}

}  // namespace grnr::eval
