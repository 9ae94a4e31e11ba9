#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grnr/pipeline.hpp"

namespace grnr::eval {

struct Sample {
    std::filesystem::path image_path;
    std::optional<std::filesystem::path> mask_path;
    std::string defect_label;
    std::uint8_t image_label = 0;  // 1 = anomalous
};

struct DatasetIndex {
    std::string category;
    std::vector<Sample> samples;
    int ignored_entries = 0;  // nested folders and non-image files skipped while loading
};

/// Category directories under `root` that contain a test/ folder, sorted.
std::vector<std::string> list_categories(const std::filesystem::path& root);

/// Indexes root/category/test/<defect>/* with masks from
/// root/category/ground_truth/<defect>/<stem>_mask.png. "good" images are
/// normal and carry no mask.
DatasetIndex load_mvtec_layout(const std::filesystem::path& root, const std::string& category);

/// Nearest-neighbor resampling of a binary/label raster.
std::vector<std::uint8_t> resize_nearest(std::span<const std::uint8_t> src, int src_h, int src_w,
                                         int dst_h, int dst_w);

/// Decodes a mask and applies the image geometry (resize, center crop);
/// returns crop*crop labels in {0,1}.
std::vector<std::uint8_t> load_mask(const std::filesystem::path& path,
                                    const feature::PreprocessConfig& geometry);

struct MetricsReport {
    std::string category;
    double pixel_auroc = 0.0;
    double image_auroc = 0.0;
    double pixel_f1 = 0.0;
    double f1_threshold = 0.0;
    double per_image_ms = 0.0;
    long long sample_count = 0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Per-sample outputs kept for metric pooling.
struct SampleResult {
    std::vector<double> pixel_scores;
    std::vector<std::uint8_t> pixel_labels;
    double image_score = 0.0;
    std::uint8_t image_label = 0;
    double elapsed_ms = 0.0;
};

/// Pools per-sample results into a report; order-independent.
MetricsReport aggregate(const std::string& category, std::span<const SampleResult> results);

/// Runs detection on every sample and scores the category. Any sample
/// failure aborts with the sample path in the message.
MetricsReport evaluate_category(const DatasetIndex& index, FeatureSource& source,
                                const PipelineConfig& config);

/// Unweighted mean over categories; category "mean", sample_count summed.
MetricsReport mean_report(std::span<const MetricsReport> reports);

enum class ReportFormat { Json, Csv };
enum class WriteMode { Truncate, Append };

ReportFormat report_format_for(const std::filesystem::path& path);

/// JSON: one object (or an array for several reports). CSV: header row
/// then one row per report; Append adds rows under an existing header.
void write_report(const MetricsReport& report, const std::filesystem::path& path, ReportFormat format,
                  WriteMode mode = WriteMode::Truncate);
void write_reports(std::span<const MetricsReport> reports, const std::filesystem::path& path,
                   ReportFormat format);

std::vector<MetricsReport> read_reports_json(const std::filesystem::path& path);

}  // namespace grnr::eval
