#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "grnr/error.hpp"
#include "grnr/eval.hpp"
#include "grnr/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace grnr::eval {

MetricsReport aggregate(const std::string& category, std::span<const SampleResult> results) {
    if (results.empty()) fail(ErrorKind::Dataset, "no samples to aggregate for " + category);
    std::size_t pixels = 0;
    for (const auto& r : results) pixels += r.pixel_scores.size();

    std::vector<double> pixel_scores;
    std::vector<std::uint8_t> pixel_labels;
    pixel_scores.reserve(pixels);
    pixel_labels.reserve(pixels);
    std::vector<double> image_scores;
    std::vector<std::uint8_t> image_labels;
    double total_ms = 0.0;
    for (const auto& r : results) {
        if (r.pixel_scores.size() != r.pixel_labels.size()) {
            fail(ErrorKind::Argument, "sample result has mismatched pixel scores and labels");
        }
        pixel_scores.insert(pixel_scores.end(), r.pixel_scores.begin(), r.pixel_scores.end());
        pixel_labels.insert(pixel_labels.end(), r.pixel_labels.begin(), r.pixel_labels.end());
        image_scores.push_back(r.image_score);
        image_labels.push_back(r.image_label);
        total_ms += r.elapsed_ms;
    }

    MetricsReport report;
    report.category = category;
    report.pixel_auroc = auroc(pixel_scores, pixel_labels);
    report.image_auroc = auroc(image_scores, image_labels);
    const auto f1 = f1_best_threshold(pixel_scores, pixel_labels);
    report.pixel_f1 = f1.f1;
    report.f1_threshold = f1.threshold;
    report.per_image_ms = total_ms / static_cast<double>(results.size());
    report.sample_count = static_cast<long long>(results.size());
    return report;
}

MetricsReport evaluate_category(const DatasetIndex& index, FeatureSource& source,
                                const PipelineConfig& config) {
    config.validate();
    const int crop = config.preprocess.crop;
    std::vector<SampleResult> results;
    results.reserve(index.samples.size());
    for (const auto& sample : index.samples) {
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const auto det = detect_file(sample.image_path, source, config);
            SampleResult r;
            r.elapsed_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            r.pixel_scores = det.map.scores.values;
            r.image_score = det.map.image_score;
            r.image_label = sample.image_label;
            if (sample.mask_path) {
                auto mask = load_mask(*sample.mask_path, config.preprocess);
                const int mh = det.map.scores.height;
                const int mw = det.map.scores.width;
                if (mh != crop || mw != crop) mask = resize_nearest(mask, crop, crop, mh, mw);
                r.pixel_labels = std::move(mask);
            } else {
                r.pixel_labels.assign(r.pixel_scores.size(), 0);
            }
            results.push_back(std::move(r));
        } catch (const Error& e) {
            fail(e.kind(), sample.image_path.string() + ": " + e.what());
        }
    }
    return aggregate(index.category, results);
}

MetricsReport mean_report(std::span<const MetricsReport> reports) {
    if (reports.empty()) fail(ErrorKind::Argument, "mean of zero reports");
    MetricsReport out;
    out.category = "mean";
    for (const auto& r : reports) {
        out.pixel_auroc += r.pixel_auroc;
        out.image_auroc += r.image_auroc;
        out.pixel_f1 += r.pixel_f1;
        out.f1_threshold += r.f1_threshold;
        out.per_image_ms += r.per_image_ms;
        out.sample_count += r.sample_count;
    }
    const double n = static_cast<double>(reports.size());
    out.pixel_auroc /= n;
    out.image_auroc /= n;
    out.pixel_f1 /= n;
    out.f1_threshold /= n;
    out.per_image_ms /= n;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

const char* const kCsvHeader = "category,pixel_auroc,image_auroc,pixel_f1,f1_threshold,per_image_ms,sample_count";

void check_serializable(const MetricsReport& r) {
    const std::pair<const char*, double> fields[] = {
        {"pixel_auroc", r.pixel_auroc}, {"image_auroc", r.image_auroc}, {"pixel_f1", r.pixel_f1},
        {"f1_threshold", r.f1_threshold}, {"per_image_ms", r.per_image_ms}};
    for (const auto& [name, v] : fields) {
        if (!std::isfinite(v)) {
            fail(ErrorKind::Serialization,
                 "report for '" + r.category + "' has non-finite " + name);
        }
    }
    for (double v : {r.pixel_auroc, r.image_auroc, r.pixel_f1}) {
        if (v < 0.0 || v > 1.0) {
            fail(ErrorKind::Serialization, "report for '" + r.category + "' has a metric outside [0,1]");
        }
    }
}

json to_json(const MetricsReport& r) {
    return json{{"category", r.category},         {"pixel_auroc", r.pixel_auroc},
                {"image_auroc", r.image_auroc},   {"pixel_f1", r.pixel_f1},
                {"f1_threshold", r.f1_threshold}, {"per_image_ms", r.per_image_ms},
                {"sample_count", r.sample_count}};
}

MetricsReport from_json(const json& j) {
    MetricsReport r;
    j.at("category").get_to(r.category);
    j.at("pixel_auroc").get_to(r.pixel_auroc);
    j.at("image_auroc").get_to(r.image_auroc);
    j.at("pixel_f1").get_to(r.pixel_f1);
    j.at("f1_threshold").get_to(r.f1_threshold);
    j.at("per_image_ms").get_to(r.per_image_ms);
    j.at("sample_count").get_to(r.sample_count);
    return r;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_row(const MetricsReport& r) {
    return csv_field(r.category) + "," + format_double(r.pixel_auroc) + "," +
           format_double(r.image_auroc) + "," + format_double(r.pixel_f1) + "," +
           format_double(r.f1_threshold) + "," + format_double(r.per_image_ms) + "," +
           std::to_string(r.sample_count);
}

void write_text(const fs::path& path, const std::string& text, bool append) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open report " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "failed writing report " + path.string());
}

}  // namespace

ReportFormat report_format_for(const fs::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".json") return ReportFormat::Json;
    if (ext == ".csv") return ReportFormat::Csv;
    fail(ErrorKind::Argument, "report path must end in .json or .csv: " + path.string());
}

void write_report(const MetricsReport& report, const fs::path& path, ReportFormat format,
                  WriteMode mode) {
    check_serializable(report);
    if (format == ReportFormat::Json) {
        if (mode == WriteMode::Append) fail(ErrorKind::Argument, "JSON reports cannot be appended");
        write_text(path, to_json(report).dump(2) + "\n", false);
        return;
    }
    std::error_code ec;
    const bool has_header = mode == WriteMode::Append && fs::exists(path, ec) && fs::file_size(path, ec) > 0;
    std::string text = has_header ? "" : std::string(kCsvHeader) + "\n";
    text += csv_row(report) + "\n";
    write_text(path, text, mode == WriteMode::Append);
}

void write_reports(std::span<const MetricsReport> reports, const fs::path& path, ReportFormat format) {
    for (const auto& r : reports) check_serializable(r);
    if (format == ReportFormat::Json) {
        if (reports.size() == 1) {
            write_text(path, to_json(reports.front()).dump(2) + "\n", false);
            return;
        }
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(to_json(r));
        write_text(path, arr.dump(2) + "\n", false);
        return;
    }
    std::string text = std::string(kCsvHeader) + "\n";
    for (const auto& r : reports) text += csv_row(r) + "\n";
    write_text(path, text, false);
}

std::vector<MetricsReport> read_reports_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open report " + path.string());
    try {
        const json j = json::parse(in);
        std::vector<MetricsReport> out;
        if (j.is_array()) {
            for (const auto& e : j) out.push_back(from_json(e));
        } else {
            out.push_back(from_json(j));
        }
        return out;
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, "malformed report " + path.string() + ": " + e.what());
    }
}

}  // namespace grnr::eval
