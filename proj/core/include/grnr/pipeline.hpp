#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "grnr/feature.hpp"
#include "grnr/postproc.hpp"
#include "grnr/regression.hpp"

namespace grnr {

struct PipelineConfig {
    feature::PreprocessConfig preprocess;
    core::RegressionConfig regression;
    double sigma = 4.0;
    std::vector<int> levels{2, 3};
    int threads = 1;  // 0 = all cores

    void validate() const;
};

struct StageTimings {
    double extract_ms = 0.0;
    double sample_global_ms = 0.0;
    double regression_ms = 0.0;
    double postproc_ms = 0.0;

    [[nodiscard]] double total_ms() const {
        return extract_ms + sample_global_ms + regression_ms + postproc_ms;
    }
};

struct Detection {
    postproc::AnomalyMap map;
    std::vector<core::HierarchyScoreMap> hierarchy_maps;
    StageTimings timings;
};

/// Scores an already-extracted stack; the anomaly map has image_h x image_w pixels.
Detection detect_from_features(const FeatureStack& stack, const PipelineConfig& config, int image_h,
                               int image_w);

/// Produces the feature stack for one image file.
class FeatureSource {
public:
    virtual ~FeatureSource() = default;
    virtual FeatureStack features_for(const std::filesystem::path& image_path,
                                      const PipelineConfig& config) = 0;
};

/// Decode, preprocess, then run a backbone.
class BackboneSource final : public FeatureSource {
public:
    explicit BackboneSource(std::shared_ptr<feature::Backbone> backbone)
        : backbone_(std::move(backbone)) {}
    FeatureStack features_for(const std::filesystem::path& image_path,
                              const PipelineConfig& config) override;

private:
    std::shared_ptr<feature::Backbone> backbone_;
};

/// Looks up precomputed dumps: <dump_root>/<image path relative to
/// image_root, extension replaced by .fmap>.
class DumpSource final : public FeatureSource {
public:
    DumpSource(std::filesystem::path image_root, std::filesystem::path dump_root)
        : image_root_(std::move(image_root)), dump_root_(std::move(dump_root)) {}
    FeatureStack features_for(const std::filesystem::path& image_path,
                              const PipelineConfig& config) override;
    [[nodiscard]] std::filesystem::path dump_path_for(const std::filesystem::path& image_path) const;

private:
    std::filesystem::path image_root_;
    std::filesystem::path dump_root_;
};

/// Keeps only the requested hierarchies of a stack, in order; Config error if one is missing.
FeatureStack select_levels(const FeatureStack& stack, const std::vector<int>& levels);

/// Full detection for one image file, with the extract stage timed.
Detection detect_file(const std::filesystem::path& image_path, FeatureSource& source,
                      const PipelineConfig& config);

}  // namespace grnr
