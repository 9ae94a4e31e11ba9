#include "grnr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "grnr/error.hpp"
#include "grnr/support.hpp"

namespace grnr {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

void PipelineConfig::validate() const {
    preprocess.validate();
    regression.validate();
    if (!(sigma >= 0.0)) fail(ErrorKind::Config, "sigma must be >= 0");
    if (levels.empty()) fail(ErrorKind::Config, "at least one hierarchy level is required");
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (levels[i] <= levels[i - 1]) fail(ErrorKind::Config, "levels must be strictly increasing");
    }
    if (threads < 0) fail(ErrorKind::Config, "threads must be >= 0");
}

Detection detect_from_features(const FeatureStack& stack, const PipelineConfig& config, int image_h,
                               int image_w) {
    config.regression.validate();
    stack.validate();
    Detection out;
    for (const auto& map : stack.maps) {
        auto t0 = Clock::now();
        const auto patches = core::to_patch_matrix(map);
        const auto global =
            core::sample_global_support(patches, map.height, map.width, config.regression.k);
        out.timings.sample_global_ms += ms_since(t0);

        t0 = Clock::now();
        out.hierarchy_maps.push_back(
            core::score_map_for_hierarchy(patches, map.level, map.height, map.width, global,
                                          config.regression, config.threads));
        out.timings.regression_ms += ms_since(t0);
    }
    const auto t0 = Clock::now();
    out.map = postproc::finalize(out.hierarchy_maps, image_h, image_w, config.sigma);
    out.timings.postproc_ms = ms_since(t0);
    return out;
}

FeatureStack select_levels(const FeatureStack& stack, const std::vector<int>& levels) {
    FeatureStack out;
    for (int level : levels) {
        const auto it = std::find_if(stack.maps.begin(), stack.maps.end(),
                                     [&](const FeatureMap& m) { return m.level == level; });
        if (it == stack.maps.end()) {
            fail(ErrorKind::Config, "feature stack has no hierarchy " + std::to_string(level));
        }
        out.maps.push_back(*it);
    }
    return out;
}

FeatureStack BackboneSource::features_for(const std::filesystem::path& image_path,
                                          const PipelineConfig& config) {
    const auto raw = feature::decode_image(image_path);
    auto image = feature::preprocess_image(raw, config.preprocess);
    image.source_path = image_path.string();
    return feature::extract_features(image, *backbone_, config.levels);
}

std::filesystem::path DumpSource::dump_path_for(const std::filesystem::path& image_path) const {
    auto rel = image_path.lexically_relative(image_root_);
    if (rel.empty() || *rel.begin() == "..") rel = image_path.filename();
    rel.replace_extension(".fmap");
    return dump_root_ / rel;
}

FeatureStack DumpSource::features_for(const std::filesystem::path& image_path,
                                      const PipelineConfig& config) {
    return select_levels(feature::load_feature_stack(dump_path_for(image_path)), config.levels);
}

Detection detect_file(const std::filesystem::path& image_path, FeatureSource& source,
                      const PipelineConfig& config) {
    const auto t0 = Clock::now();
    const auto stack = source.features_for(image_path, config);
    const double extract_ms = ms_since(t0);
    auto det = detect_from_features(stack, config, config.preprocess.crop, config.preprocess.crop);
    det.timings.extract_ms = extract_ms;
    return det;
}

}  // namespace grnr
