#include "grnr/tensor.hpp"

#include <cmath>
#include <string>

#include "grnr/error.hpp"

namespace grnr {

void FeatureMap::validate() const {
    if (channels < 1 || height < 1 || width < 1) {
        fail(ErrorKind::Argument, "feature map level " + std::to_string(level) +
                                      " has non-positive dimensions " + std::to_string(channels) +
                                      "x" + std::to_string(height) + "x" + std::to_string(width));
    }
    const auto expected = static_cast<std::size_t>(channels) * height * width;
    if (data.size() != expected) {
        fail(ErrorKind::Argument, "feature map level " + std::to_string(level) + " holds " +
                                      std::to_string(data.size()) + " values, expected " +
                                      std::to_string(expected));
    }
    for (float v : data) {
        if (!std::isfinite(v)) {
            fail(ErrorKind::Argument,
                 "feature map level " + std::to_string(level) + " contains non-finite values");
        }
    }
}

std::vector<int> FeatureStack::hierarchy_ids() const {
    std::vector<int> ids;
    ids.reserve(maps.size());
    for (const auto& m : maps) ids.push_back(m.level);
    return ids;
}

void FeatureStack::validate() const {
    if (maps.empty()) fail(ErrorKind::Argument, "feature stack needs at least one hierarchy");
    for (std::size_t i = 0; i < maps.size(); ++i) {
        maps[i].validate();
        if (i > 0 && maps[i].level <= maps[i - 1].level) {
            fail(ErrorKind::Argument, "hierarchy ids must be strictly increasing");
        }
    }
}

}  // namespace grnr
