#include "grnr/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "grnr/error.hpp"

namespace grnr::core {

namespace {

constexpr double kRoundingSlack = 64.0 * std::numeric_limits<double>::epsilon();
constexpr double kDirectBudget = 5e7;

double direct_distance_sum(const PatchMatrix& patches, Eigen::Index p) {
    long double total = 0.0L;
    for (Eigen::Index j = 0; j < patches.rows(); ++j) {
        for (Eigen::Index c = 0; c < patches.cols(); ++c) {
            const long double d = static_cast<long double>(patches(p, c)) - patches(j, c);
            total += d * d;
        }
    }
    return static_cast<double>(total);
}

}  // namespace

PatchMatrix to_patch_matrix(const FeatureMap& map) {
    map.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(map.positions());
    PatchMatrix out(n, map.channels);
    for (int c = 0; c < map.channels; ++c) {
        const float* plane = map.data.data() + static_cast<std::size_t>(c) * map.positions();
        for (Eigen::Index p = 0; p < n; ++p) out(p, c) = plane[p];
    }
    return out;
}

std::vector<int> neighborhood_indices(int height, int width, int h, int w, int m) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(local_support_size(m)));
    for (int a = h - m; a <= h + m; ++a) {
        for (int b = w - m; b <= w + m; ++b) {
            if (a == h && b == w) continue;
            const int ca = std::clamp(a, 0, height - 1);
            const int cb = std::clamp(b, 0, width - 1);
            out.push_back(ca * width + cb);
        }
    }
    return out;
}

LocalSupport sample_local_support(const FeatureMap& map, int h, int w, int m) {
    if (m < 1) fail(ErrorKind::Argument, "neighborhood radius m must be >= 1");
    if (!map.contains(h, w)) {
        fail(ErrorKind::Argument, "position (" + std::to_string(h) + "," + std::to_string(w) +
                                      ") outside " + std::to_string(map.height) + "x" +
                                      std::to_string(map.width) + " map");
    }
    const auto idx = neighborhood_indices(map.height, map.width, h, w, m);
    LocalSupport out;
    out.radius = m;
    out.rows.resize(static_cast<Eigen::Index>(idx.size()), map.channels);
    out.coordinates.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const int hh = idx[r] / map.width;
        const int ww = idx[r] % map.width;
        out.coordinates.push_back({hh, ww});
        for (int c = 0; c < map.channels; ++c) {
            out.rows(static_cast<Eigen::Index>(r), c) = map.at(c, hh, ww);
        }
    }
    return out;
}

GlobalSupport sample_global_support(const PatchMatrix& patches, int height, int width, int k) {
    if (k < 1) fail(ErrorKind::Argument, "global support count K must be >= 1");
    const Eigen::Index n = patches.rows();
    if (n != static_cast<Eigen::Index>(height) * width || n == 0) {
        fail(ErrorKind::Argument, "patch matrix does not match the map dimensions");
    }
    const int kk = static_cast<int>(std::min<Eigen::Index>(k, n));

    const Eigen::RowVectorXd total = patches.colwise().sum();
    const Eigen::VectorXd norms = patches.rowwise().squaredNorm();
    const double norm_sum = norms.sum();
    const Eigen::VectorXd dots = patches * total.transpose();

    std::vector<double> dist(static_cast<std::size_t>(n));
    std::vector<double> slack(static_cast<std::size_t>(n));
    for (Eigen::Index p = 0; p < n; ++p) {
        const double big = static_cast<double>(n) * norms(p) + norm_sum;
        dist[static_cast<std::size_t>(p)] = big - 2.0 * dots(p);
        slack[static_cast<std::size_t>(p)] = kRoundingSlack * (big + 2.0 * std::abs(dots(p)));
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
    });

    // Cancellation in the expansion can reorder candidates whose sums agree to
    // within rounding. Runs of such candidates reaching into the top K are
    // re-ranked from directly accumulated sums.
    std::size_t start = 0;
    while (start < static_cast<std::size_t>(kk)) {
        std::size_t end = start + 1;
        while (end < order.size()) {
            const auto a = static_cast<std::size_t>(order[end - 1]);
            const auto b = static_cast<std::size_t>(order[end]);
            if (dist[b] - dist[a] > slack[a] + slack[b]) break;
            ++end;
        }
        const auto first = dist[static_cast<std::size_t>(order[start])];
        const bool identical = std::all_of(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](int p) { return dist[static_cast<std::size_t>(p)] == first; });
        const double cost = static_cast<double>(end - start) * static_cast<double>(n) * patches.cols();
        if (end - start > 1 && !identical && cost <= kDirectBudget) {
            for (auto it = order.begin() + static_cast<std::ptrdiff_t>(start);
                 it != order.begin() + static_cast<std::ptrdiff_t>(end); ++it) {
                dist[static_cast<std::size_t>(*it)] = direct_distance_sum(patches, *it);
            }
            std::sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                      order.begin() + static_cast<std::ptrdiff_t>(end), [&](int a, int b) {
                          const double da = dist[static_cast<std::size_t>(a)];
                          const double db = dist[static_cast<std::size_t>(b)];
                          return da < db || (da == db && a < b);
                      });
        }
        start = end;
    }

    GlobalSupport out;
    out.rows.resize(kk, patches.cols());
    out.positions.reserve(static_cast<std::size_t>(kk));
    out.distance_sums.reserve(static_cast<std::size_t>(kk));
    for (int i = 0; i < kk; ++i) {
        const int p = order[static_cast<std::size_t>(i)];
        out.rows.row(i) = patches.row(p);
        out.positions.push_back({p / width, p % width});
        out.distance_sums.push_back(dist[static_cast<std::size_t>(p)]);
    }
    return out;
}

GlobalSupport sample_global_support(const FeatureMap& map, int k) {
    return sample_global_support(to_patch_matrix(map), map.height, map.width, k);
}

}  // namespace grnr::core
