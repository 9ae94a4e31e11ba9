#include "grnr/regression.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "grnr/error.hpp"
#include "grnr/parallel.hpp"

namespace grnr::core {

namespace {

// Relative pivot below which an unjittered Gram counts as singular.
constexpr double kSingularPivot = 1e-12;

}  // namespace

void RegressionConfig::validate() const {
    if (m < 1) fail(ErrorKind::Config, "neighborhood radius m must be >= 1");
    if (k < 1) fail(ErrorKind::Config, "global support count K must be >= 1");
    if (!(eta >= 0.0) || !std::isfinite(eta)) fail(ErrorKind::Config, "eta must be finite and >= 0");
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) {
        fail(ErrorKind::Config, "jitter must be finite and >= 0");
    }
}

Eigen::RowVectorXd solve_weights(const Eigen::Ref<const PatchMatrix>& local,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& global_sum,
                                 int global_count, double eta, double jitter) {
    const Eigen::Index n = local.rows();
    const double scale = 1.0 + static_cast<double>(global_count) * eta;

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(local);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    const Eigen::RowVectorXd target = query + eta * global_sum;
    const Eigen::VectorXd rhs = local * target.transpose();

    const double mean_diag = gram.diagonal().mean();
    if (jitter > 0.0 && mean_diag == 0.0) {
        // Every support row is zero, so W S_L = 0 for any W.
        return Eigen::RowVectorXd::Zero(n);
    }
    Eigen::MatrixXd system = scale * gram;
    system.diagonal().array() += jitter * mean_diag * scale;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success) {
        fail(ErrorKind::Numerical, "factorization of the local Gram system failed; use jitter > 0");
    }
    const Eigen::VectorXd pivots = ldlt.vectorD();
    const double max_pivot = pivots.cwiseAbs().maxCoeff();
    if (jitter == 0.0 && !(pivots.minCoeff() > kSingularPivot * max_pivot)) {
        fail(ErrorKind::Numerical,
             "singular local Gram system (duplicate or collinear neighbors); use jitter > 0");
    }
    return ldlt.solve(rhs).transpose();
}

Transformation solve_transformation(const Query& query, const LocalSupport& local,
                                    const GlobalSupport& global, double eta, double jitter) {
    const Eigen::Index c = query.vector.size();
    if (local.rows.cols() != c || global.rows.cols() != c) {
        fail(ErrorKind::Argument, "query, local and global supports must share the channel count");
    }
    if (local.rows.rows() == 0 || global.rows.rows() == 0) {
        fail(ErrorKind::Argument, "supports must be non-empty");
    }
    if (!(eta >= 0.0)) fail(ErrorKind::Argument, "eta must be >= 0");
    if (!(jitter >= 0.0)) fail(ErrorKind::Argument, "jitter must be >= 0");
    const Eigen::RowVectorXd global_sum = global.rows.colwise().sum();
    return {solve_weights(local.rows, query.vector, global_sum,
                          static_cast<int>(global.rows.rows()), eta, jitter)};
}

double regularized_objective(const Transformation& transform, const Query& query,
                             const LocalSupport& local, const GlobalSupport& global, double eta) {
    const Eigen::Index c = query.vector.size();
    if (local.rows.cols() != c || global.rows.cols() != c ||
        transform.weights.size() != local.rows.rows()) {
        fail(ErrorKind::Argument, "objective: dimension mismatch");
    }
    const Eigen::RowVectorXd recon = transform.weights * local.rows;
    double value = (query.vector - recon).squaredNorm();
    for (Eigen::Index n = 0; n < global.rows.rows(); ++n) {
        value += eta * (recon - global.rows.row(n)).squaredNorm();
    }
    return value;
}

namespace {

struct ScoreContext {
    const PatchMatrix& patches;
    int height;
    int width;
    Eigen::RowVectorXd global_sum;
    int global_count;
    const RegressionConfig& config;
};

double residual_at(const ScoreContext& ctx, PatchMatrix& local, int h, int w) {
    const auto idx = neighborhood_indices(ctx.height, ctx.width, h, w, ctx.config.m);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        local.row(static_cast<Eigen::Index>(r)) = ctx.patches.row(idx[r]);
    }
    const auto q = ctx.patches.row(static_cast<Eigen::Index>(h) * ctx.width + w);
    try {
        const Eigen::RowVectorXd weights =
            solve_weights(local, q, ctx.global_sum, ctx.global_count, ctx.config.eta, ctx.config.jitter);
        return (q - weights * local).squaredNorm();
    } catch (const Error& e) {
        fail(e.kind(), "at (" + std::to_string(h) + "," + std::to_string(w) + "): " + e.what());
    }
}

}  // namespace

double score_at(const PatchMatrix& patches, int height, int width, const GlobalSupport& global,
                const RegressionConfig& config, int h, int w) {
    config.validate();
    if (h < 0 || h >= height || w < 0 || w >= width) {
        fail(ErrorKind::Argument, "score position outside the map");
    }
    const ScoreContext ctx{patches, height, width, global.rows.colwise().sum(), global.count(), config};
    PatchMatrix local(local_support_size(config.m), patches.cols());
    return residual_at(ctx, local, h, w);
}

HierarchyScoreMap score_map_for_hierarchy(const PatchMatrix& patches, int level, int height, int width,
                                          const GlobalSupport& global, const RegressionConfig& config,
                                          int threads) {
    config.validate();
    if (patches.rows() != static_cast<Eigen::Index>(height) * width || patches.rows() == 0) {
        fail(ErrorKind::Argument, "patch matrix does not match the map dimensions");
    }
    if (global.rows.cols() != patches.cols() || global.rows.rows() == 0) {
        fail(ErrorKind::Argument, "global support does not match the feature map channels");
    }
    const ScoreContext ctx{patches, height, width, global.rows.colwise().sum(), global.count(), config};

    HierarchyScoreMap out{level, ScoreGrid(height, width)};
    parallel_for(height, threads, [&](int h) {
        PatchMatrix local(local_support_size(config.m), patches.cols());
        for (int w = 0; w < width; ++w) out.scores.at(h, w) = residual_at(ctx, local, h, w);
    });
    return out;
}

HierarchyScoreMap score_map_for_hierarchy(const FeatureMap& map, const GlobalSupport& global,
                                          const RegressionConfig& config, int threads) {
    return score_map_for_hierarchy(to_patch_matrix(map), map.level, map.height, map.width, global,
                                   config, threads);
}

}  // namespace grnr::core
