#pragma once

#include <Eigen/Core>

#include "grnr/support.hpp"
#include "grnr/tensor.hpp"

namespace grnr::core {

struct RegressionConfig {
    int m = 1;            // neighborhood radius
    int k = 40;           // global support count
    double eta = 5.0;     // global-normality regularization strength
    double jitter = 1e-4; // relative ridge on the local Gram diagonal

    /// Throws Config for m < 1, K < 1, eta < 0 or jitter < 0 (or non-finite values).
    void validate() const;
};

struct Query {
    Eigen::RowVectorXd vector;
    GridPos position;
};

struct Transformation {
    Eigen::RowVectorXd weights;  // one coefficient per local support row
};

struct HierarchyScoreMap {
    int level = 0;
    ScoreGrid scores;
};

/// Minimizer of |Q - W S_L|^2 + eta * sum_n |W S_L - S_G^n|^2:
///
///   W = (Q + eta * sum_n S_G^n) S_L^T  ((1 + K eta) S_L S_L^T + e' I)^-1,
///   e' = jitter * mean(diag(S_L S_L^T)) * (1 + K eta).
///
/// With jitter = 0 a singular local Gram raises a Numerical error.
Transformation solve_transformation(const Query& query, const LocalSupport& local,
                                    const GlobalSupport& global, double eta, double jitter);

/// Same solve with the global support pre-reduced to its row sum; this is
/// the hot-path entry used by score_map_for_hierarchy.
Eigen::RowVectorXd solve_weights(const Eigen::Ref<const PatchMatrix>& local,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& global_sum,
                                 int global_count, double eta, double jitter);

/// |Q - W S_L|^2 + eta * sum_n |W S_L - S_G^n|^2. Used to check the closed form.
double regularized_objective(const Transformation& transform, const Query& query,
                             const LocalSupport& local, const GlobalSupport& global, double eta);

/// Squared regression residual at one position.
double score_at(const PatchMatrix& patches, int height, int width, const GlobalSupport& global,
                const RegressionConfig& config, int h, int w);

/// Residual map A(h,w) = |Q(h,w) - W(h,w) S_L(h,w)|^2 over every position.
/// Positions are independent; `threads` workers (0 = all cores) produce
/// bit-identical output for any count.
HierarchyScoreMap score_map_for_hierarchy(const FeatureMap& map, const GlobalSupport& global,
                                          const RegressionConfig& config, int threads = 1);
HierarchyScoreMap score_map_for_hierarchy(const PatchMatrix& patches, int level, int height, int width,
                                          const GlobalSupport& global, const RegressionConfig& config,
                                          int threads = 1);

}  // namespace grnr::core
