#pragma once

#include <cstdint>
#include <span>

namespace grnr::eval {

/// Mann-Whitney estimate of P(score_pos > score_neg), ties credited 1/2.
/// Identical to the trapezoidal area under the ROC curve. Labels are 0/1;
/// MetricUndefined if only one class is present.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct F1Result {
    double f1 = 0.0;
    double threshold = 0.0;
};

/// F1 of the rule `score >= t` for a given threshold.
double f1_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels,
                       double threshold);

/// Best F1 over every distinct score used as threshold (score >= t is
/// positive). Among equal F1 values the highest threshold wins.
F1Result f1_best_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace grnr::eval
