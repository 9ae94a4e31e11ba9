#include "grnr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <numeric>
#include <vector>

#include "grnr/error.hpp"

namespace grnr::eval {

namespace {

struct ClassCounts {
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels,
                         const char* metric) {
    if (scores.size() != labels.size()) {
        fail(ErrorKind::Argument, std::string(metric) + ": scores and labels differ in length");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) fail(ErrorKind::Argument, std::string(metric) + ": non-finite score");
    }
    ClassCounts counts;
    for (auto l : labels) {
        if (l > 1) fail(ErrorKind::Argument, std::string(metric) + ": labels must be 0 or 1");
        (l ? counts.positives : counts.negatives)++;
    }
    if (counts.positives == 0 || counts.negatives == 0) {
        fail(ErrorKind::MetricUndefined, std::string(metric) + " needs both classes present");
    }
    return counts;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    });
    return order;
}

double f1_from_counts(double tp, double fp, double fn) {
    const double denom = 2.0 * tp + fp + fn;
    return denom > 0.0 ? 2.0 * tp / denom : 0.0;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const auto counts = check_inputs(scores, labels, "AUROC");
    const auto order = order_by_score(scores, false);

    // Sum of (1-based, tie-averaged) ranks of the positives.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        std::size_t pos_in_run = 0;
        for (std::size_t r = i; r < j; ++r) pos_in_run += labels[order[r]];
        rank_sum += avg_rank * static_cast<double>(pos_in_run);
        i = j;
    }
    const double n1 = static_cast<double>(counts.positives);
    const double n0 = static_cast<double>(counts.negatives);
    const double u = rank_sum - n1 * (n1 + 1.0) / 2.0;
    return u / (n1 * n0);
}

double f1_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels,
                       double threshold) {
    if (scores.size() != labels.size()) fail(ErrorKind::Argument, "F1: length mismatch");
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (pred && labels[i]) ++tp;
        else if (pred) ++fp;
        else if (labels[i]) ++fn;
    }
    return f1_from_counts(tp, fp, fn);
}

F1Result f1_best_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const auto counts = check_inputs(scores, labels, "F1");
    const auto order = order_by_score(scores, true);
    const double total_pos = static_cast<double>(counts.positives);

    F1Result best{-1.0, 0.0};
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            (labels[order[i]] ? tp : fp) += 1.0;
            ++i;
        }
        const double f1 = f1_from_counts(tp, fp, total_pos - tp);
        if (f1 > best.f1) best = {f1, t};
    }
    return best;
}

}  // namespace grnr::eval
