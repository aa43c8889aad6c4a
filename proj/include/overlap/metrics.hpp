#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace overlap::metrics {

/// Positive class = competitive.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct MacroMetrics {
    double recall_macro = 0.0;
    double precision_macro = 0.0;
    double balanced_accuracy = 0.0;
    double f1_macro = 0.0;
    /// Set when some per-class ratio was 0/0 and therefore taken as 0.
    bool zero_division = false;
};

enum class Criterion { f1_macro, balanced_accuracy };

std::string_view to_string(Criterion c) noexcept;
Criterion criterion_from_string(std::string_view s);

/// One row of the results table.
struct MetricsReport {
    double roc_auc = 0.0;
    double best_threshold = 0.0;
    double recall_macro = 0.0;
    double precision_macro = 0.0;
    double balanced_accuracy = 0.0;
    double f1_macro = 0.0;
    bool zero_division = false;
};

/// Column names of the results table, in order.
inline constexpr std::string_view kReportColumns[] = {
    "ROC AUC binary", "Best Threshold", "Recall macro", "Precision macro", "Balanced Accuracy", "F1 macro",
};

nlohmann::json to_json(const MetricsReport& r);

/// Mann-Whitney estimate: fraction of (positive, negative) pairs ranked correctly, ties 0.5.
/// O(n log n) via mid-ranks. Throws UndefinedMetricError unless both classes occur and
/// UsageError on length mismatch or NaN scores.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Predict competitive iff score >= threshold.
ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold);

/// Per-class precision/recall/F1 with 0/0 := 0, averaged without weights over the two classes.
/// Throws UsageError on an empty matrix.
MacroMetrics macro_metrics(const ConfusionMatrix& cm);

double criterion_value(const MacroMetrics& m, Criterion c) noexcept;

/// Sentinels 0.0 and 1.0 plus midpoints of adjacent distinct sorted scores, ascending.
std::vector<double> candidate_thresholds(std::span<const double> scores);

struct ThresholdChoice {
    double threshold = 0.0;
    double value = 0.0;
};

/// Maximizes the criterion over candidate_thresholds(); ties go to the smaller threshold.
/// Throws UndefinedMetricError unless both classes occur.
ThresholdChoice best_threshold(std::span<const double> scores, std::span<const int> labels,
                               Criterion criterion = Criterion::f1_macro);

/// ROC AUC plus macro metrics at a fixed threshold.
MetricsReport evaluate_at(std::span<const double> scores, std::span<const int> labels, double threshold);

/// ROC AUC plus macro metrics at the threshold best_threshold() picks on the same data.
MetricsReport evaluate_best(std::span<const double> scores, std::span<const int> labels,
                            Criterion criterion = Criterion::f1_macro);

}  // namespace overlap::metrics
