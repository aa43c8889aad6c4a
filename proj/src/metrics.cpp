#include "overlap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "overlap/errors.hpp"

namespace overlap::metrics {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw UsageError("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                         std::to_string(labels.size()) + ")");
    }
    for (double s : scores) {
        if (std::isnan(s)) {
            throw UsageError("NaN score");
        }
    }
}

void require_both_classes(std::span<const int> labels, const char* metric) {
    const auto pos = std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; });
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) {
        throw UndefinedMetricError(std::string(metric) + " is undefined unless both classes are present");
    }
}

double ratio(std::uint64_t num, std::uint64_t den, bool& zero_division) {
    if (den == 0) {
        zero_division = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view to_string(Criterion c) noexcept {
    return c == Criterion::f1_macro ? "f1_macro" : "balanced_accuracy";
}

Criterion criterion_from_string(std::string_view s) {
    if (s == "f1_macro") {
        return Criterion::f1_macro;
    }
    if (s == "balanced_accuracy") {
        return Criterion::balanced_accuracy;
    }
    throw ConfigError("unknown threshold criterion '" + std::string(s) + "'");
}

nlohmann::json to_json(const MetricsReport& r) {
    return {
        {std::string(kReportColumns[0]), r.roc_auc},
        {std::string(kReportColumns[1]), r.best_threshold},
        {std::string(kReportColumns[2]), r.recall_macro},
        {std::string(kReportColumns[3]), r.precision_macro},
        {std::string(kReportColumns[4]), r.balanced_accuracy},
        {std::string(kReportColumns[5]), r.f1_macro},
        {"zero_division", r.zero_division},
    };
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    require_both_classes(labels, "ROC AUC");

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of 1-based mid-ranks of the positives; doubled to stay integral.
    std::uint64_t twice_rank_sum = 0;
    std::uint64_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const std::uint64_t twice_mid_rank = (i + 1) + j;  // (i+1 + j) / 2 doubled
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                twice_rank_sum += twice_mid_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::uint64_t n_neg = n - n_pos;
    // U = rank_sum - n_pos (n_pos + 1) / 2, still doubled.
    const std::uint64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_inputs(scores, labels);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        const bool actual = labels[i] != 0;
        if (predicted && actual) {
            ++cm.tp;
        } else if (predicted) {
            ++cm.fp;
        } else if (actual) {
            ++cm.fn;
        } else {
            ++cm.tn;
        }
    }
    return cm;
}

MacroMetrics macro_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) {
        throw UsageError("macro_metrics: empty confusion matrix");
    }
    MacroMetrics m;
    bool zd = false;
    const double recall_pos = ratio(cm.tp, cm.tp + cm.fn, zd);
    const double recall_neg = ratio(cm.tn, cm.tn + cm.fp, zd);
    const double precision_pos = ratio(cm.tp, cm.tp + cm.fp, zd);
    const double precision_neg = ratio(cm.tn, cm.tn + cm.fn, zd);
    const double f1_pos = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn, zd);
    const double f1_neg = ratio(2 * cm.tn, 2 * cm.tn + cm.fn + cm.fp, zd);

    m.recall_macro = (recall_pos + recall_neg) / 2.0;
    m.precision_macro = (precision_pos + precision_neg) / 2.0;
    m.f1_macro = (f1_pos + f1_neg) / 2.0;
    m.balanced_accuracy = 0.5 * (ratio(cm.tp, cm.tp + cm.fn, zd) + ratio(cm.tn, cm.tn + cm.fp, zd));
    m.zero_division = zd;
    return m;
}

double criterion_value(const MacroMetrics& m, Criterion c) noexcept {
    return c == Criterion::f1_macro ? m.f1_macro : m.balanced_accuracy;
}

std::vector<double> candidate_thresholds(std::span<const double> scores) {
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<double> candidates{0.0, 1.0};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        candidates.push_back(sorted[i] + (sorted[i + 1] - sorted[i]) / 2.0);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    return candidates;
}

ThresholdChoice best_threshold(std::span<const double> scores, std::span<const int> labels, Criterion criterion) {
    check_inputs(scores, labels);
    require_both_classes(labels, "best threshold");

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> sorted(n);
    // positives_from[i]: positives among sorted[i..n)
    std::vector<std::uint64_t> positives_from(n + 1, 0);
    for (std::size_t i = n; i-- > 0;) {
        sorted[i] = scores[order[i]];
        positives_from[i] = positives_from[i + 1] + (labels[order[i]] != 0 ? 1 : 0);
    }
    const std::uint64_t total_pos = positives_from[0];
    const std::uint64_t total_neg = n - total_pos;

    ThresholdChoice best{0.0, -1.0};
    for (double t : candidate_thresholds(scores)) {
        const auto first = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
        ConfusionMatrix cm;
        cm.tp = positives_from[first];
        cm.fp = (n - first) - cm.tp;
        cm.fn = total_pos - cm.tp;
        cm.tn = total_neg - cm.fp;
        const double value = criterion_value(macro_metrics(cm), criterion);
        if (value > best.value) {
            best = {t, value};
        }
    }
    return best;
}

MetricsReport evaluate_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
    MetricsReport r;
    r.roc_auc = roc_auc(scores, labels);
    r.best_threshold = threshold;
    const auto m = macro_metrics(confusion(scores, labels, threshold));
    r.recall_macro = m.recall_macro;
    r.precision_macro = m.precision_macro;
    r.balanced_accuracy = m.balanced_accuracy;
    r.f1_macro = m.f1_macro;
    r.zero_division = m.zero_division;
    return r;
}

MetricsReport evaluate_best(std::span<const double> scores, std::span<const int> labels, Criterion criterion) {
    return evaluate_at(scores, labels, best_threshold(scores, labels, criterion).threshold);
}

}  // namespace overlap::metrics
