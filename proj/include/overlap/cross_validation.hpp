#pragma once

#include <string>
#include <vector>

#include "overlap/dataset.hpp"
#include "overlap/metrics.hpp"
#include "overlap/trainer.hpp"
#include "overlap/wire.hpp"

namespace overlap {

struct CvConfig {
    wire::Hyperparameters hyperparameters;
    metrics::Criterion criterion = metrics::Criterion::f1_macro;
    /// Run the validation folds concurrently; the backend must then be thread-safe.
    bool parallel = false;
};

struct FoldResult {
    int fold = 0;
    /// Fold-local ROC AUC and macro metrics at the threshold chosen on that fold.
    metrics::MetricsReport metrics;
    std::vector<wire::EpochPoint> per_epoch;
    std::string backend_info;
    /// Scores and labels of the fold's examples, in dataset order.
    std::vector<double> scores;
    std::vector<int> labels;
};

struct CvReport {
    std::vector<FoldResult> validation;  // ascending fold order
    /// Test-fold metrics at `threshold`, selected on the pooled validation scores.
    metrics::MetricsReport test;
    std::vector<double> test_scores;
    double threshold = 0.0;
    double pooled_validation_criterion = 0.0;
    metrics::Criterion criterion = metrics::Criterion::f1_macro;
    std::string backend_info;
};

/// Request for one run: train on every fold except `held_out` and the test fold.
/// held_out < 0 builds the final request (train on all non-test folds, score the test fold).
wire::TrainRequest make_fold_request(const FoldedDataset& folded, int held_out, const wire::Hyperparameters& hp);

/// For each validation fold v != test_fold: train on the other non-test folds and score v.
/// Then train on all non-test folds and score the test fold at the threshold picked on the
/// pooled validation scores. Failures are rethrown as FoldError with the cause nested.
CvReport cross_validate(const FoldedDataset& folded, TrainerBackend& backend, const CvConfig& config);

}  // namespace overlap
