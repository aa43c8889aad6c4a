#include "overlap/cross_validation.hpp"

#include <exception>
#include <future>

#include "overlap/errors.hpp"

namespace overlap {

namespace {

wire::Example to_example(const ModelInput& m, bool with_label) {
    wire::Example e{m.segment_a, m.segment_b, std::nullopt};
    if (with_label) {
        e.label = m.is_competitive() ? 1 : 0;
    }
    return e;
}

std::vector<int> labels_of_fold(const FoldedDataset& folded, int fold) {
    std::vector<int> labels;
    for (const auto& m : folded.inputs) {
        if (m.fold == fold) {
            labels.push_back(m.is_competitive() ? 1 : 0);
        }
    }
    return labels;
}

// Runs one request and checks the response; failures become FoldError(fold) with the cause nested.
wire::TrainResponse run_fold(TrainerBackend& backend, const wire::TrainRequest& request, int fold) {
    try {
        auto response = backend.train(request);
        wire::validate_response(response, request);
        return response;
    } catch (const std::exception& e) {
        std::throw_with_nested(FoldError(fold, e.what()));
    }
}

FoldResult validation_fold(const FoldedDataset& folded, TrainerBackend& backend, const CvConfig& config, int fold) {
    const auto request = make_fold_request(folded, fold, config.hyperparameters);
    auto response = run_fold(backend, request, fold);
    FoldResult result;
    result.fold = fold;
    result.per_epoch = std::move(response.per_epoch);
    result.backend_info = std::move(response.backend_info);
    result.scores = std::move(response.eval_scores);
    result.labels = labels_of_fold(folded, fold);
    try {
        result.metrics = metrics::evaluate_best(result.scores, result.labels, config.criterion);
    } catch (const std::exception& e) {
        std::throw_with_nested(FoldError(fold, e.what()));
    }
    return result;
}

}  // namespace

wire::TrainRequest make_fold_request(const FoldedDataset& folded, int held_out, const wire::Hyperparameters& hp) {
    wire::TrainRequest request;
    request.hyperparameters = hp;
    const int scored = held_out < 0 ? folded.test_fold : held_out;
    for (const auto& m : folded.inputs) {
        if (m.fold == scored) {
            if (held_out >= 0) {
                request.validation.push_back(to_example(m, true));
            }
            request.evaluation.push_back(to_example(m, false));
        } else if (m.fold != folded.test_fold) {
            request.train.push_back(to_example(m, true));
        }
    }
    return request;
}

CvReport cross_validate(const FoldedDataset& folded, TrainerBackend& backend, const CvConfig& config) {
    folded.validate();

    std::vector<int> folds;
    for (int f = 0; f < folded.n_folds; ++f) {
        if (f != folded.test_fold) {
            folds.push_back(f);
        }
    }

    CvReport report;
    report.criterion = config.criterion;
    if (config.parallel) {
        std::vector<std::future<FoldResult>> pending;
        for (int f : folds) {
            pending.push_back(std::async(std::launch::async,
                                         [&, f] { return validation_fold(folded, backend, config, f); }));
        }
        for (auto& p : pending) {
            report.validation.push_back(p.get());
        }
    } else {
        for (int f : folds) {
            report.validation.push_back(validation_fold(folded, backend, config, f));
        }
    }

    // Pooled in ascending fold order, so the result does not depend on execution order.
    std::vector<double> pooled_scores;
    std::vector<int> pooled_labels;
    for (const auto& r : report.validation) {
        pooled_scores.insert(pooled_scores.end(), r.scores.begin(), r.scores.end());
        pooled_labels.insert(pooled_labels.end(), r.labels.begin(), r.labels.end());
    }
    metrics::ThresholdChoice choice;
    try {
        choice = metrics::best_threshold(pooled_scores, pooled_labels, config.criterion);
    } catch (const std::exception& e) {
        std::throw_with_nested(FoldError(-1, std::string("pooled validation scores: ") + e.what()));
    }
    report.threshold = choice.threshold;
    report.pooled_validation_criterion = choice.value;

    const auto request = make_fold_request(folded, -1, config.hyperparameters);
    auto response = run_fold(backend, request, -1);
    report.backend_info = std::move(response.backend_info);
    report.test_scores = std::move(response.eval_scores);
    try {
        report.test = metrics::evaluate_at(report.test_scores, labels_of_fold(folded, folded.test_fold), choice.threshold);
    } catch (const std::exception& e) {
        std::throw_with_nested(FoldError(-1, e.what()));
    }
    return report;
}

}  // namespace overlap
