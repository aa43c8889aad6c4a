#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "overlap/trainer.hpp"

namespace testing {

/// Scores every evaluation example with `score(example)`; curves are flat.
class StubBackend : public overlap::TrainerBackend {
public:
    using Scorer = std::function<double(const overlap::wire::Example&)>;

    explicit StubBackend(Scorer score, std::string info = "stub") : score_(std::move(score)), info_(std::move(info)) {}

    overlap::wire::TrainResponse train(const overlap::wire::TrainRequest& request) override {
        {
            std::lock_guard lock(mutex_);
            requests.push_back(request);
        }
        overlap::wire::TrainResponse r;
        for (int e = 1; e <= request.hyperparameters.epochs; ++e) {
            overlap::wire::EpochPoint p{e, std::nullopt, std::nullopt};
            if (!request.validation.empty()) {
                p.val_loss = 0.5;
                p.val_roc_auc = 0.5;
            }
            r.per_epoch.push_back(p);
        }
        for (const auto& ex : request.evaluation) {
            r.eval_scores.push_back(score_(ex));
        }
        r.backend_info = info_;
        return r;
    }
    std::string describe() const override { return info_; }

    std::vector<overlap::wire::TrainRequest> requests;

private:
    Scorer score_;
    std::string info_;
    std::mutex mutex_;
};

inline StubBackend constant_backend(double s = 0.5) {
    return StubBackend([s](const overlap::wire::Example&) { return s; }, "constant");
}

/// Reads the label back out of segment_b, which oracle datasets set to "pos" or "neg".
inline StubBackend oracle_backend() {
    return StubBackend([](const overlap::wire::Example& e) { return e.segment_b == "pos" ? 1.0 : 0.0; }, "oracle");
}

}  // namespace testing
