#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Trainer wire protocol. One JSON object per line in each direction; the full field
// reference lives in docs/wire-protocol.md.

namespace overlap::wire {

inline constexpr std::string_view kSchema = "overlap-trainer/1";

struct Example {
    std::string segment_a;
    std::string segment_b;
    /// 1 = competitive, 0 = non_competitive. Omitted for evaluation examples.
    std::optional<int> label;

    bool operator==(const Example&) const = default;
};

struct Hyperparameters {
    double learning_rate = 7e-6;
    int epochs = 5;
    int batch_size = 16;
    double weight_decay = 0.01;
    int max_length = 128;
    std::uint64_t seed = 0;
    std::optional<int> warmup_steps;
    std::optional<double> max_grad_norm;

    bool operator==(const Hyperparameters&) const = default;
};

struct TrainRequest {
    Hyperparameters hyperparameters;
    std::vector<Example> train;
    std::vector<Example> validation;
    std::vector<Example> evaluation;

    bool operator==(const TrainRequest&) const = default;
};

struct EpochPoint {
    int epoch = 0;  // 1-based
    std::optional<double> val_loss;
    std::optional<double> val_roc_auc;

    bool operator==(const EpochPoint&) const = default;
};

struct TrainResponse {
    std::vector<EpochPoint> per_epoch;
    std::vector<double> eval_scores;
    std::string backend_info;

    bool operator==(const TrainResponse&) const = default;
};

nlohmann::json to_json(const TrainRequest& r);
nlohmann::json to_json(const TrainResponse& r);

/// Backend side: parses and checks a request line. Throws ProtocolError naming the first bad field.
TrainRequest decode_request(std::string_view line);

/// Harness side: parses a response line and validates it against the request it answers.
/// Throws ProtocolError naming the first invalid field (raw message attached), or
/// BackendError when the backend replied with an "error" member.
TrainResponse decode_response(std::string_view line, const TrainRequest& request);

/// Checks every response invariant: per_epoch has one entry per requested epoch numbered
/// 1..epochs; losses finite and >= 0; ROC AUC in [0, 1]; metric nulls only when the
/// validation list is empty (ROC AUC may also be null for single-class validation);
/// eval_scores aligned with the evaluation list and each in [0, 1].
void validate_response(const TrainResponse& response, const TrainRequest& request);

/// Error reply a backend sends instead of a response.
std::string encode_error(std::string_view message);

}  // namespace overlap::wire
