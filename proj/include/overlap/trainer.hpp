#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include "overlap/baseline.hpp"
#include "overlap/wire.hpp"

namespace overlap {

/// Anything that can fit on the train list and score the evaluation list.
/// Implementations must return responses that pass wire::validate_response; callers
/// validate again regardless.
class TrainerBackend {
public:
    virtual ~TrainerBackend() = default;
    virtual wire::TrainResponse train(const wire::TrainRequest& request) = 0;
    virtual std::string describe() const = 0;
};

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string out;
    std::string err;
};

/// Runs `/bin/sh -c command`, feeding `input` on stdin and collecting stdout and stderr.
/// The child is killed when `timeout` elapses. Throws BackendError if it cannot be spawned.
ProcessResult run_process(const std::string& command, std::string_view input, std::chrono::milliseconds timeout);

/// Sends one request line to a spawned command and reads one response line from its stdout.
class SubprocessTrainer final : public TrainerBackend {
public:
    explicit SubprocessTrainer(std::string command,
                               std::chrono::milliseconds timeout = std::chrono::hours(24));
    wire::TrainResponse train(const wire::TrainRequest& request) override;
    std::string describe() const override { return "subprocess: " + command_; }

private:
    std::string command_;
    std::chrono::milliseconds timeout_;
};

/// POSTs the request to an http:// endpoint; the response body is the response message.
class HttpTrainer final : public TrainerBackend {
public:
    explicit HttpTrainer(std::string url, std::chrono::milliseconds timeout = std::chrono::hours(24));
    wire::TrainResponse train(const wire::TrainRequest& request) override;
    std::string describe() const override { return "http: " + url_; }

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
};

struct BaselineTrainerOptions {
    baseline::BaselineOptions model;
    /// Gradient-descent steps per requested epoch; 40 x 5 epochs = the default 200 steps.
    int steps_per_epoch = 40;
    /// Use the request's learning_rate instead of model.train.learning_rate.
    bool use_request_learning_rate = false;
};

/// In-process tf-idf + logistic regression backend speaking the same contract.
class BaselineTrainer final : public TrainerBackend {
public:
    explicit BaselineTrainer(BaselineTrainerOptions options = {}) : options_(std::move(options)) {}
    wire::TrainResponse train(const wire::TrainRequest& request) override;
    std::string describe() const override;

private:
    BaselineTrainerOptions options_;
};

/// Handles one request line for a stdio backend; always returns one response line
/// (an error reply when the request is invalid or training fails).
std::string serve_request_line(TrainerBackend& backend, std::string_view request_line, bool* ok = nullptr);

/// "http://..." -> HttpTrainer, "builtin:baseline" -> BaselineTrainer, anything else is a command.
std::unique_ptr<TrainerBackend> make_trainer(const std::string& locator,
                                             std::chrono::milliseconds timeout = std::chrono::hours(24));

/// One request, one validated response.
wire::TrainResponse call_trainer(const wire::TrainRequest& request, const std::string& locator);

}  // namespace overlap
