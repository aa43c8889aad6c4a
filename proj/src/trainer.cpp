#include "overlap/trainer.hpp"

#include <cmath>
#include <sstream>

#include <httplib.h>

#include "overlap/errors.hpp"
#include "overlap/metrics.hpp"

namespace overlap {

SubprocessTrainer::SubprocessTrainer(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

wire::TrainResponse SubprocessTrainer::train(const wire::TrainRequest& request) {
    const std::string line = wire::to_json(request).dump() + "\n";
    const auto result = run_process(command_, line, timeout_);
    if (result.timed_out) {
        throw BackendError("backend '" + command_ + "' timed out", result.err);
    }
    std::istringstream out(result.out);
    std::string response;
    while (std::getline(out, response) && response.find_first_not_of(" \t\r") == std::string::npos) {
    }
    if (result.exit_code != 0) {
        // An error reply on stdout carries the most specific message.
        if (!response.empty()) {
            wire::decode_response(response, request);
        }
        throw BackendError("backend '" + command_ + "' exited with status " + std::to_string(result.exit_code),
                           result.err);
    }
    if (response.empty()) {
        throw ProtocolError("$", "backend produced no response line", result.out);
    }
    return wire::decode_response(response, request);
}

HttpTrainer::HttpTrainer(std::string url, std::chrono::milliseconds timeout) : url_(std::move(url)), timeout_(timeout) {}

wire::TrainResponse HttpTrainer::train(const wire::TrainRequest& request) {
    const auto scheme_end = url_.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("trainer url must look like http://host:port/path, got '" + url_ + "'");
    }
    const auto path_begin = url_.find('/', scheme_end + 3);
    const std::string origin = url_.substr(0, path_begin);
    const std::string path = path_begin == std::string::npos ? "/" : url_.substr(path_begin);

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_).count();
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    auto res = client.Post(path, wire::to_json(request).dump(), "application/json");
    if (!res) {
        throw BackendError("http trainer " + url_ + " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        if (!res->body.empty()) {
            try {
                wire::decode_response(res->body, request);
            } catch (const BackendError&) {
                throw;
            } catch (const Error&) {
            }
        }
        throw BackendError("http trainer " + url_ + " returned status " + std::to_string(res->status), res->body);
    }
    return wire::decode_response(res->body, request);
}

namespace {

std::vector<baseline::TextPair> to_pairs(const std::vector<wire::Example>& examples) {
    std::vector<baseline::TextPair> out;
    out.reserve(examples.size());
    for (const auto& e : examples) {
        out.emplace_back(e.segment_a, e.segment_b);
    }
    return out;
}

}  // namespace

std::string BaselineTrainer::describe() const {
    const auto& m = options_.model;
    std::ostringstream s;
    s << "baseline tf-idf logistic regression (ngrams " << m.ngrams.lo << "-" << m.ngrams.hi << ", min_df "
      << m.min_df << ", l2 " << m.train.l2_lambda << ", "
      << (options_.use_request_learning_rate ? std::string("request learning rate")
                                             : "learning rate " + std::to_string(m.train.learning_rate))
      << ", " << options_.steps_per_epoch << " full-batch steps per epoch; batch_size, weight_decay and "
      << "max_length do not apply)";
    return s.str();
}

wire::TrainResponse BaselineTrainer::train(const wire::TrainRequest& request) {
    const auto& hp = request.hyperparameters;
    if (options_.steps_per_epoch < 1) {
        throw ConfigError("steps_per_epoch must be >= 1");
    }
    const auto train_pairs = to_pairs(request.train);
    if (train_pairs.empty()) {
        throw TrainingError("empty training list");
    }
    baseline::BaselineModel model;
    model.vocabulary = baseline::fit_vocabulary(std::span<const baseline::TextPair>(train_pairs),
                                                options_.model.ngrams, options_.model.min_df);

    std::vector<baseline::SparseVector> features;
    std::vector<int> labels;
    for (const auto& e : request.train) {
        features.push_back(baseline::featurize(e.segment_a, e.segment_b, model.vocabulary));
        labels.push_back(e.label.value_or(0));
    }
    std::vector<baseline::SparseVector> val_features;
    std::vector<int> val_labels;
    for (const auto& e : request.validation) {
        val_features.push_back(baseline::featurize(e.segment_a, e.segment_b, model.vocabulary));
        val_labels.push_back(e.label.value_or(0));
    }
    const bool val_both_classes = std::count(val_labels.begin(), val_labels.end(), 1) > 0 &&
                                  std::count(val_labels.begin(), val_labels.end(), 0) > 0;

    const auto checkpoint = [&](int epoch, const baseline::LogRegModel& m) {
        wire::EpochPoint p{epoch, std::nullopt, std::nullopt};
        if (val_features.empty()) {
            return p;
        }
        std::vector<double> scores;
        double loss = 0.0;
        for (std::size_t i = 0; i < val_features.size(); ++i) {
            const double s = baseline::predict_proba(m, val_features[i]);
            scores.push_back(s);
            const double prob = val_labels[i] != 0 ? s : 1.0 - s;
            loss -= std::log(std::max(prob, 1e-15));
        }
        p.val_loss = loss / static_cast<double>(val_features.size());
        if (val_both_classes) {
            p.val_roc_auc = metrics::roc_auc(scores, val_labels);
        }
        return p;
    };

    baseline::TrainOptions topt = options_.model.train;
    if (options_.use_request_learning_rate) {
        topt.learning_rate = hp.learning_rate;
    }
    topt.max_epochs = hp.epochs * options_.steps_per_epoch;

    wire::TrainResponse response;
    model.logreg = baseline::train_logreg(features, labels, topt, [&](int step, const baseline::LogRegModel& m) {
        if ((step + 1) % options_.steps_per_epoch == 0) {
            response.per_epoch.push_back(checkpoint((step + 1) / options_.steps_per_epoch, m));
        }
    });
    // Early convergence: the remaining epochs see the converged model.
    while (response.per_epoch.size() < static_cast<std::size_t>(hp.epochs)) {
        response.per_epoch.push_back(checkpoint(static_cast<int>(response.per_epoch.size()) + 1, model.logreg));
    }

    for (const auto& e : request.evaluation) {
        response.eval_scores.push_back(baseline::score(model, e.segment_a, e.segment_b));
    }
    response.backend_info = describe();
    return response;
}

std::string serve_request_line(TrainerBackend& backend, std::string_view request_line, bool* ok) {
    try {
        const auto request = wire::decode_request(request_line);
        auto response = backend.train(request);
        wire::validate_response(response, request);
        if (ok) {
            *ok = true;
        }
        return wire::to_json(response).dump();
    } catch (const std::exception& e) {
        if (ok) {
            *ok = false;
        }
        return wire::encode_error(e.what());
    }
}

std::unique_ptr<TrainerBackend> make_trainer(const std::string& locator, std::chrono::milliseconds timeout) {
    if (locator.empty()) {
        throw ConfigError("no trainer backend configured");
    }
    if (locator.starts_with("https://")) {
        throw ConfigError("https trainer endpoints are not supported; use http:// or a command");
    }
    if (locator.starts_with("http://")) {
        return std::make_unique<HttpTrainer>(locator, timeout);
    }
    if (locator == "builtin:baseline") {
        return std::make_unique<BaselineTrainer>();
    }
    return std::make_unique<SubprocessTrainer>(locator, timeout);
}

wire::TrainResponse call_trainer(const wire::TrainRequest& request, const std::string& locator) {
    auto backend = make_trainer(locator);
    auto response = backend->train(request);
    wire::validate_response(response, request);
    return response;
}

}  // namespace overlap
