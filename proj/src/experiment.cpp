#include "overlap/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>

#include "overlap/errors.hpp"
#include "overlap/hash.hpp"

namespace overlap {

namespace {

using nlohmann::json;

const std::set<std::string> kConfigKeys = {
    "name",         "context_variant", "extension_width", "learning_rates", "row_labels",
    "epochs",       "batch_size",      "weight_decay",    "max_length",     "seed",
    "warmup_steps", "max_grad_norm",   "trainer",         "criterion",      "parallel_folds",
};

template <typename T>
T field(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("experiment config: field '") + key + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return field<T>(j, key, T{});
}

json metrics_json(const metrics::MetricsReport& m) { return metrics::to_json(m); }

json row_values(const metrics::MetricsReport& m) {
    return json::array({m.roc_auc, m.best_threshold, m.recall_macro, m.precision_macro, m.balanced_accuracy,
                        m.f1_macro});
}

json epoch_json(const wire::EpochPoint& p) {
    json j{{"epoch", p.epoch}, {"val_loss", nullptr}, {"val_roc_auc", nullptr}};
    if (p.val_loss) {
        j["val_loss"] = *p.val_loss;
    }
    if (p.val_roc_auc) {
        j["val_roc_auc"] = *p.val_roc_auc;
    }
    return j;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (learning_rates.empty()) {
        throw ConfigError("experiment config: learning_rates must not be empty");
    }
    for (double lr : learning_rates) {
        if (!std::isfinite(lr) || lr <= 0.0) {
            throw ConfigError("experiment config: learning rates must be positive");
        }
    }
    if (!row_labels.empty() && row_labels.size() != learning_rates.size()) {
        throw ConfigError("experiment config: row_labels needs one label per learning rate");
    }
    if (epochs < 1) {
        throw ConfigError("experiment config: epochs must be >= 1");
    }
    if (batch_size < 1) {
        throw ConfigError("experiment config: batch_size must be >= 1");
    }
    if (!std::isfinite(weight_decay) || weight_decay < 0.0) {
        throw ConfigError("experiment config: weight_decay must be >= 0");
    }
    if (max_length < 1) {
        throw ConfigError("experiment config: max_length must be >= 1");
    }
    if (warmup_steps && *warmup_steps < 0) {
        throw ConfigError("experiment config: warmup_steps must be >= 0");
    }
    if (max_grad_norm && !(*max_grad_norm > 0.0)) {
        throw ConfigError("experiment config: max_grad_norm must be > 0");
    }
}

wire::Hyperparameters ExperimentConfig::hyperparameters(double learning_rate) const {
    wire::Hyperparameters hp;
    hp.learning_rate = learning_rate;
    hp.epochs = epochs;
    hp.batch_size = batch_size;
    hp.weight_decay = weight_decay;
    hp.max_length = max_length;
    hp.seed = seed;
    hp.warmup_steps = warmup_steps;
    hp.max_grad_norm = max_grad_norm;
    return hp;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("experiment config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!kConfigKeys.contains(key)) {
            throw ConfigError("experiment config: unknown field '" + key + "'");
        }
    }
    ExperimentConfig c;
    c.name = field<std::string>(j, "name", "");
    try {
        c.context_variant.kind = context_kind_from_string(field<std::string>(j, "context_variant", "both_speakers"));
    } catch (const Error& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    const auto width = field<std::int64_t>(j, "extension_width", 8);
    if (width < 0) {
        throw ConfigError("experiment config: extension_width must be >= 0");
    }
    c.context_variant.extension_width = static_cast<std::size_t>(width);
    c.learning_rates = field<std::vector<double>>(j, "learning_rates", {});
    c.row_labels = field<std::vector<std::string>>(j, "row_labels", {});
    c.epochs = field<int>(j, "epochs", c.epochs);
    c.batch_size = field<int>(j, "batch_size", c.batch_size);
    c.weight_decay = field<double>(j, "weight_decay", c.weight_decay);
    c.max_length = field<int>(j, "max_length", c.max_length);
    c.seed = field<std::uint64_t>(j, "seed", 0);
    c.warmup_steps = optional_field<int>(j, "warmup_steps");
    c.max_grad_norm = optional_field<double>(j, "max_grad_norm");
    c.trainer = field<std::string>(j, "trainer", "");
    try {
        c.criterion = metrics::criterion_from_string(field<std::string>(j, "criterion", "f1_macro"));
    } catch (const Error& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    c.parallel_folds = field<bool>(j, "parallel_folds", false);
    c.validate();
    return c;
}

json to_json(const ExperimentConfig& c) {
    json j{
        {"name", c.name},
        {"context_variant", std::string(to_string(c.context_variant.kind))},
        {"extension_width", c.context_variant.extension_width},
        {"learning_rates", c.learning_rates},
        {"row_labels", c.row_labels},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"weight_decay", c.weight_decay},
        {"max_length", c.max_length},
        {"seed", c.seed},
        {"warmup_steps", nullptr},
        {"max_grad_norm", nullptr},
        {"trainer", c.trainer},
        {"criterion", std::string(metrics::to_string(c.criterion))},
        {"parallel_folds", c.parallel_folds},
    };
    if (c.warmup_steps) {
        j["warmup_steps"] = *c.warmup_steps;
    }
    if (c.max_grad_norm) {
        j["max_grad_norm"] = *c.max_grad_norm;
    }
    return j;
}

std::string learning_rate_label(double learning_rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", learning_rate);
    std::string s = buf;
    // %g pads the exponent to two digits: 7e-06 -> 7e-6.
    const auto e = s.find('e');
    if (e != std::string::npos) {
        std::size_t digits = e + 2;
        while (digits + 1 < s.size() && s[digits] == '0') {
            s.erase(digits, 1);
        }
    }
    return "Lr: " + s;
}

std::string dataset_fingerprint(const FoldedDataset& folded) {
    std::ostringstream out;
    write_dataset(out, folded.inputs);
    std::uint64_t h = fnv1a(out.str());
    h = fnv1a("n_folds=" + std::to_string(folded.n_folds) + ";test_fold=" + std::to_string(folded.test_fold), h);
    return to_hex(h);
}

ExperimentReport run_experiment(const ExperimentConfig& config, const FoldedDataset& folded, TrainerBackend& backend) {
    config.validate();
    folded.validate();

    ExperimentReport report;
    report.config = config;
    report.dataset_hash = dataset_fingerprint(folded);
    report.n_examples = folded.inputs.size();
    report.n_folds = folded.n_folds;
    report.test_fold = folded.test_fold;

    CvConfig cv;
    cv.criterion = config.criterion;
    cv.parallel = config.parallel_folds;
    for (std::size_t i = 0; i < config.learning_rates.size(); ++i) {
        ExperimentRow row;
        row.learning_rate = config.learning_rates[i];
        row.label = config.row_labels.empty() ? learning_rate_label(row.learning_rate) : config.row_labels[i];
        cv.hyperparameters = config.hyperparameters(row.learning_rate);
        try {
            row.cv = cross_validate(folded, backend, cv);
        } catch (const std::exception& e) {
            std::throw_with_nested(Error("experiment '" + config.name + "', row '" + row.label + "': " + e.what()));
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const FoldedDataset& folded) {
    auto backend = make_trainer(config.trainer);
    return run_experiment(config, folded, *backend);
}

json to_json(const ExperimentReport& report) {
    json columns = json::array({"Examined Hyper Parameter"});
    for (auto c : metrics::kReportColumns) {
        columns.push_back(std::string(c));
    }

    json rows = json::array();
    json backends = json::array();
    for (const auto& row : report.rows) {
        json folds = json::array();
        for (const auto& f : row.cv.validation) {
            json curve = json::array();
            for (const auto& p : f.per_epoch) {
                curve.push_back(epoch_json(p));
            }
            folds.push_back({{"fold", f.fold}, {"metrics", metrics_json(f.metrics)}, {"per_epoch", curve}});
        }
        rows.push_back({
            {"label", row.label},
            {"learning_rate", row.learning_rate},
            {"values", row_values(row.cv.test)},
            {"test", metrics_json(row.cv.test)},
            {"pooled_validation_criterion", row.cv.pooled_validation_criterion},
            {"validation_folds", folds},
        });
        if (std::find(backends.begin(), backends.end(), row.cv.backend_info) == backends.end()) {
            backends.push_back(row.cv.backend_info);
        }
    }

    return json{
        {"name", report.config.name},
        {"columns", columns},
        {"rows", rows},
        {"provenance",
         {
             {"config", to_json(report.config)},
             {"dataset_hash", report.dataset_hash},
             {"n_examples", report.n_examples},
             {"n_folds", report.n_folds},
             {"test_fold", report.test_fold},
             {"threshold_selection", "pooled validation folds, " + std::string(metrics::to_string(report.config.criterion))},
             {"backend_info", backends},
         }},
    };
}

std::string render_table(const ExperimentReport& report) {
    std::ostringstream out;
    out << "Examined Hyper Parameter";
    for (auto c : metrics::kReportColumns) {
        out << '\t' << c;
    }
    out << '\n';
    char buf[32];
    for (const auto& row : report.rows) {
        out << row.label;
        for (const auto& v : row_values(row.cv.test)) {
            std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
            out << '\t' << buf;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace overlap
