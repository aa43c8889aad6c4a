#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "overlap/cross_validation.hpp"
#include "overlap/dataset.hpp"
#include "overlap/metrics.hpp"
#include "overlap/trainer.hpp"

namespace overlap {

/// Declarative experiment description; JSON schema in docs/formats.md.
struct ExperimentConfig {
    std::string name;
    ContextVariant context_variant;
    std::vector<double> learning_rates;
    /// One label per learning rate; defaults to "Lr: <rate>".
    std::vector<std::string> row_labels;
    int epochs = 5;
    int batch_size = 16;
    double weight_decay = 0.01;
    int max_length = 128;
    std::uint64_t seed = 0;
    std::optional<int> warmup_steps;
    std::optional<double> max_grad_norm;
    std::string trainer;
    metrics::Criterion criterion = metrics::Criterion::f1_macro;
    /// Run the validation folds of one row concurrently.
    bool parallel_folds = false;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    wire::Hyperparameters hyperparameters(double learning_rate) const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

struct ExperimentRow {
    std::string label;
    double learning_rate = 0.0;
    CvReport cv;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<ExperimentRow> rows;
    std::string dataset_hash;
    std::size_t n_examples = 0;
    int n_folds = 0;
    int test_fold = 0;
};

/// "Lr: 7e-6" style row label.
std::string learning_rate_label(double learning_rate);

/// FNV-1a over the serialized dataset and its fold layout.
std::string dataset_fingerprint(const FoldedDataset& folded);

/// One cross_validate run per learning rate, in config order. Any fold failure aborts the
/// experiment; the FoldError names the row.
ExperimentReport run_experiment(const ExperimentConfig& config, const FoldedDataset& folded, TrainerBackend& backend);

/// Opens the backend named by config.trainer.
ExperimentReport run_experiment(const ExperimentConfig& config, const FoldedDataset& folded);

/// Report document: the result table plus validation curves and provenance. Contains no
/// timestamps, so equal inputs give equal bytes.
nlohmann::json to_json(const ExperimentReport& report);

/// Plain-text rendering of the result table.
std::string render_table(const ExperimentReport& report);

}  // namespace overlap
