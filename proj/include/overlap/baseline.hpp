#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "overlap/dataset.hpp"

namespace overlap::baseline {

/// Lowercases (Unicode simple case mapping) and splits on runs of anything that is not a
/// letter, digit or combining mark. Invalid UTF-8 bytes act as separators.
std::vector<std::string> tokenize(std::string_view text);

struct NgramRange {
    int lo = 1;
    int hi = 2;
};

/// Role-prefixed n-grams of one example: "a:" for the interrupted speaker, "b:" for the interrupter.
std::vector<std::string> extract_ngrams(std::string_view segment_a, std::string_view segment_b, NgramRange range);

class Vocabulary {
public:
    Vocabulary() = default;
    /// `terms` must be sorted and unique; `df` aligned with it.
    Vocabulary(std::vector<std::string> terms, std::vector<std::uint32_t> df, std::uint32_t n_documents,
               NgramRange range, std::uint32_t min_df);

    std::size_t size() const noexcept { return terms_.size(); }
    std::optional<std::uint32_t> find(std::string_view term) const;
    const std::string& term(std::size_t i) const { return terms_.at(i); }
    std::uint32_t df(std::size_t i) const { return df_.at(i); }
    /// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
    double idf(std::size_t i) const;

    std::uint32_t n_documents() const noexcept { return n_documents_; }
    NgramRange ngram_range() const noexcept { return range_; }
    std::uint32_t min_df() const noexcept { return min_df_; }

    bool operator==(const Vocabulary& o) const {
        return terms_ == o.terms_ && df_ == o.df_ && n_documents_ == o.n_documents_ && range_.lo == o.range_.lo &&
               range_.hi == o.range_.hi && min_df_ == o.min_df_;
    }

private:
    std::vector<std::string> terms_;
    std::vector<std::uint32_t> df_;
    std::map<std::string, std::uint32_t, std::less<>> index_;
    std::uint32_t n_documents_ = 0;
    NgramRange range_;
    std::uint32_t min_df_ = 1;
};

using TextPair = std::pair<std::string, std::string>;

/// Document frequency counted per example. Features with df < min_df are dropped; indices
/// follow byte-wise lexicographic order of the prefixed n-gram. Throws UsageError on an
/// empty corpus or an invalid range.
Vocabulary fit_vocabulary(std::span<const TextPair> corpus, NgramRange range = {}, std::uint32_t min_df = 2);
Vocabulary fit_vocabulary(std::span<const ModelInput> corpus, NgramRange range = {}, std::uint32_t min_df = 2);

struct SparseVector {
    std::size_t dimension = 0;
    /// Sorted by index, unique.
    std::vector<std::pair<std::uint32_t, double>> entries;

    bool operator==(const SparseVector&) const = default;
};

/// tf * idf, L2-normalized. Out-of-vocabulary n-grams are ignored; all-OOV gives the zero vector.
SparseVector featurize(std::string_view segment_a, std::string_view segment_b, const Vocabulary& vocab);
SparseVector featurize(const ModelInput& input, const Vocabulary& vocab);

struct TrainOptions {
    double l2_lambda = 1e-4;
    double learning_rate = 0.1;
    int max_epochs = 200;
    double tol = 1e-7;
};

struct LogRegModel {
    /// V feature weights followed by the bias.
    std::vector<double> weights;
    double l2_lambda = 0.0;
    std::vector<double> training_log;

    std::size_t dimension() const noexcept { return weights.empty() ? 0 : weights.size() - 1; }
};

/// Mean negative log-likelihood plus (l2_lambda / 2) * ||w||^2 (bias excluded), and its gradient.
/// labels are 0/1 with 1 = competitive.
std::pair<double, std::vector<double>> loss_and_gradient(std::span<const double> weights,
                                                         std::span<const SparseVector> features,
                                                         std::span<const int> labels, double l2_lambda);

/// Full-batch gradient descent from zero weights. training_log[e] is the objective at the start
/// of epoch e; stops after max_epochs or once an epoch improves the objective by less than tol.
/// Throws TrainingError unless both classes are present.
LogRegModel train_logreg(std::span<const SparseVector> features, std::span<const int> labels,
                         const TrainOptions& options = {});

/// Calls `on_epoch(epoch, model)` after each epoch's update; used for per-epoch validation curves.
LogRegModel train_logreg(std::span<const SparseVector> features, std::span<const int> labels,
                         const TrainOptions& options, const std::function<void(int, const LogRegModel&)>& on_epoch);

/// P(competitive). Throws UsageError when x's dimension differs from the model's.
double predict_proba(const LogRegModel& model, const SparseVector& x);

struct BaselineModel {
    Vocabulary vocabulary;
    LogRegModel logreg;
};

struct BaselineOptions {
    NgramRange ngrams;
    std::uint32_t min_df = 2;
    TrainOptions train;
};

BaselineModel train_baseline(std::span<const ModelInput> train, const BaselineOptions& options = {});
double score(const BaselineModel& model, std::string_view segment_a, std::string_view segment_b);

/// Line-delimited model file; see docs/formats.md.
void save_model(std::ostream& out, const BaselineModel& model);
BaselineModel load_model(std::istream& in);

}  // namespace overlap::baseline
