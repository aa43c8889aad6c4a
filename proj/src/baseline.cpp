#include "overlap/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "overlap/errors.hpp"

namespace overlap::baseline {

namespace {

bool is_token_char(UChar32 c) {
    if (u_isalnum(c)) {
        return true;
    }
    const auto type = u_charType(c);
    return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK;
}

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_labels(std::span<const SparseVector> features, std::span<const int> labels) {
    if (features.size() != labels.size()) {
        throw UsageError("features and labels differ in length");
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(s, i, length, c);
        if (c >= 0 && is_token_char(c)) {
            const UChar32 lower = u_tolower(c);
            char buf[U8_MAX_LENGTH];
            int32_t n = 0;
            U8_APPEND_UNSAFE(buf, n, lower);
            current.append(buf, static_cast<std::size_t>(n));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<std::string> extract_ngrams(std::string_view segment_a, std::string_view segment_b, NgramRange range) {
    std::vector<std::string> grams;
    const auto add = [&](std::string_view text, const char* prefix) {
        const auto tokens = tokenize(text);
        for (int n = range.lo; n <= range.hi; ++n) {
            for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
                std::string g = prefix;
                for (int k = 0; k < n; ++k) {
                    if (k > 0) {
                        g.push_back(' ');
                    }
                    g += tokens[i + static_cast<std::size_t>(k)];
                }
                grams.push_back(std::move(g));
            }
        }
    };
    add(segment_a, "a:");
    add(segment_b, "b:");
    return grams;
}

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::uint32_t> df, std::uint32_t n_documents,
                       NgramRange range, std::uint32_t min_df)
    : terms_(std::move(terms)), df_(std::move(df)), n_documents_(n_documents), range_(range), min_df_(min_df) {
    if (terms_.size() != df_.size()) {
        throw UsageError("vocabulary terms and document frequencies differ in length");
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (i > 0 && !(terms_[i - 1] < terms_[i])) {
            throw UsageError("vocabulary terms must be sorted and unique");
        }
        index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
    }
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view term) const {
    auto it = index_.find(term);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

double Vocabulary::idf(std::size_t i) const {
    return std::log((1.0 + n_documents_) / (1.0 + df_.at(i))) + 1.0;
}

Vocabulary fit_vocabulary(std::span<const TextPair> corpus, NgramRange range, std::uint32_t min_df) {
    if (corpus.empty()) {
        throw UsageError("fit_vocabulary: empty corpus");
    }
    if (range.lo < 1 || range.hi < range.lo) {
        throw UsageError("fit_vocabulary: invalid n-gram range");
    }
    std::map<std::string, std::uint32_t> df;
    for (const auto& [a, b] : corpus) {
        auto grams = extract_ngrams(a, b, range);
        std::sort(grams.begin(), grams.end());
        grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
        for (auto& g : grams) {
            ++df[std::move(g)];
        }
    }
    std::vector<std::string> terms;
    std::vector<std::uint32_t> counts;
    for (auto& [term, count] : df) {
        if (count >= min_df) {
            terms.push_back(term);
            counts.push_back(count);
        }
    }
    return Vocabulary(std::move(terms), std::move(counts), static_cast<std::uint32_t>(corpus.size()), range, min_df);
}

Vocabulary fit_vocabulary(std::span<const ModelInput> corpus, NgramRange range, std::uint32_t min_df) {
    std::vector<TextPair> pairs;
    pairs.reserve(corpus.size());
    for (const auto& m : corpus) {
        pairs.emplace_back(m.segment_a, m.segment_b);
    }
    return fit_vocabulary(std::span<const TextPair>(pairs), range, min_df);
}

SparseVector featurize(std::string_view segment_a, std::string_view segment_b, const Vocabulary& vocab) {
    std::map<std::uint32_t, double> tf;
    for (const auto& g : extract_ngrams(segment_a, segment_b, vocab.ngram_range())) {
        if (auto idx = vocab.find(g)) {
            tf[*idx] += 1.0;
        }
    }
    SparseVector v;
    v.dimension = vocab.size();
    double norm2 = 0.0;
    for (const auto& [idx, count] : tf) {
        const double w = count * vocab.idf(idx);
        v.entries.emplace_back(idx, w);
        norm2 += w * w;
    }
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& [idx, w] : v.entries) {
            w *= inv;
        }
    }
    return v;
}

SparseVector featurize(const ModelInput& input, const Vocabulary& vocab) {
    return featurize(input.segment_a, input.segment_b, vocab);
}

std::pair<double, std::vector<double>> loss_and_gradient(std::span<const double> weights,
                                                         std::span<const SparseVector> features,
                                                         std::span<const int> labels, double l2_lambda) {
    check_labels(features, labels);
    if (weights.empty()) {
        throw UsageError("loss_and_gradient: empty weight vector");
    }
    const std::size_t dim = weights.size() - 1;
    const double bias = weights[dim];
    std::vector<double> grad(weights.size(), 0.0);
    double loss = 0.0;
    const double n = static_cast<double>(features.size());

    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& x = features[i];
        if (x.dimension != dim) {
            throw UsageError("feature vector dimension " + std::to_string(x.dimension) + " != model dimension " +
                             std::to_string(dim));
        }
        double z = bias;
        for (const auto& [idx, val] : x.entries) {
            z += weights[idx] * val;
        }
        const double y = labels[i] != 0 ? 1.0 : 0.0;
        loss += softplus(z) - y * z;
        const double residual = (sigmoid(z) - y) / n;
        for (const auto& [idx, val] : x.entries) {
            grad[idx] += residual * val;
        }
        grad[dim] += residual;
    }
    loss /= n;

    double penalty = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        penalty += weights[j] * weights[j];
        grad[j] += l2_lambda * weights[j];
    }
    loss += 0.5 * l2_lambda * penalty;
    return {loss, std::move(grad)};
}

LogRegModel train_logreg(std::span<const SparseVector> features, std::span<const int> labels,
                         const TrainOptions& options) {
    return train_logreg(features, labels, options, {});
}

LogRegModel train_logreg(std::span<const SparseVector> features, std::span<const int> labels,
                         const TrainOptions& options, const std::function<void(int, const LogRegModel&)>& on_epoch) {
    check_labels(features, labels);
    const auto positives = std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; });
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
        throw TrainingError("train_logreg: both classes must be present");
    }
    if (options.learning_rate <= 0.0 || options.max_epochs < 1 || options.l2_lambda < 0.0) {
        throw UsageError("train_logreg: invalid options");
    }

    LogRegModel model;
    model.weights.assign(features.front().dimension + 1, 0.0);
    model.l2_lambda = options.l2_lambda;

    for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
        auto [loss, grad] = loss_and_gradient(model.weights, features, labels, options.l2_lambda);
        model.training_log.push_back(loss);
        const auto& log = model.training_log;
        if (log.size() >= 2 && log[log.size() - 2] - loss < options.tol) {
            break;
        }
        for (std::size_t j = 0; j < model.weights.size(); ++j) {
            model.weights[j] -= options.learning_rate * grad[j];
        }
        if (on_epoch) {
            on_epoch(epoch, model);
        }
    }
    return model;
}

double predict_proba(const LogRegModel& model, const SparseVector& x) {
    if (model.weights.empty() || x.dimension != model.dimension()) {
        throw UsageError("predict_proba: feature dimension " + std::to_string(x.dimension) +
                         " does not match model dimension " + std::to_string(model.dimension()));
    }
    double z = model.weights.back();
    for (const auto& [idx, val] : x.entries) {
        z += model.weights[idx] * val;
    }
    return sigmoid(z);
}

BaselineModel train_baseline(std::span<const ModelInput> train, const BaselineOptions& options) {
    BaselineModel model;
    model.vocabulary = fit_vocabulary(train, options.ngrams, options.min_df);
    std::vector<SparseVector> features;
    std::vector<int> labels;
    features.reserve(train.size());
    for (const auto& m : train) {
        features.push_back(featurize(m, model.vocabulary));
        labels.push_back(m.is_competitive() ? 1 : 0);
    }
    model.logreg = train_logreg(features, labels, options.train);
    return model;
}

double score(const BaselineModel& model, std::string_view segment_a, std::string_view segment_b) {
    return predict_proba(model.logreg, featurize(segment_a, segment_b, model.vocabulary));
}

namespace {
constexpr const char* kModelFormat = "overlap-baseline-logreg";
constexpr int kModelVersion = 1;
}  // namespace

void save_model(std::ostream& out, const BaselineModel& model) {
    const auto& vocab = model.vocabulary;
    nlohmann::json header{
        {"format", kModelFormat},
        {"version", kModelVersion},
        {"ngram_range", {vocab.ngram_range().lo, vocab.ngram_range().hi}},
        {"min_df", vocab.min_df()},
        {"n_documents", vocab.n_documents()},
        {"n_features", vocab.size()},
        {"l2_lambda", model.logreg.l2_lambda},
        {"bias", model.logreg.weights.empty() ? 0.0 : model.logreg.weights.back()},
        {"training_log", model.logreg.training_log},
    };
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        out << nlohmann::json{{"ngram", vocab.term(i)}, {"df", vocab.df(i)}, {"weight", model.logreg.weights.at(i)}}
                   .dump()
            << '\n';
    }
}

BaselineModel load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("model file is empty");
    }
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.at("format").get<std::string>() != kModelFormat ||
            header.at("version").get<int>() != kModelVersion) {
            throw ValidationError("unsupported model format or version");
        }
        const auto n_features = header.at("n_features").get<std::size_t>();
        std::vector<std::string> terms;
        std::vector<std::uint32_t> df;
        std::vector<double> weights;
        terms.reserve(n_features);
        while (terms.size() < n_features && std::getline(in, line)) {
            const auto j = nlohmann::json::parse(line);
            terms.push_back(j.at("ngram").get<std::string>());
            df.push_back(j.at("df").get<std::uint32_t>());
            weights.push_back(j.at("weight").get<double>());
        }
        if (terms.size() != n_features) {
            throw ValidationError("model file truncated: expected " + std::to_string(n_features) + " features");
        }
        const auto range = header.at("ngram_range");
        BaselineModel model;
        model.vocabulary = Vocabulary(std::move(terms), std::move(df), header.at("n_documents").get<std::uint32_t>(),
                                      NgramRange{range.at(0).get<int>(), range.at(1).get<int>()},
                                      header.at("min_df").get<std::uint32_t>());
        weights.push_back(header.at("bias").get<double>());
        model.logreg.weights = std::move(weights);
        model.logreg.l2_lambda = header.at("l2_lambda").get<double>();
        model.logreg.training_log = header.at("training_log").get<std::vector<double>>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model file: ") + e.what());
    }
}

}  // namespace overlap::baseline
