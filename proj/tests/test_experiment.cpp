#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "overlap/errors.hpp"
#include "overlap/experiment.hpp"
#include "overlap/synth.hpp"
#include "stub_backends.hpp"
#include "support.hpp"

using namespace overlap;
using nlohmann::json;

namespace {

FoldedDataset labeled_dataset(std::size_t n) {
    FoldedDataset ds;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i % 2 == 0;
        labels.push_back(pos ? Label::competitive : Label::non_competitive);
        ds.inputs.push_back({"e" + std::to_string(i), "a", pos ? "pos" : "neg", labels.back(), 0, false});
    }
    const auto folds = assign_folds(labels, 10, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ds.inputs[i].fold = folds[i];
    }
    return ds;
}

json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    return json::parse(in);
}

std::set<std::string> words(const std::string& text) {
    std::set<std::string> out;
    std::istringstream in(text);
    for (std::string w; in >> w;) {
        out.insert(w);
    }
    return out;
}

SynthSpec small_spec(std::uint64_t seed = 7) {
    SynthSpec s;
    s.n_dialogues = 10;
    s.seed = seed;
    s.lexicons = load_lexicons(default_lexicon_dir());
    return s;
}

}  // namespace

TEST_CASE("experiment config defaults follow the published training setup") {
    const auto c = experiment_config_from_json(json{{"name", "x"}, {"learning_rates", {7e-6}}});
    CHECK(c.epochs == 5);
    CHECK(c.batch_size == 16);
    CHECK(c.weight_decay == 0.01);
    CHECK(c.max_length == 128);
    CHECK(c.context_variant.kind == ContextVariant::Kind::both_speakers);
    CHECK(c.criterion == metrics::Criterion::f1_macro);
    const auto hp = c.hyperparameters(7e-6);
    CHECK(hp.learning_rate == 7e-6);
    CHECK(hp.epochs == 5);
    CHECK(experiment_config_from_json(to_json(c)).learning_rates == c.learning_rates);
}

TEST_CASE("experiment config errors") {
    const json base{{"name", "x"}, {"learning_rates", {7e-6}}};
    const auto with = [&](const char* key, json v) {
        auto j = base;
        j[key] = std::move(v);
        return j;
    };
    CHECK_THROWS_AS(experiment_config_from_json(with("learning_rates", json::array())), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(with("learning_rates", {-1.0})), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(with("epochs", 0)), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(with("epochs", "five")), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(with("weight_decay", -0.1)), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(with("row_labels", {"a", "b"})), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(with("context_variant", "all")), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(with("criterion", "accuracy")), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(with("lr", 1)), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(json::array()), ConfigError);
}

TEST_CASE("learning rate labels") {
    CHECK(learning_rate_label(7e-6) == "Lr: 7e-6");
    CHECK(learning_rate_label(1e-6) == "Lr: 1e-6");
    CHECK(learning_rate_label(2.5e-5) == "Lr: 2.5e-5");
}

TEST_CASE("shipped experiment configs reproduce the published grid") {
    const std::filesystem::path dir = std::filesystem::path(OVERLAP_SOURCE_DIR) / "configs";
    const auto exp1a = experiment_config_from_json(read_json(dir / "exp1-interrupter.json"));
    const auto exp1b = experiment_config_from_json(read_json(dir / "exp1-both.json"));
    const auto exp2 = experiment_config_from_json(read_json(dir / "exp2-learning-rate.json"));
    const auto exp3 = experiment_config_from_json(read_json(dir / "exp3-extended.json"));
    CHECK(exp1a.context_variant.kind == ContextVariant::Kind::interrupter_only);
    CHECK(exp1b.context_variant.kind == ContextVariant::Kind::both_speakers);
    CHECK(exp1a.learning_rates == std::vector<double>{3e-6});
    CHECK(exp1b.learning_rates == std::vector<double>{3e-6});
    CHECK(exp2.learning_rates == std::vector<double>{1e-6, 3e-6, 5e-6, 7e-6, 9e-6});
    CHECK(exp3.context_variant.kind == ContextVariant::Kind::extended);
    CHECK(exp3.context_variant.extension_width == 8);
    CHECK(exp3.learning_rates == std::vector<double>{7e-6});

    const auto table = read_json(std::filesystem::path(OVERLAP_SOURCE_DIR) / "data/reference/published-results.json");
    std::vector<std::string> labels;
    for (const auto* c : {&exp1a, &exp1b, &exp2, &exp3}) {
        for (std::size_t i = 0; i < c->learning_rates.size(); ++i) {
            labels.push_back(c->row_labels.empty() ? learning_rate_label(c->learning_rates[i]) : c->row_labels[i]);
        }
    }
    std::vector<std::string> published;
    for (const auto& e : table["experiments"]) {
        for (const auto& r : e["rows"]) {
            published.push_back(r["label"]);
        }
    }
    CHECK(labels == published);

    const auto spec = synth_spec_from_json(read_json(dir / "synth-desk.json"));
    CHECK(spec.n_dialogues == 200);
    CHECK(spec.seed == 7);
    CHECK(spec.noise_rate == 0.1);
}

TEST_CASE("a five-rate grid gives five rows with the published columns") {
    ExperimentConfig c;
    c.name = "grid";
    c.learning_rates = {1e-6, 3e-6, 5e-6, 7e-6, 9e-6};
    const auto ds = labeled_dataset(60);
    auto backend = testing::oracle_backend();
    const auto report = run_experiment(c, ds, backend);
    REQUIRE(report.rows.size() == 5);
    CHECK(backend.requests.size() == 50);
    CHECK(backend.requests[10].hyperparameters.learning_rate == 3e-6);

    const auto j = to_json(report);
    CHECK(j["columns"] == json{"Examined Hyper Parameter", "ROC AUC binary", "Best Threshold", "Recall macro",
                               "Precision macro", "Balanced Accuracy", "F1 macro"});
    REQUIRE(j["rows"].size() == 5);
    CHECK(j["rows"][3]["label"] == "Lr: 7e-6");
    CHECK(j["rows"][0]["values"].size() == 6);
    CHECK(j["rows"][0]["validation_folds"].size() == 9);
    CHECK(j["rows"][0]["validation_folds"][0]["per_epoch"].size() == 5);
    CHECK(j["provenance"]["n_examples"] == 60);
    CHECK(j["provenance"]["test_fold"] == 9);

    const auto table = render_table(report);
    CHECK(table.starts_with("Examined Hyper Parameter\tROC AUC binary"));
    CHECK(std::count(table.begin(), table.end(), '\n') == 6);
}

TEST_CASE("a constant backend gives one chance-level row") {
    ExperimentConfig c;
    c.name = "const";
    c.learning_rates = {7e-6};
    auto backend = testing::constant_backend();
    const auto report = run_experiment(c, labeled_dataset(40), backend);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].cv.test.roc_auc == 0.5);
    CHECK(to_json(report)["rows"][0]["values"][0] == 0.5);
}

TEST_CASE("report bytes are identical for identical inputs") {
    ExperimentConfig c;
    c.name = "det";
    c.learning_rates = {3e-6, 7e-6};
    const auto ds = labeled_dataset(50);
    auto a = BaselineTrainer{};
    auto b = BaselineTrainer{};
    CHECK(to_json(run_experiment(c, ds, a)).dump(2) == to_json(run_experiment(c, ds, b)).dump(2));
    CHECK(dataset_fingerprint(ds) == dataset_fingerprint(ds));
    auto other = ds;
    other.inputs[0].segment_b = "changed";
    CHECK(dataset_fingerprint(other) != dataset_fingerprint(ds));
}

TEST_CASE("a failing row aborts the experiment with row and fold in the chain") {
    ExperimentConfig c;
    c.name = "boom";
    c.learning_rates = {1e-6, 3e-6};
    class Bad : public TrainerBackend {
    public:
        wire::TrainResponse train(const wire::TrainRequest& r) override {
            wire::TrainResponse out;
            for (int e = 1; e <= r.hyperparameters.epochs; ++e) {
                out.per_epoch.push_back({e, 0.1, 0.5});
            }
            out.eval_scores.assign(r.evaluation.size(), r.hyperparameters.learning_rate > 2e-6 ? 1.3 : 0.5);
            return out;
        }
        std::string describe() const override { return "bad"; }
    } bad;
    try {
        run_experiment(c, labeled_dataset(40), bad);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("row 'Lr: 3e-6'") != std::string::npos);
        try {
            std::rethrow_if_nested(e);
        } catch (const FoldError& fe) {
            CHECK(fe.fold() == 0);
            CHECK_THROWS_AS(std::rethrow_if_nested(fe), ProtocolError);
        }
    }
}

TEST_CASE("synth spec parsing and validation") {
    auto s = small_spec();
    CHECK_NOTHROW(s.validate());
    auto bad = s;
    bad.noise_rate = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = s;
    bad.lexicons.cooperative.push_back(bad.lexicons.competitive[0]);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = s;
    bad.lexicons.competitive.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = s;
    bad.lexicons.competitive.push_back("two words");
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    CHECK_THROWS_AS(synth_spec_from_json(json{{"n_dialogue", 3}}), ConfigError);
    CHECK_THROWS_AS(synth_spec_from_json(json{{"turns_per_dialogue", {5}}}), ConfigError);
    CHECK_THROWS_AS(synth_spec_from_json(json{{"overlap_rate", "high"}}), ConfigError);
    const auto parsed = synth_spec_from_json(json{{"n_dialogues", 3}, {"competitive_lexicon", {"стоп"}}});
    CHECK(parsed.n_dialogues == 3);
    CHECK(parsed.lexicons.competitive == std::vector<std::string>{"стоп"});
    CHECK_FALSE(parsed.lexicons.cooperative.empty());
    CHECK(synth_spec_from_json(to_json(s)).lexicons.neutral == s.lexicons.neutral);
}

TEST_CASE("synthetic corpus is deterministic per seed") {
    testing::TempDir a, b, c;
    write_corpus(generate_synthetic_corpus(small_spec()), a.path());
    write_corpus(generate_synthetic_corpus(small_spec()), b.path());
    write_corpus(generate_synthetic_corpus(small_spec(8)), c.path());
    CHECK(testing::slurp(a / "transcripts.csv") == testing::slurp(b / "transcripts.csv"));
    CHECK(testing::slurp(a / "truth.jsonl") == testing::slurp(b / "truth.jsonl"));
    CHECK(testing::slurp(a / "transcripts.csv") != testing::slurp(c / "transcripts.csv"));
}

TEST_CASE("synthetic transcripts parse back to the generated dialogues") {
    const auto corpus = generate_synthetic_corpus(small_spec());
    std::ostringstream csv;
    write_transcript_csv(csv, corpus.dialogues);
    std::istringstream in(csv.str());
    CHECK(parse_transcript(in) == corpus.dialogues);
}

TEST_CASE("truth records are exactly the overlaps that pass the default filters") {
    auto spec = small_spec();
    spec.n_dialogues = 40;
    const auto corpus = generate_synthetic_corpus(spec);
    std::vector<std::string> expected;
    for (const auto& d : corpus.dialogues) {
        for (const auto& e : filter_overlaps(build_turn_pairs(d))) {
            expected.push_back(e.event_id);
        }
    }
    std::vector<std::string> truth;
    for (const auto& t : corpus.truth) {
        truth.push_back(t.event_id);
        CHECK(t.event_id == make_event_id(t.dialogue_id, t.k_index));
    }
    CHECK(truth == expected);
    CHECK(truth.size() > 20);

    std::size_t distractors = 0;
    for (const auto& d : corpus.dialogues) {
        for (const auto& e : build_turn_pairs(d)) {
            distractors += e.kind == SwitchKind::overlap && filter_overlaps({e}).empty();
        }
    }
    CHECK(distractors > 0);
}

TEST_CASE("without noise every competitive interrupter carries a competitive marker and no cooperative one") {
    auto spec = small_spec(3);
    spec.n_dialogues = 60;
    spec.noise_rate = 0.0;
    const auto corpus = generate_synthetic_corpus(spec);
    const std::set<std::string> comp(spec.lexicons.competitive.begin(), spec.lexicons.competitive.end());
    const std::set<std::string> coop(spec.lexicons.cooperative.begin(), spec.lexicons.cooperative.end());
    std::map<std::string, const Dialogue*> by_id;
    for (const auto& d : corpus.dialogues) {
        by_id[d.dialogue_id] = &d;
    }
    std::size_t competitive = 0;
    for (const auto& t : corpus.truth) {
        const auto w = words(by_id.at(t.dialogue_id)->turns.at(t.k_index + 1).text);
        const auto count_in = [&](const std::set<std::string>& lex) {
            return std::count_if(w.begin(), w.end(), [&](const auto& x) { return lex.contains(x); });
        };
        if (t.label == Label::competitive) {
            ++competitive;
            CHECK(count_in(comp) >= 1);
            CHECK(count_in(coop) == 0);
        } else {
            CHECK(count_in(coop) >= 1);
            CHECK(count_in(comp) == 0);
        }
    }
    CHECK(competitive > 0);
}

TEST_CASE("overlap_rate 0 gives no overlaps at all") {
    auto spec = small_spec();
    spec.overlap_rate = 0.0;
    const auto corpus = generate_synthetic_corpus(spec);
    CHECK(corpus.truth.empty());
    for (const auto& d : corpus.dialogues) {
        for (const auto& e : build_turn_pairs(d)) {
            CHECK(e.kind != SwitchKind::overlap);
        }
    }
}

TEST_CASE("truth file round trip") {
    const auto corpus = generate_synthetic_corpus(small_spec());
    std::stringstream file;
    write_truth(file, corpus.truth);
    CHECK(read_truth(file) == corpus.truth);
    std::istringstream bad("{\"dialogue_id\":\"x\"}\n");
    CHECK_THROWS(read_truth(bad));
}

TEST_CASE("ground-truth labeling feeds every overlap into the dataset exactly once") {
    testing::TempDir dir;
    auto spec = small_spec(5);
    spec.n_dialogues = 30;
    const auto corpus = generate_synthetic_corpus(spec);
    AnnotationStore store(dir / "labels.jsonl", corpus.dialogues);
    std::vector<SwitchEvent> candidates;
    for (const auto& d : corpus.dialogues) {
        const auto kept = filter_overlaps(build_turn_pairs(d));
        candidates.insert(candidates.end(), kept.begin(), kept.end());
    }
    store.enqueue_candidates(candidates);
    auto truth = corpus.truth;
    truth.push_back({"synth-99999", 0, make_event_id("synth-99999", 0), Label::competitive});
    const auto summary = label_with_truth(store, truth);
    CHECK(summary.labeled == corpus.truth.size());
    CHECK(summary.missing_truth == 0);
    CHECK(summary.not_queued == 1);

    DatasetOptions opt;
    const auto ds = build_folded_dataset(store.export_labels(), corpus.dialogues, opt);
    std::map<std::string, int> seen;
    for (const auto& m : ds.inputs) {
        ++seen[m.event_id];
    }
    CHECK(seen.size() == corpus.truth.size());
    for (const auto& t : corpus.truth) {
        CHECK(seen[t.event_id] == 1);
    }
}
