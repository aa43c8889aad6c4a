#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "overlap/annotation.hpp"
#include "overlap/annotation_server.hpp"
#include "overlap/baseline.hpp"
#include "overlap/dataset.hpp"
#include "overlap/errors.hpp"
#include "overlap/experiment.hpp"
#include "overlap/metrics.hpp"
#include "overlap/overlap_engine.hpp"
#include "overlap/synth.hpp"
#include "overlap/trainer.hpp"
#include "overlap/transcript.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace overlap;

namespace {

// Exit codes; documented in README.md.
enum Exit : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kBadInput = 3,
    kNotFound = 4,
    kBackend = 5,
    kTraining = 6,
};

class Input {
public:
    explicit Input(const std::string& path) {
        if (path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw NotFoundError("cannot open " + path);
            }
        }
    }
    std::istream& get() { return file_.is_open() ? file_ : std::cin; }

private:
    std::ifstream file_;
};

class Output {
public:
    explicit Output(const std::string& path) : path_(path) {
        if (path != "-") {
            if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
                fs::create_directories(parent);
            }
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw Error("cannot write " + path);
            }
        }
    }
    std::ostream& get() { return file_.is_open() ? file_ : std::cout; }
    void close() {
        get().flush();
        if (!get()) {
            throw Error("write failed: " + path_);
        }
    }

private:
    std::string path_;
    std::ofstream file_;
};

std::vector<Dialogue> load_turns(const std::string& path) {
    Input in(path);
    return read_turns(in.get());
}

std::vector<SwitchEvent> load_events(const std::string& path) {
    Input in(path);
    return read_events(in.get());
}

FoldedDataset load_dataset(const std::string& path, int n_folds, int test_fold) {
    Input in(path);
    FoldedDataset folded;
    folded.inputs = read_dataset(in.get());
    folded.n_folds = n_folds;
    folded.test_fold = test_fold;
    folded.validate();
    return folded;
}

json read_json_file(const std::string& path) {
    Input in(path);
    try {
        return json::parse(in.get());
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void print_chain(const std::exception& e, int depth = 0) {
    std::cerr << (depth == 0 ? "error: " : "  caused by: ") << e.what() << '\n';
    if (const auto* b = dynamic_cast<const BackendError*>(&e); b && !b->diagnostics().empty()) {
        std::cerr << "  backend diagnostics:\n" << b->diagnostics();
        if (b->diagnostics().back() != '\n') {
            std::cerr << '\n';
        }
    }
    if (const auto* p = dynamic_cast<const ProtocolError*>(&e); p && !p->raw_message().empty()) {
        std::cerr << "  offending message: " << p->raw_message().substr(0, 2000) << '\n';
    }
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        print_chain(inner, depth + 1);
    }
}

int exit_code_of(const std::exception& e) {
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        return exit_code_of(inner);
    }
    if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) {
        return kUsage;
    }
    if (dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const RowError*>(&e) ||
        dynamic_cast<const ValidationError*>(&e)) {
        return kBadInput;
    }
    if (dynamic_cast<const NotFoundError*>(&e)) {
        return kNotFound;
    }
    if (dynamic_cast<const BackendError*>(&e) || dynamic_cast<const ProtocolError*>(&e)) {
        return kBackend;
    }
    if (dynamic_cast<const TrainingError*>(&e) || dynamic_cast<const UndefinedMetricError*>(&e)) {
        return kTraining;
    }
    return kFailure;
}

// ---- ingest / pairs / filter --------------------------------------------------------------

struct IngestArgs {
    std::string input = "-";
    std::string out = "-";
    std::string map;
    std::string delimiter = ",";
    std::string time_unit = "ms";
};

void run_ingest(const IngestArgs& a) {
    FormatConfig cfg;
    if (a.delimiter == "\\t" || a.delimiter == "tab") {
        cfg.delimiter = '\t';
    } else if (a.delimiter.size() == 1) {
        cfg.delimiter = a.delimiter[0];
    } else {
        throw UsageError("--delimiter must be a single character or 'tab'");
    }
    cfg.time_unit = a.time_unit == "s" ? TimeUnit::seconds : TimeUnit::milliseconds;
    if (!a.map.empty()) {
        cfg = parse_column_map(a.map, cfg);
    }
    std::vector<Dialogue> dialogues;
    if (a.input != "-" && fs::is_directory(a.input)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(a.input)) {
            const auto ext = entry.path().extension();
            if (entry.is_regular_file() && (ext == ".csv" || ext == ".tsv" || ext == ".txt")) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        std::set<std::string> seen;
        for (const auto& f : files) {
            Input in(f.string());
            try {
                for (auto& d : parse_transcript(in.get(), cfg)) {
                    if (!seen.insert(d.dialogue_id).second) {
                        throw ValidationError("dialogue '" + d.dialogue_id + "' appears in more than one file");
                    }
                    dialogues.push_back(std::move(d));
                }
            } catch (const Error& e) {
                std::throw_with_nested(Error(f.string() + ": " + e.what()));
            }
        }
    } else {
        Input in(a.input);
        dialogues = parse_transcript(in.get(), cfg);
    }
    Output out(a.out);
    write_turns(out.get(), dialogues);
    out.close();
    std::size_t turns = 0;
    for (const auto& d : dialogues) {
        turns += d.turns.size();
    }
    std::cerr << "ingested " << dialogues.size() << " dialogues, " << turns << " turns\n";
}

void run_pairs(const std::string& turns_path, const std::string& out_path) {
    std::vector<SwitchEvent> events;
    for (const auto& d : load_turns(turns_path)) {
        auto pairs = build_turn_pairs(d);
        events.insert(events.end(), std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end()));
    }
    Output out(out_path);
    write_events(out.get(), events);
    out.close();
    std::size_t overlaps = 0;
    for (const auto& e : events) {
        overlaps += e.kind == SwitchKind::overlap;
    }
    std::cerr << events.size() << " switch events, " << overlaps << " overlaps\n";
}

struct FilterArgs {
    std::string events = "-";
    std::string out = "-";
    std::int64_t min_overlap_ms = 1000;
    bool include_unsuccessful = false;
    std::string roles = "agent,client";
};

void run_filter(const FilterArgs& a) {
    FilterConfig cfg;
    cfg.min_overlap_ms = a.min_overlap_ms;
    cfg.require_successful = !a.include_unsuccessful;
    cfg.roles_kept.clear();
    std::stringstream roles(a.roles);
    for (std::string r; std::getline(roles, r, ',');) {
        const auto ch = channel_from_string(r);
        if (!ch) {
            throw UsageError("--roles: unknown role '" + r + "'");
        }
        cfg.roles_kept.insert(*ch);
    }
    const auto events = load_events(a.events);
    const auto kept = filter_overlaps(events, cfg);
    Output out(a.out);
    write_events(out.get(), kept);
    out.close();
    std::cerr << kept.size() << " of " << events.size() << " events retained\n";
}

// ---- annotation -----------------------------------------------------------------------------

struct StoreArgs {
    std::string candidates;
    std::string labels_log;
    std::string turns;
};

std::unique_ptr<AnnotationStore> open_store(const StoreArgs& a) {
    std::vector<Dialogue> dialogues;
    if (!a.turns.empty()) {
        dialogues = load_turns(a.turns);
    }
    auto store = std::make_unique<AnnotationStore>(a.labels_log, std::move(dialogues));
    store->enqueue_candidates(load_events(a.candidates));
    return store;
}

struct ServeArgs {
    StoreArgs store;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
};

void run_serve(const ServeArgs& a) {
    auto store = open_store(a.store);
    std::optional<fs::path> static_dir;
    if (!a.static_dir.empty()) {
        static_dir = a.static_dir;
    }
    AnnotationServer server(*store, static_dir);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    const int port = server.bind(a.host, a.port);
    std::cerr << "serving " << store->size() << " candidates on http://" << a.host << ":" << port << "/\n";
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.run();
    // run() can also return on its own; wake the waiter so it can be joined.
    ::kill(::getpid(), SIGTERM);
    waiter.join();
    const auto p = store->progress();
    std::cerr << "stopped; " << p.total() - p.unlabeled << " of " << p.total() << " labeled\n";
}

void run_export(const StoreArgs& a, const std::string& out_path) {
    auto store = open_store(a);
    const auto labels = store->export_labels();
    Output out(out_path);
    write_exported_labels(out.get(), labels);
    out.close();
    std::cerr << "exported " << labels.size() << " labels\n";
}

void run_label_truth(const StoreArgs& a, const std::string& truth_path, const std::string& annotator) {
    auto store = open_store(a);
    Input in(truth_path);
    const auto truth = read_truth(in.get());
    const auto s = label_with_truth(*store, truth, annotator);
    std::cerr << "labeled " << s.labeled << " events; " << s.missing_truth << " queued without truth, "
              << s.not_queued << " truth records not queued\n";
}

// ---- dataset / baseline / eval --------------------------------------------------------------

struct DatasetArgs {
    std::string labels;
    std::string turns;
    std::string out = "-";
    std::string variant = "both_speakers";
    std::size_t extension_width = 8;
    int folds = 10;
    int test_fold = 9;
    std::uint64_t seed = 0;
    bool group_by_dialogue = false;
};

void run_dataset(const DatasetArgs& a) {
    DatasetOptions opt;
    opt.variant.kind = context_kind_from_string(a.variant);
    opt.variant.extension_width = a.extension_width;
    opt.n_folds = a.folds;
    opt.test_fold = a.test_fold;
    opt.seed = a.seed;
    opt.group_by_dialogue = a.group_by_dialogue;
    Input in(a.labels);
    const auto labeled = read_exported_labels(in.get());
    DatasetSummary summary;
    const auto folded = build_folded_dataset(labeled, load_turns(a.turns), opt, &summary);
    Output out(a.out);
    write_dataset(out.get(), folded.inputs);
    out.close();
    std::cerr << folded.inputs.size() << " examples; dropped " << summary.dropped_undefined << " undefined, "
              << summary.dropped_empty_interrupter << " with empty interrupter text\n";
}

struct TrainArgs {
    std::string dataset;
    std::string out = "-";
    int folds = 10;
    int test_fold = 9;
    std::uint32_t min_df = 2;
    std::string ngrams = "1,2";
    double learning_rate = 0.1;
    double l2 = 1e-4;
    int max_epochs = 200;
};

baseline::NgramRange parse_ngram_range(const std::string& text) {
    const auto comma = text.find(',');
    try {
        if (comma == std::string::npos) {
            const int n = std::stoi(text);
            return {n, n};
        }
        return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
    } catch (const std::logic_error&) {
        throw UsageError("--ngrams must look like 1,2");
    }
}

void run_train_baseline(const TrainArgs& a) {
    const auto folded = load_dataset(a.dataset, a.folds, a.test_fold);
    std::vector<ModelInput> train;
    for (const auto& m : folded.inputs) {
        if (m.fold != folded.test_fold) {
            train.push_back(m);
        }
    }
    baseline::BaselineOptions opt;
    opt.min_df = a.min_df;
    opt.ngrams = parse_ngram_range(a.ngrams);
    opt.train.learning_rate = a.learning_rate;
    opt.train.l2_lambda = a.l2;
    opt.train.max_epochs = a.max_epochs;
    const auto model = baseline::train_baseline(train, opt);
    Output out(a.out);
    baseline::save_model(out.get(), model);
    out.close();
    std::cerr << "trained on " << train.size() << " examples, " << model.vocabulary.size() << " features, final loss "
              << model.logreg.training_log.back() << '\n';
}

void run_score(const std::string& model_path, const std::string& dataset_path, int folds, int test_fold, int fold,
               const std::string& out_path) {
    Input min(model_path);
    const auto model = baseline::load_model(min.get());
    const auto folded = load_dataset(dataset_path, folds, test_fold);
    Output out(out_path);
    std::size_t n = 0;
    for (const auto& m : folded.inputs) {
        if (fold >= 0 && m.fold != fold) {
            continue;
        }
        out.get() << json{{"event_id", m.event_id},
                          {"fold", m.fold},
                          {"label", std::string(to_string(m.label))},
                          {"score", baseline::score(model, m.segment_a, m.segment_b)}}
                         .dump()
                  << '\n';
        ++n;
    }
    out.close();
    std::cerr << "scored " << n << " examples\n";
}

void run_eval(const std::string& scores_path, std::optional<double> threshold, const std::string& criterion,
              const std::string& out_path) {
    Input in(scores_path);
    std::vector<double> scores;
    std::vector<int> labels;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in.get(), line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = json::parse(line);
            scores.push_back(j.at("score").get<double>());
            const auto label = label_from_string(j.at("label").get<std::string>());
            if (!label || *label == Label::undefined) {
                throw ValidationError("label must be competitive or non_competitive");
            }
            labels.push_back(*label == Label::competitive ? 1 : 0);
        } catch (const json::exception& e) {
            throw RowError(row, e.what());
        } catch (const ValidationError& e) {
            throw RowError(row, e.what());
        }
    }
    const auto report = threshold ? metrics::evaluate_at(scores, labels, *threshold)
                                  : metrics::evaluate_best(scores, labels, metrics::criterion_from_string(criterion));
    auto j = metrics::to_json(report);
    j["criterion"] = criterion;
    j["threshold_source"] = threshold ? "fixed" : "best on these scores";
    j["n_examples"] = scores.size();
    Output out(out_path);
    out.get() << j.dump(2) << '\n';
    out.close();
}

// ---- experiment / synth / backend -----------------------------------------------------------

struct ExperimentArgs {
    std::string config;
    std::string dataset;
    std::string trainer;
    std::string out = "-";
    int folds = 10;
    int test_fold = 9;
    bool table = false;
};

void run_experiment_cmd(const ExperimentArgs& a) {
    auto config = experiment_config_from_json(read_json_file(a.config));
    if (!a.trainer.empty()) {
        config.trainer = a.trainer;
    }
    const auto folded = load_dataset(a.dataset, a.folds, a.test_fold);
    const auto report = run_experiment(config, folded);
    Output out(a.out);
    out.get() << to_json(report).dump(2) << '\n';
    out.close();
    if (a.table) {
        std::cerr << render_table(report);
    }
}

void run_synth(const std::string& spec_path, const std::string& out_dir) {
    const auto spec = synth_spec_from_json(read_json_file(spec_path));
    const auto corpus = generate_synthetic_corpus(spec);
    write_corpus(corpus, out_dir);
    std::cerr << "wrote " << corpus.dialogues.size() << " dialogues and " << corpus.truth.size()
              << " ground-truth overlaps to " << out_dir << '\n';
}

int run_baseline_backend(const BaselineTrainerOptions& opt) {
    BaselineTrainer backend(opt);
    int status = kOk;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        bool ok = false;
        std::cout << serve_request_line(backend, line, &ok) << '\n' << std::flush;
        if (!ok) {
            status = kBackend;
        }
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speaker-switch extraction, overlap labeling and interruption classifier evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "overlapctl 1.0.0");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Parse a transcript table into turns.jsonl");
    c_ingest->add_option("-i,--input", ingest.input, "Transcript CSV/TSV, or a directory of them ('-' for stdin)");
    c_ingest->add_option("-o,--out", ingest.out, "turns.jsonl ('-' for stdout)");
    c_ingest->add_option("--column-map,--map", ingest.map, "Column/value overrides, e.g. start=begin,channel:0=agent");
    c_ingest->add_option("--delimiter", ingest.delimiter, "Field delimiter (single character or 'tab')");
    c_ingest->add_option("--time-unit", ingest.time_unit, "Timestamp unit")->check(CLI::IsMember({"ms", "s"}));

    std::string pairs_in = "-", pairs_out = "-";
    auto* c_pairs = app.add_subcommand("pairs", "Classify every consecutive turn pair");
    c_pairs->add_option("-t,--turns", pairs_in, "turns.jsonl");
    c_pairs->add_option("-o,--out", pairs_out, "events.jsonl");

    FilterArgs filter;
    auto* c_filter = app.add_subcommand("filter", "Keep overlap candidates for labeling");
    c_filter->add_option("-e,--events", filter.events, "events.jsonl");
    c_filter->add_option("-o,--out", filter.out, "candidates.jsonl");
    c_filter->add_option("--min-overlap-ms", filter.min_overlap_ms, "Minimum overlap duration")->capture_default_str();
    c_filter->add_flag("--keep-unsuccessful,--include-unsuccessful", filter.include_unsuccessful, "Keep unsuccessful overlaps");
    c_filter->add_option("--roles", filter.roles, "Interrupter roles to keep")->capture_default_str();

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "Run the annotation HTTP service");
    c_serve->add_option("-c,--candidates,--events", serve.store.candidates, "candidates.jsonl")->required();
    c_serve->add_option("-l,--labels-log,--labels", serve.store.labels_log, "Append-only label log")->required();
    c_serve->add_option("-t,--turns", serve.store.turns, "turns.jsonl, for context turns and audio locators");
    c_serve->add_option("--host", serve.host)->capture_default_str();
    c_serve->add_option("--port", serve.port, "0 picks a free port")->capture_default_str();
    c_serve->add_option("--static-dir", serve.static_dir, "Annotation UI build to serve at /");

    StoreArgs export_store;
    std::string export_out = "-";
    auto* c_export = app.add_subcommand("export-labels", "Write the latest label of every labeled candidate");
    c_export->add_option("-c,--candidates,--events", export_store.candidates)->required();
    c_export->add_option("-l,--labels-log,--labels", export_store.labels_log)->required();
    c_export->add_option("-o,--out", export_out, "labels.jsonl");

    StoreArgs truth_store;
    std::string truth_path, annotator = "ground-truth";
    auto* c_truth = app.add_subcommand("label-truth", "Label queued candidates from a synthetic truth file");
    c_truth->add_option("-c,--candidates,--events", truth_store.candidates)->required();
    c_truth->add_option("-l,--labels-log,--labels", truth_store.labels_log)->required();
    c_truth->add_option("--truth", truth_path, "truth.jsonl")->required();
    c_truth->add_option("--annotator", annotator)->capture_default_str();

    DatasetArgs dataset;
    auto* c_dataset = app.add_subcommand("dataset", "Build the folded classifier dataset");
    c_dataset->add_option("-l,--labeled,--labels", dataset.labels, "Exported labels.jsonl")->required();
    c_dataset->add_option("-t,--turns", dataset.turns, "turns.jsonl")->required();
    c_dataset->add_option("-o,--out", dataset.out, "dataset.jsonl");
    c_dataset->add_option("--variant", dataset.variant, "interrupter | both | extended")->capture_default_str();
    c_dataset->add_option("--extension-width", dataset.extension_width)->capture_default_str();
    c_dataset->add_option("--folds", dataset.folds)->capture_default_str();
    c_dataset->add_option("--test-fold", dataset.test_fold)->capture_default_str();
    c_dataset->add_option("--seed", dataset.seed)->capture_default_str();
    c_dataset->add_flag("--group-by-dialogue", dataset.group_by_dialogue, "Keep each dialogue in one fold");

    TrainArgs train;
    auto* c_train = app.add_subcommand("train-baseline", "Fit tf-idf + logistic regression on the non-test folds");
    c_train->add_option("-d,--dataset", train.dataset)->required();
    c_train->add_option("-o,--out", train.out, "Model file");
    c_train->add_option("--folds", train.folds)->capture_default_str();
    c_train->add_option("--test-fold", train.test_fold)->capture_default_str();
    c_train->add_option("--min-df", train.min_df)->capture_default_str();
    c_train->add_option("--ngrams", train.ngrams, "N-gram range lo,hi")->capture_default_str();
    c_train->add_option("--lr,--learning-rate", train.learning_rate)->capture_default_str();
    c_train->add_option("--l2", train.l2)->capture_default_str();
    c_train->add_option("--epochs,--max-epochs", train.max_epochs, "Gradient-descent steps")->capture_default_str();

    std::string score_model, score_dataset, score_out = "-";
    int score_folds = 10, score_test_fold = 9, score_fold = 9;
    auto* c_score = app.add_subcommand("score", "Score dataset examples with a baseline model");
    c_score->add_option("-m,--model", score_model)->required();
    c_score->add_option("-d,--dataset", score_dataset)->required();
    c_score->add_option("-o,--out", score_out, "scores.jsonl");
    c_score->add_option("--folds", score_folds)->capture_default_str();
    c_score->add_option("--test-fold", score_test_fold)->capture_default_str();
    c_score->add_option("--fold", score_fold, "Fold to score; -1 scores everything")->capture_default_str();

    std::string eval_scores = "-", eval_criterion = "f1_macro", eval_out = "-";
    std::optional<double> eval_threshold;
    auto* c_eval = app.add_subcommand("eval", "Metrics for a scores.jsonl file");
    c_eval->add_option("-s,--scores", eval_scores);
    c_eval->add_option("-o,--out", eval_out, "report.json");
    c_eval->add_option("--threshold", eval_threshold, "Fixed threshold; default picks the best one");
    c_eval->add_option("--criterion", eval_criterion)
        ->check(CLI::IsMember({"f1_macro", "balanced_accuracy"}))
        ->capture_default_str();

    ExperimentArgs experiment;
    auto* c_exp = app.add_subcommand("experiment", "Cross-validate a learning-rate grid and emit the results table");
    c_exp->add_option("--config", experiment.config)->required();
    c_exp->add_option("-d,--dataset", experiment.dataset)->required();
    c_exp->add_option("--trainer-cmd", experiment.trainer, "Backend command or http:// URL; overrides the config");
    c_exp->add_option("-o,--out", experiment.out, "report.json");
    c_exp->add_option("--folds", experiment.folds)->capture_default_str();
    c_exp->add_option("--test-fold", experiment.test_fold)->capture_default_str();
    c_exp->add_flag("--table", experiment.table, "Also print the table to stderr");

    std::string synth_spec, synth_out;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
    c_synth->add_option("--spec", synth_spec)->required();
    c_synth->add_option("--out-dir", synth_out)->required();

    BaselineTrainerOptions backend_opt;
    auto* c_backend = app.add_subcommand("baseline-backend", "Serve the trainer wire protocol on stdin/stdout");
    c_backend->add_option("--steps-per-epoch", backend_opt.steps_per_epoch)->capture_default_str();
    c_backend->add_flag("--use-request-learning-rate", backend_opt.use_request_learning_rate);
    c_backend->add_option("--min-df", backend_opt.model.min_df)->capture_default_str();
    c_backend->add_option("--lr", backend_opt.model.train.learning_rate, "Gradient-descent step size")
        ->capture_default_str();
    c_backend->add_option("--l2", backend_opt.model.train.l2_lambda)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*c_ingest) {
            run_ingest(ingest);
        } else if (*c_pairs) {
            run_pairs(pairs_in, pairs_out);
        } else if (*c_filter) {
            run_filter(filter);
        } else if (*c_serve) {
            run_serve(serve);
        } else if (*c_export) {
            run_export(export_store, export_out);
        } else if (*c_truth) {
            run_label_truth(truth_store, truth_path, annotator);
        } else if (*c_dataset) {
            run_dataset(dataset);
        } else if (*c_train) {
            run_train_baseline(train);
        } else if (*c_score) {
            run_score(score_model, score_dataset, score_folds, score_test_fold, score_fold, score_out);
        } else if (*c_eval) {
            run_eval(eval_scores, eval_threshold, eval_criterion, eval_out);
        } else if (*c_exp) {
            run_experiment_cmd(experiment);
        } else if (*c_synth) {
            run_synth(synth_spec, synth_out);
        } else if (*c_backend) {
            return run_baseline_backend(backend_opt);
        }
    } catch (const std::exception& e) {
        print_chain(e);
        return exit_code_of(e);
    }
    return kOk;
}
