#include "overlap/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "overlap/csv.hpp"
#include "overlap/errors.hpp"
#include "overlap/overlap_engine.hpp"
#include "overlap/rng.hpp"

#ifndef OVERLAP_DATA_DIR
#define OVERLAP_DATA_DIR "data"
#endif

namespace overlap {

namespace {

using nlohmann::json;

std::vector<std::string> read_lexicon_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read lexicon " + path.string());
    }
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') {
            continue;
        }
        const auto e = line.find_last_not_of(" \t\r");
        tokens.push_back(line.substr(b, e - b + 1));
    }
    return tokens;
}

void check_rate(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError(std::string("synth spec: ") + name + " must be in [0, 1]");
    }
}

void check_lexicon(const std::vector<std::string>& tokens, const char* name) {
    if (tokens.empty()) {
        throw ConfigError(std::string("synth spec: ") + name + " lexicon is empty");
    }
    for (const auto& t : tokens) {
        if (t.empty() || t.find_first_of(" \t\r\n,") != std::string::npos) {
            throw ConfigError(std::string("synth spec: ") + name + " lexicon entry '" + t +
                              "' must be a single token");
        }
    }
}

const std::set<std::string> kSpecKeys = {
    "n_dialogues",      "turns_per_dialogue", "overlap_rate",        "distractor_fraction", "competitive_fraction",
    "continuation_rate", "noise_rate",        "seed",                "competitive_lexicon", "cooperative_lexicon",
    "neutral_lexicon",  "lexicon_dir",
};

template <typename T>
T spec_field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("synth spec: field '") + key + "' has the wrong type");
    }
}

constexpr std::int64_t kMinOverlapMs = 1000;

class Generator {
public:
    explicit Generator(const SynthSpec& spec) : spec_(spec), rng_(spec.seed) {
        all_tokens_ = spec.lexicons.competitive;
        all_tokens_.insert(all_tokens_.end(), spec.lexicons.cooperative.begin(), spec.lexicons.cooperative.end());
        all_tokens_.insert(all_tokens_.end(), spec.lexicons.neutral.begin(), spec.lexicons.neutral.end());
    }

    SynthCorpus run() {
        SynthCorpus corpus;
        for (std::size_t d = 0; d < spec_.n_dialogues; ++d) {
            corpus.dialogues.push_back(dialogue(d, corpus.truth));
        }
        return corpus;
    }

private:
    enum class Plan { gap, candidate, short_overlap, unsuccessful };

    const std::string& pick(const std::vector<std::string>& tokens) {
        return tokens[rng_.below(tokens.size())];
    }

    std::string neutral_text(std::size_t lo, std::size_t hi) {
        const auto n = static_cast<std::size_t>(rng_.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
        std::string text;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) {
                text += ' ';
            }
            text += pick(spec_.lexicons.neutral);
        }
        return text;
    }

    std::string interrupter_text(const std::vector<std::string>& markers) {
        std::vector<std::string> tokens;
        const auto n_markers = rng_.between(2, 3);
        for (std::int64_t i = 0; i < n_markers; ++i) {
            tokens.push_back(pick(markers));
        }
        const auto n_neutral = rng_.between(1, 5);
        for (std::int64_t i = 0; i < n_neutral; ++i) {
            tokens.push_back(pick(spec_.lexicons.neutral));
        }
        rng_.shuffle(std::span<std::string>(tokens));
        std::string text;
        for (auto& t : tokens) {
            if (rng_.bernoulli(spec_.noise_rate)) {
                t = pick(all_tokens_);
            }
            if (!text.empty()) {
                text += ' ';
            }
            text += t;
        }
        return text;
    }

    Dialogue dialogue(std::size_t index, std::vector<TruthRecord>& truth) {
        char id[32];
        std::snprintf(id, sizeof id, "synth-%05zu", index + 1);
        Dialogue dlg;
        dlg.dialogue_id = id;
        dlg.audio_uri = "synth://" + dlg.dialogue_id + ".wav";

        const auto n_turns = static_cast<std::size_t>(
            rng_.between(static_cast<std::int64_t>(spec_.turns_min), static_cast<std::int64_t>(spec_.turns_max)));
        std::int64_t last_end[2] = {0, 0};

        Turn first{dlg.dialogue_id, 0, Channel::agent, 0, 0, neutral_text(3, 10)};
        first.start_ms = rng_.between(0, 500);
        first.end_ms = first.start_ms + rng_.between(1500, 6000);
        last_end[0] = first.end_ms;
        dlg.turns.push_back(first);

        for (std::size_t i = 1; i < n_turns; ++i) {
            const Turn& prev = dlg.turns.back();
            Turn t;
            t.dialogue_id = dlg.dialogue_id;
            t.turn_index = i;

            if (rng_.bernoulli(spec_.continuation_rate)) {
                t.channel = prev.channel;
                t.start_ms = last_end[slot(t.channel)] + rng_.between(0, 1500);
                t.end_ms = t.start_ms + rng_.between(1500, 6000);
                t.text = neutral_text(3, 10);
            } else {
                t.channel = prev.channel == Channel::agent ? Channel::client : Channel::agent;
                // A channel never overlaps itself, and turn order must follow start times.
                const std::int64_t earliest = std::max(last_end[slot(t.channel)], prev.start_ms + 1);
                const std::int64_t room = prev.end_ms - earliest;
                Plan plan = Plan::gap;
                if (rng_.bernoulli(spec_.overlap_rate)) {
                    if (!rng_.bernoulli(spec_.distractor_fraction)) {
                        plan = Plan::candidate;
                    } else {
                        plan = rng_.bernoulli(0.5) ? Plan::short_overlap : Plan::unsuccessful;
                    }
                }
                if ((plan == Plan::candidate && room < kMinOverlapMs) || (plan == Plan::short_overlap && room < 100) ||
                    (plan == Plan::unsuccessful && room < 400)) {
                    plan = Plan::gap;
                }

                switch (plan) {
                    case Plan::gap: {
                        const std::int64_t gap = rng_.bernoulli(0.05) ? 0 : rng_.between(0, 1500);
                        t.start_ms = std::max(prev.end_ms, last_end[slot(t.channel)]) + gap;
                        t.end_ms = t.start_ms + rng_.between(1500, 6000);
                        t.text = neutral_text(3, 10);
                        break;
                    }
                    case Plan::candidate: {
                        const auto d = rng_.between(kMinOverlapMs, std::min<std::int64_t>(2500, room));
                        t.start_ms = prev.end_ms - d;
                        t.end_ms = prev.end_ms + rng_.between(300, 3000);
                        const bool competitive = rng_.bernoulli(spec_.competitive_fraction);
                        t.text = interrupter_text(competitive ? spec_.lexicons.competitive : spec_.lexicons.cooperative);
                        truth.push_back({dlg.dialogue_id, i - 1, make_event_id(dlg.dialogue_id, i - 1),
                                         competitive ? Label::competitive : Label::non_competitive});
                        break;
                    }
                    case Plan::short_overlap: {
                        const auto d = rng_.between(100, std::min<std::int64_t>(kMinOverlapMs - 1, room));
                        t.start_ms = prev.end_ms - d;
                        t.end_ms = prev.end_ms + rng_.between(200, 3000);
                        t.text = interrupter_text(rng_.bernoulli(0.5) ? spec_.lexicons.competitive
                                                                       : spec_.lexicons.cooperative);
                        break;
                    }
                    case Plan::unsuccessful: {
                        const auto d = rng_.between(400, std::min<std::int64_t>(3000, room));
                        t.start_ms = prev.end_ms - d;
                        // Equal ends count as unsuccessful; generate that tie regularly.
                        t.end_ms = rng_.bernoulli(0.25) ? prev.end_ms : prev.end_ms - rng_.between(0, d - 300);
                        t.text = interrupter_text(rng_.bernoulli(0.5) ? spec_.lexicons.competitive
                                                                       : spec_.lexicons.cooperative);
                        break;
                    }
                }
            }
            last_end[slot(t.channel)] = std::max(last_end[slot(t.channel)], t.end_ms);
            dlg.turns.push_back(std::move(t));
        }
        return dlg;
    }

    static int slot(Channel c) { return c == Channel::agent ? 0 : 1; }

    const SynthSpec& spec_;
    Rng rng_;
    std::vector<std::string> all_tokens_;
};

}  // namespace

Lexicons load_lexicons(const std::filesystem::path& dir) {
    return {read_lexicon_file(dir / "competitive.txt"), read_lexicon_file(dir / "cooperative.txt"),
            read_lexicon_file(dir / "neutral.txt")};
}

std::filesystem::path default_lexicon_dir() {
    if (const char* env = std::getenv("OVERLAP_DATA_DIR"); env && *env) {
        return std::filesystem::path(env) / "lexicons";
    }
    return std::filesystem::path(OVERLAP_DATA_DIR) / "lexicons";
}

void SynthSpec::validate() const {
    if (n_dialogues < 1) {
        throw ConfigError("synth spec: n_dialogues must be >= 1");
    }
    if (turns_min < 2 || turns_max < turns_min) {
        throw ConfigError("synth spec: turns_per_dialogue must satisfy 2 <= min <= max");
    }
    check_rate(overlap_rate, "overlap_rate");
    check_rate(distractor_fraction, "distractor_fraction");
    check_rate(competitive_fraction, "competitive_fraction");
    check_rate(continuation_rate, "continuation_rate");
    check_rate(noise_rate, "noise_rate");
    check_lexicon(lexicons.competitive, "competitive");
    check_lexicon(lexicons.cooperative, "cooperative");
    check_lexicon(lexicons.neutral, "neutral");
    std::set<std::string> seen;
    for (const auto* list : {&lexicons.competitive, &lexicons.cooperative, &lexicons.neutral}) {
        std::set<std::string> own(list->begin(), list->end());
        for (const auto& t : own) {
            if (!seen.insert(t).second) {
                throw ConfigError("synth spec: lexicons are not disjoint ('" + t + "')");
            }
        }
    }
}

SynthSpec synth_spec_from_json(const json& j, const std::filesystem::path& lexicon_dir) {
    if (!j.is_object()) {
        throw ConfigError("synth spec must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!kSpecKeys.contains(key)) {
            throw ConfigError("synth spec: unknown field '" + key + "'");
        }
    }
    SynthSpec s;
    s.n_dialogues = spec_field<std::size_t>(j, "n_dialogues", s.n_dialogues);
    if (j.contains("turns_per_dialogue")) {
        const auto range = spec_field<std::vector<std::size_t>>(j, "turns_per_dialogue", {});
        if (range.size() != 2) {
            throw ConfigError("synth spec: turns_per_dialogue must be [min, max]");
        }
        s.turns_min = range[0];
        s.turns_max = range[1];
    }
    s.overlap_rate = spec_field<double>(j, "overlap_rate", s.overlap_rate);
    s.distractor_fraction = spec_field<double>(j, "distractor_fraction", s.distractor_fraction);
    s.competitive_fraction = spec_field<double>(j, "competitive_fraction", s.competitive_fraction);
    s.continuation_rate = spec_field<double>(j, "continuation_rate", s.continuation_rate);
    s.noise_rate = spec_field<double>(j, "noise_rate", s.noise_rate);
    s.seed = spec_field<std::uint64_t>(j, "seed", s.seed);

    const auto dir = j.contains("lexicon_dir") ? std::filesystem::path(spec_field<std::string>(j, "lexicon_dir", ""))
                                               : lexicon_dir;
    const bool need_files = !j.contains("competitive_lexicon") || !j.contains("cooperative_lexicon") ||
                            !j.contains("neutral_lexicon");
    Lexicons from_files;
    if (need_files) {
        from_files = load_lexicons(dir);
    }
    s.lexicons.competitive = spec_field<std::vector<std::string>>(j, "competitive_lexicon", from_files.competitive);
    s.lexicons.cooperative = spec_field<std::vector<std::string>>(j, "cooperative_lexicon", from_files.cooperative);
    s.lexicons.neutral = spec_field<std::vector<std::string>>(j, "neutral_lexicon", from_files.neutral);
    s.validate();
    return s;
}

json to_json(const SynthSpec& s) {
    return json{
        {"n_dialogues", s.n_dialogues},
        {"turns_per_dialogue", {s.turns_min, s.turns_max}},
        {"overlap_rate", s.overlap_rate},
        {"distractor_fraction", s.distractor_fraction},
        {"competitive_fraction", s.competitive_fraction},
        {"continuation_rate", s.continuation_rate},
        {"noise_rate", s.noise_rate},
        {"seed", s.seed},
        {"competitive_lexicon", s.lexicons.competitive},
        {"cooperative_lexicon", s.lexicons.cooperative},
        {"neutral_lexicon", s.lexicons.neutral},
    };
}

json to_json(const TruthRecord& t) {
    return json{{"dialogue_id", t.dialogue_id},
                {"k_index", t.k_index},
                {"event_id", t.event_id},
                {"label", std::string(to_string(t.label))}};
}

TruthRecord truth_record_from_json(const json& j) {
    TruthRecord t;
    try {
        t.dialogue_id = j.at("dialogue_id").get<std::string>();
        t.k_index = j.at("k_index").get<std::size_t>();
        t.event_id = j.at("event_id").get<std::string>();
        const auto label = label_from_string(j.at("label").get<std::string>());
        if (!label) {
            throw ValidationError("unknown label '" + j.at("label").get<std::string>() + "'");
        }
        t.label = *label;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("truth record: ") + e.what());
    }
    return t;
}

void write_truth(std::ostream& out, const std::vector<TruthRecord>& truth) {
    for (const auto& t : truth) {
        out << to_json(t).dump() << '\n';
    }
}

std::vector<TruthRecord> read_truth(std::istream& in) {
    std::vector<TruthRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(truth_record_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw RowError(n, e.what());
        } catch (const ValidationError& e) {
            throw RowError(n, e.what());
        }
    }
    return out;
}

SynthCorpus generate_synthetic_corpus(const SynthSpec& spec) {
    spec.validate();
    return Generator(spec).run();
}

void write_transcript_csv(std::ostream& out, const std::vector<Dialogue>& dialogues) {
    write_csv_record(out, {"dialogue_id", "channel", "start_ms", "end_ms", "text", "audio_uri"});
    for (const auto& d : dialogues) {
        for (const auto& t : d.turns) {
            write_csv_record(out, {t.dialogue_id, std::string(to_string(t.channel)), std::to_string(t.start_ms),
                                   std::to_string(t.end_ms), t.text, d.audio_uri.value_or("")});
        }
    }
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "transcripts.csv", std::ios::binary);
    write_transcript_csv(csv, corpus.dialogues);
    std::ofstream truth(dir / "truth.jsonl", std::ios::binary);
    write_truth(truth, corpus.truth);
    if (!csv || !truth) {
        throw Error("cannot write corpus to " + dir.string());
    }
}

TruthLabelingSummary label_with_truth(AnnotationStore& store, const std::vector<TruthRecord>& truth,
                                      std::string_view annotator_id) {
    TruthLabelingSummary summary;
    for (const auto& t : truth) {
        if (!store.entry(t.event_id)) {
            ++summary.not_queued;
            continue;
        }
        store.submit_label(t.event_id, t.label, annotator_id);
        ++summary.labeled;
    }
    summary.missing_truth = store.progress().unlabeled;
    return summary;
}

}  // namespace overlap
