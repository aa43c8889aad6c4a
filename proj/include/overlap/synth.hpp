#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "overlap/annotation.hpp"
#include "overlap/transcript.hpp"

namespace overlap {

struct Lexicons {
    std::vector<std::string> competitive;
    std::vector<std::string> cooperative;
    /// Filler vocabulary for everything that is not a marker.
    std::vector<std::string> neutral;
};

/// Reads competitive.txt, cooperative.txt and neutral.txt (one token per line, '#' comments).
Lexicons load_lexicons(const std::filesystem::path& dir);

/// The lexicon directory installed with the sources.
std::filesystem::path default_lexicon_dir();

struct SynthSpec {
    std::size_t n_dialogues = 200;
    std::size_t turns_min = 12;
    std::size_t turns_max = 30;
    /// Probability that a speaker switch is planned as an overlap.
    double overlap_rate = 0.3;
    /// Share of planned overlaps that are made to fail the filters (short or unsuccessful).
    double distractor_fraction = 0.3;
    /// Share of retained overlaps labeled competitive.
    double competitive_fraction = 0.5;
    /// Probability that a turn keeps the same channel (a continuation).
    double continuation_rate = 0.1;
    /// Per-token probability that an interrupter token is replaced by a random lexicon token.
    double noise_rate = 0.0;
    std::uint64_t seed = 0;
    Lexicons lexicons;

    /// Throws ConfigError: rates outside [0, 1], empty or overlapping lexicons, bad ranges.
    void validate() const;
};

/// Unset lexicon lists are filled from `lexicon_dir`.
SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::filesystem::path& lexicon_dir = default_lexicon_dir());
nlohmann::json to_json(const SynthSpec& s);

struct TruthRecord {
    std::string dialogue_id;
    std::size_t k_index = 0;
    std::string event_id;
    Label label = Label::competitive;
    bool operator==(const TruthRecord&) const = default;
};

nlohmann::json to_json(const TruthRecord& t);
TruthRecord truth_record_from_json(const nlohmann::json& j);
void write_truth(std::ostream& out, const std::vector<TruthRecord>& truth);
std::vector<TruthRecord> read_truth(std::istream& in);

struct SynthCorpus {
    std::vector<Dialogue> dialogues;
    /// One record per overlap that passes the default filters, in dialogue order.
    std::vector<TruthRecord> truth;
};

/// Deterministic per spec (including seed).
SynthCorpus generate_synthetic_corpus(const SynthSpec& spec);

/// Transcript table with the default column names.
void write_transcript_csv(std::ostream& out, const std::vector<Dialogue>& dialogues);

/// Writes transcripts.csv and truth.jsonl into `dir`, creating it if needed.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

struct TruthLabelingSummary {
    std::size_t labeled = 0;
    /// Queue entries with no truth record.
    std::size_t missing_truth = 0;
    /// Truth records whose event is not queued.
    std::size_t not_queued = 0;
};

/// Submits the ground-truth label for every queued event under `annotator_id`.
TruthLabelingSummary label_with_truth(AnnotationStore& store, const std::vector<TruthRecord>& truth,
                                      std::string_view annotator_id = "ground-truth");

}  // namespace overlap
