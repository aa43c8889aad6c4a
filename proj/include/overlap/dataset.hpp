#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "overlap/annotation.hpp"
#include "overlap/overlap_engine.hpp"
#include "overlap/transcript.hpp"

namespace overlap {

/// One classifier example: the interrupted speaker's text and the interrupter's text.
struct ModelInput {
    std::string event_id;
    std::string segment_a;  // empty for the interrupter-only variant
    std::string segment_b;
    Label label = Label::competitive;  // never undefined
    int fold = 0;
    bool client_is_interrupter = false;

    bool is_competitive() const noexcept { return label == Label::competitive; }
    bool operator==(const ModelInput&) const = default;
};

struct ContextVariant {
    enum class Kind { interrupter_only, both_speakers, extended };

    Kind kind = Kind::both_speakers;
    /// Turns added on each side by the extended variant.
    std::size_t extension_width = 8;

    static ContextVariant interrupter_only() { return {Kind::interrupter_only, 8}; }
    static ContextVariant both_speakers() { return {Kind::both_speakers, 8}; }
    static ContextVariant extended(std::size_t width = 8) { return {Kind::extended, width}; }
};

std::string_view to_string(ContextVariant::Kind k) noexcept;
/// Accepts interrupter / interrupter_only, both / both_speakers, extended.
ContextVariant::Kind context_kind_from_string(std::string_view s);

struct FoldedDataset {
    std::vector<ModelInput> inputs;
    int n_folds = 10;
    int test_fold = 9;
    std::uint64_t seed = 0;

    /// Throws ConfigError if a fold index or test_fold is out of range.
    void validate() const;
};

/// Drops undefined labels, keeping the input order.
std::vector<ExportedLabel> assemble_dataset(const std::vector<ExportedLabel>& labeled);

/// Stratified fold assignment. Within each class (competitive first) records are shuffled
/// with the seeded generator and dealt round-robin; each class continues the deal where the
/// previous one stopped, so total fold sizes also differ by at most one.
/// Throws ConfigError for n_folds < 2 or n_folds > labels.size().
std::vector<int> assign_folds(std::span<const Label> labels, int n_folds, std::uint64_t seed);

/// Dialogue-grouped variant: all events of one dialogue share a fold. Groups are shuffled and
/// each goes to the currently smallest fold. Class balance is approximate.
std::vector<int> assign_folds_grouped(std::span<const Label> labels, std::span<const std::string> groups,
                                      int n_folds, std::uint64_t seed);

/// (segment_a, segment_b) for one event. Throws UsageError if the event is not from `dialogue`.
std::pair<std::string, std::string> build_model_input(const SwitchEvent& event, const Dialogue& dialogue,
                                                      const ContextVariant& variant);

struct DatasetOptions {
    ContextVariant variant;
    int n_folds = 10;
    int test_fold = 9;
    std::uint64_t seed = 0;
    bool group_by_dialogue = false;
};

struct DatasetSummary {
    std::size_t dropped_undefined = 0;
    std::size_t dropped_empty_interrupter = 0;
};

/// assemble_dataset + build_model_input + assign_folds. Records whose interrupter segment comes
/// out empty cannot form a ModelInput and are dropped (counted in `summary`).
FoldedDataset build_folded_dataset(const std::vector<ExportedLabel>& labeled, const std::vector<Dialogue>& dialogues,
                                   const DatasetOptions& options, DatasetSummary* summary = nullptr);

nlohmann::json to_json(const ModelInput& m);
ModelInput model_input_from_json(const nlohmann::json& j);
void write_dataset(std::ostream& out, const std::vector<ModelInput>& inputs);
std::vector<ModelInput> read_dataset(std::istream& in);

}  // namespace overlap
