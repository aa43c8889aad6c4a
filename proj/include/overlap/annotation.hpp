#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "overlap/overlap_engine.hpp"
#include "overlap/transcript.hpp"

namespace overlap {

enum class Label : std::uint8_t { competitive, non_competitive, undefined };

std::string_view to_string(Label l) noexcept;
std::optional<Label> label_from_string(std::string_view s) noexcept;

struct LabeledOverlap {
    std::string event_id;
    Label label = Label::undefined;
    std::string annotator_id;
    std::string labeled_at;  // ISO 8601, UTC

    bool operator==(const LabeledOverlap&) const = default;
};

nlohmann::json to_json(const LabeledOverlap& l);
LabeledOverlap labeled_overlap_from_json(const nlohmann::json& j);

struct AnnotationQueueEntry {
    SwitchEvent event;
    /// Turns K-8 .. K+9 of the source dialogue, clipped at its boundaries. Only the pair
    /// itself when the dialogue is unknown to the store.
    std::vector<Turn> context_turns;
    std::optional<std::string> audio_clip_uri;
    bool labeled = false;
};

nlohmann::json to_json(const AnnotationQueueEntry& e);

struct LabelProgress {
    std::size_t unlabeled = 0;
    std::size_t competitive = 0;
    std::size_t non_competitive = 0;
    std::size_t undefined = 0;

    std::size_t total() const noexcept { return unlabeled + competitive + non_competitive + undefined; }
    bool operator==(const LabelProgress&) const = default;
};

nlohmann::json to_json(const LabelProgress& p);

/// A label joined with the event it refers to; the export record shape.
struct ExportedLabel {
    LabeledOverlap label;
    SwitchEvent event;
};

nlohmann::json to_json(const ExportedLabel& e);
ExportedLabel exported_label_from_json(const nlohmann::json& j);
void write_exported_labels(std::ostream& out, const std::vector<ExportedLabel>& records);
std::vector<ExportedLabel> read_exported_labels(std::istream& in);

/// Appends `#t=<start>,<end>` (seconds) covering the overlapping span to a recording locator.
std::string overlap_clip_uri(const std::string& audio_uri, const SwitchEvent& event);

/// Queue of overlap candidates plus the append-only label log.
///
/// Labels are replayed from the log at construction with last-write-wins per event id.
/// All mutations are serialized by an internal lock; reads share it. Safe for concurrent use.
class AnnotationStore {
public:
    using Clock = std::function<std::string()>;

    /// `dialogues` supply context turns and audio locators; may be empty.
    explicit AnnotationStore(std::filesystem::path label_log, std::vector<Dialogue> dialogues = {},
                             Clock clock = {});

    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    /// Adds each unseen event id as an unlabeled entry; returns how many were added.
    std::size_t enqueue_candidates(const std::vector<SwitchEvent>& events);

    /// Oldest unlabeled entry by insertion order.
    std::optional<AnnotationQueueEntry> next_unlabeled() const;
    std::optional<AnnotationQueueEntry> entry(std::string_view event_id) const;

    /// Throws NotFoundError for an unknown event and ValidationError for a bad label or annotator.
    LabeledOverlap submit_label(std::string_view event_id, std::string_view label, std::string_view annotator_id);
    LabeledOverlap submit_label(std::string_view event_id, Label label, std::string_view annotator_id);

    /// Latest label per labeled queue entry, ordered by event id.
    std::vector<ExportedLabel> export_labels() const;
    LabelProgress progress() const;
    std::size_t size() const;

    /// Current time as ISO 8601 UTC with millisecond precision.
    static std::string utc_now();

private:
    AnnotationQueueEntry make_entry(const SwitchEvent& event) const;
    void replay();

    std::filesystem::path log_path_;
    Clock clock_;
    std::unordered_map<std::string, Dialogue> dialogues_;

    mutable std::shared_mutex mutex_;
    std::vector<SwitchEvent> queue_;
    std::unordered_map<std::string, std::size_t> queue_index_;
    std::map<std::string, LabeledOverlap> labels_;
    std::ofstream log_;
};

}  // namespace overlap
