#include "overlap/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>

#include "overlap/errors.hpp"

namespace overlap {

std::string_view to_string(Label l) noexcept {
    switch (l) {
        case Label::competitive:
            return "competitive";
        case Label::non_competitive:
            return "non_competitive";
        case Label::undefined:
            return "undefined";
    }
    return "undefined";
}

std::optional<Label> label_from_string(std::string_view s) noexcept {
    if (s == "competitive") {
        return Label::competitive;
    }
    if (s == "non_competitive") {
        return Label::non_competitive;
    }
    if (s == "undefined") {
        return Label::undefined;
    }
    return std::nullopt;
}

nlohmann::json to_json(const LabeledOverlap& l) {
    return {{"event_id", l.event_id},
            {"label", to_string(l.label)},
            {"annotator_id", l.annotator_id},
            {"labeled_at", l.labeled_at}};
}

LabeledOverlap labeled_overlap_from_json(const nlohmann::json& j) {
    try {
        LabeledOverlap l;
        l.event_id = j.at("event_id").get<std::string>();
        const auto label = j.at("label").get<std::string>();
        auto parsed = label_from_string(label);
        if (!parsed) {
            throw ValidationError("unknown label '" + label + "'");
        }
        l.label = *parsed;
        l.annotator_id = j.at("annotator_id").get<std::string>();
        l.labeled_at = j.at("labeled_at").get<std::string>();
        return l;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("label record: ") + e.what());
    }
}

nlohmann::json to_json(const AnnotationQueueEntry& e) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : e.context_turns) {
        turns.push_back(turn_to_json(t));
    }
    return {{"event", event_to_json(e.event)},
            {"context_turns", std::move(turns)},
            {"audio_clip_uri", e.audio_clip_uri ? nlohmann::json(*e.audio_clip_uri) : nlohmann::json(nullptr)},
            {"status", e.labeled ? "labeled" : "unlabeled"}};
}

nlohmann::json to_json(const LabelProgress& p) {
    return {{"unlabeled", p.unlabeled},
            {"competitive", p.competitive},
            {"non_competitive", p.non_competitive},
            {"undefined", p.undefined}};
}

nlohmann::json to_json(const ExportedLabel& e) {
    auto j = to_json(e.label);
    j["event"] = event_to_json(e.event);
    return j;
}

ExportedLabel exported_label_from_json(const nlohmann::json& j) {
    ExportedLabel e{labeled_overlap_from_json(j), {}};
    try {
        e.event = event_from_json(j.at("event"));
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("labeled record: ") + ex.what());
    }
    if (e.event.event_id != e.label.event_id) {
        throw ValidationError("labeled record: event_id does not match embedded event");
    }
    return e;
}

void write_exported_labels(std::ostream& out, const std::vector<ExportedLabel>& records) {
    for (const auto& r : records) {
        out << to_json(r).dump() << '\n';
    }
}

std::vector<ExportedLabel> read_exported_labels(std::istream& in) {
    std::vector<ExportedLabel> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            records.push_back(exported_label_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("labeled line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::string overlap_clip_uri(const std::string& audio_uri, const SwitchEvent& event) {
    const std::int64_t begin = event.turn_k1.start_ms;
    const std::int64_t end = std::min(event.turn_k.end_ms, event.turn_k1.end_ms);
    char buf[64];
    std::snprintf(buf, sizeof buf, "#t=%lld.%03lld,%lld.%03lld", static_cast<long long>(begin / 1000),
                  static_cast<long long>(begin % 1000), static_cast<long long>(end / 1000),
                  static_cast<long long>(end % 1000));
    return audio_uri + buf;
}

std::string AnnotationStore::utc_now() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

AnnotationStore::AnnotationStore(std::filesystem::path label_log, std::vector<Dialogue> dialogues, Clock clock)
    : log_path_(std::move(label_log)), clock_(clock ? std::move(clock) : Clock(&AnnotationStore::utc_now)) {
    for (auto& d : dialogues) {
        auto id = d.dialogue_id;
        dialogues_.emplace(std::move(id), std::move(d));
    }
    replay();
    log_.open(log_path_, std::ios::app | std::ios::binary);
    if (!log_) {
        throw ConfigError("cannot open label log for appending: " + log_path_.string());
    }
}

void AnnotationStore::replay() {
    std::ifstream in(log_path_, std::ios::binary);
    if (!in) {
        return;
    }
    std::vector<std::string> lines;
    std::vector<std::uintmax_t> offsets;
    std::uintmax_t offset = 0;
    bool ends_with_newline = true;
    for (std::string line; std::getline(in, line);) {
        offsets.push_back(offset);
        offset += line.size() + 1;
        ends_with_newline = !in.eof();
        lines.push_back(std::move(line));
    }
    in.close();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto record = labeled_overlap_from_json(nlohmann::json::parse(line));
            auto id = record.event_id;
            labels_.insert_or_assign(std::move(id), std::move(record));
        } catch (const std::exception& e) {
            // A torn final line is what an interrupted append leaves behind; cut it off so the
            // next append starts on a fresh line.
            if (i + 1 == lines.size()) {
                std::filesystem::resize_file(log_path_, offsets[i]);
                return;
            }
            throw ValidationError("label log line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    if (!ends_with_newline) {
        std::ofstream(log_path_, std::ios::app | std::ios::binary) << '\n';
    }
}

std::size_t AnnotationStore::enqueue_candidates(const std::vector<SwitchEvent>& events) {
    std::unique_lock lock(mutex_);
    std::size_t added = 0;
    for (const auto& e : events) {
        if (queue_index_.emplace(e.event_id, queue_.size()).second) {
            queue_.push_back(e);
            ++added;
        }
    }
    return added;
}

AnnotationQueueEntry AnnotationStore::make_entry(const SwitchEvent& event) const {
    AnnotationQueueEntry entry;
    entry.event = event;
    entry.labeled = labels_.contains(event.event_id);
    auto it = dialogues_.find(event.dialogue_id);
    if (it == dialogues_.end() || event.k_index + 1 >= it->second.turns.size()) {
        entry.context_turns = {event.turn_k, event.turn_k1};
        return entry;
    }
    const auto& turns = it->second.turns;
    const std::size_t first = event.k_index >= 8 ? event.k_index - 8 : 0;
    const std::size_t last = std::min(turns.size() - 1, event.k_index + 9);
    entry.context_turns.assign(turns.begin() + static_cast<std::ptrdiff_t>(first),
                               turns.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    if (it->second.audio_uri) {
        entry.audio_clip_uri = overlap_clip_uri(*it->second.audio_uri, event);
    }
    return entry;
}

std::optional<AnnotationQueueEntry> AnnotationStore::next_unlabeled() const {
    std::shared_lock lock(mutex_);
    for (const auto& e : queue_) {
        if (!labels_.contains(e.event_id)) {
            return make_entry(e);
        }
    }
    return std::nullopt;
}

std::optional<AnnotationQueueEntry> AnnotationStore::entry(std::string_view event_id) const {
    std::shared_lock lock(mutex_);
    auto it = queue_index_.find(std::string(event_id));
    if (it == queue_index_.end()) {
        return std::nullopt;
    }
    return make_entry(queue_[it->second]);
}

LabeledOverlap AnnotationStore::submit_label(std::string_view event_id, std::string_view label,
                                             std::string_view annotator_id) {
    {
        std::shared_lock lock(mutex_);
        if (!queue_index_.contains(std::string(event_id))) {
            throw NotFoundError("unknown event_id '" + std::string(event_id) + "'");
        }
    }
    auto parsed = label_from_string(label);
    if (!parsed) {
        throw ValidationError("label must be competitive, non_competitive or undefined; got '" +
                              std::string(label) + "'");
    }
    return submit_label(event_id, *parsed, annotator_id);
}

LabeledOverlap AnnotationStore::submit_label(std::string_view event_id, Label label, std::string_view annotator_id) {
    if (annotator_id.empty()) {
        throw ValidationError("annotator_id must not be empty");
    }
    std::unique_lock lock(mutex_);
    if (!queue_index_.contains(std::string(event_id))) {
        throw NotFoundError("unknown event_id '" + std::string(event_id) + "'");
    }
    LabeledOverlap record{std::string(event_id), label, std::string(annotator_id), clock_()};
    log_ << to_json(record).dump() << '\n';
    log_.flush();
    if (!log_) {
        throw Error("failed to append to label log " + log_path_.string());
    }
    labels_.insert_or_assign(record.event_id, record);
    return record;
}

std::vector<ExportedLabel> AnnotationStore::export_labels() const {
    std::shared_lock lock(mutex_);
    std::vector<ExportedLabel> out;
    for (const auto& [id, label] : labels_) {
        auto it = queue_index_.find(id);
        if (it == queue_index_.end()) {
            continue;
        }
        out.push_back(ExportedLabel{label, queue_[it->second]});
    }
    return out;
}

LabelProgress AnnotationStore::progress() const {
    std::shared_lock lock(mutex_);
    LabelProgress p;
    for (const auto& e : queue_) {
        auto it = labels_.find(e.event_id);
        if (it == labels_.end()) {
            ++p.unlabeled;
            continue;
        }
        switch (it->second.label) {
            case Label::competitive:
                ++p.competitive;
                break;
            case Label::non_competitive:
                ++p.non_competitive;
                break;
            case Label::undefined:
                ++p.undefined;
                break;
        }
    }
    return p;
}

std::size_t AnnotationStore::size() const {
    std::shared_lock lock(mutex_);
    return queue_.size();
}

}  // namespace overlap
