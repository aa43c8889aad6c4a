#include "overlap/overlap_engine.hpp"

#include <algorithm>

#include "overlap/errors.hpp"
#include "overlap/hash.hpp"

namespace overlap {

std::string_view to_string(SwitchKind k) noexcept {
    switch (k) {
        case SwitchKind::gap:
            return "gap";
        case SwitchKind::overlap:
            return "overlap";
        case SwitchKind::continuation:
            return "continuation";
    }
    return "gap";
}

namespace {

std::optional<SwitchKind> kind_from_string(std::string_view s) {
    if (s == "gap") {
        return SwitchKind::gap;
    }
    if (s == "overlap") {
        return SwitchKind::overlap;
    }
    if (s == "continuation") {
        return SwitchKind::continuation;
    }
    return std::nullopt;
}

}  // namespace

std::string make_event_id(std::string_view dialogue_id, std::size_t k_index) {
    std::uint64_t h = fnv1a(dialogue_id);
    h = fnv1a(std::string_view("\x1f", 1), h);
    h = fnv1a(std::to_string(k_index), h);
    return to_hex(h);
}

SwitchEvent classify_switch(const Turn& turn_k, const Turn& turn_k1) {
    if (turn_k1.turn_index != turn_k.turn_index + 1) {
        throw UsageError("classify_switch: turn " + std::to_string(turn_k1.turn_index) +
                         " does not follow turn " + std::to_string(turn_k.turn_index));
    }
    if (turn_k.dialogue_id != turn_k1.dialogue_id) {
        throw UsageError("classify_switch: turns belong to different dialogues");
    }

    SwitchEvent e;
    e.dialogue_id = turn_k.dialogue_id;
    e.k_index = turn_k.turn_index;
    e.event_id = make_event_id(e.dialogue_id, e.k_index);
    e.turn_k = turn_k;
    e.turn_k1 = turn_k1;

    if (turn_k.channel == turn_k1.channel) {
        e.kind = SwitchKind::continuation;
    } else if (turn_k1.start_ms < turn_k.end_ms) {
        e.kind = SwitchKind::overlap;
        e.successful = turn_k.end_ms < turn_k1.end_ms;
        e.overlap_duration_ms = std::min(turn_k.end_ms, turn_k1.end_ms) - turn_k1.start_ms;
        e.client_is_interrupter = turn_k1.channel == Channel::client;
    } else {
        e.kind = SwitchKind::gap;
    }
    return e;
}

std::vector<SwitchEvent> build_turn_pairs(const Dialogue& dialogue) {
    std::vector<SwitchEvent> events;
    if (dialogue.turns.size() < 2) {
        return events;
    }
    events.reserve(dialogue.turns.size() - 1);
    for (std::size_t k = 0; k + 1 < dialogue.turns.size(); ++k) {
        events.push_back(classify_switch(dialogue.turns[k], dialogue.turns[k + 1]));
    }
    return events;
}

void FilterConfig::validate() const {
    if (min_overlap_ms < 1) {
        throw ConfigError("min_overlap_ms must be >= 1");
    }
    if (roles_kept.empty()) {
        throw ConfigError("roles_kept must not be empty");
    }
}

std::vector<SwitchEvent> filter_overlaps(const std::vector<SwitchEvent>& events, const FilterConfig& config) {
    config.validate();
    std::vector<SwitchEvent> kept;
    for (const auto& e : events) {
        if (e.kind != SwitchKind::overlap) {
            continue;
        }
        if (config.require_successful && !e.successful.value_or(false)) {
            continue;
        }
        if (e.overlap_duration_ms.value_or(0) < config.min_overlap_ms) {
            continue;
        }
        if (!config.roles_kept.contains(e.interrupter())) {
            continue;
        }
        kept.push_back(e);
    }
    return kept;
}

nlohmann::json event_to_json(const SwitchEvent& e) {
    nlohmann::json j{
        {"event_id", e.event_id},
        {"dialogue_id", e.dialogue_id},
        {"k_index", e.k_index},
        {"kind", to_string(e.kind)},
        {"turn_k", turn_to_json(e.turn_k)},
        {"turn_k1", turn_to_json(e.turn_k1)},
    };
    j["successful"] = e.successful ? nlohmann::json(*e.successful) : nlohmann::json(nullptr);
    j["overlap_duration_ms"] = e.overlap_duration_ms ? nlohmann::json(*e.overlap_duration_ms) : nlohmann::json(nullptr);
    j["client_is_interrupter"] =
        e.client_is_interrupter ? nlohmann::json(*e.client_is_interrupter) : nlohmann::json(nullptr);
    return j;
}

SwitchEvent event_from_json(const nlohmann::json& j) {
    try {
        SwitchEvent e = classify_switch(turn_from_json(j.at("turn_k")), turn_from_json(j.at("turn_k1")));
        // Stored derived fields must agree with what the timestamps imply.
        const auto kind = kind_from_string(j.at("kind").get<std::string>());
        if (!kind || *kind != e.kind || j.at("event_id").get<std::string>() != e.event_id ||
            j.at("k_index").get<std::size_t>() != e.k_index || j.at("dialogue_id").get<std::string>() != e.dialogue_id) {
            throw ValidationError("event record '" + j.value("event_id", std::string{}) +
                                  "' is inconsistent with its turns");
        }
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("event record: ") + ex.what());
    } catch (const UsageError& ex) {
        throw ValidationError(std::string("event record: ") + ex.what());
    }
}

void write_events(std::ostream& out, const std::vector<SwitchEvent>& events) {
    for (const auto& e : events) {
        out << event_to_json(e).dump() << '\n';
    }
}

std::vector<SwitchEvent> read_events(std::istream& in) {
    std::vector<SwitchEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            events.push_back(event_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("events line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return events;
}

}  // namespace overlap
