#include "overlap/transcript.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <unordered_map>

#include "overlap/csv.hpp"
#include "overlap/errors.hpp"

namespace overlap {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
        return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
    });
}

std::optional<Channel> map_channel(std::string_view raw, const FormatConfig& config) {
    const auto value = trim(raw);
    if (auto it = config.channel_values.find(std::string(value)); it != config.channel_values.end()) {
        return it->second;
    }
    if (iequals(value, "agent")) {
        return Channel::agent;
    }
    if (iequals(value, "client")) {
        return Channel::client;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Channel c) noexcept {
    return c == Channel::agent ? "agent" : "client";
}

std::optional<Channel> channel_from_string(std::string_view s) noexcept {
    if (s == "agent") {
        return Channel::agent;
    }
    if (s == "client") {
        return Channel::client;
    }
    return std::nullopt;
}

void FormatConfig::apply_mapping(std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key.starts_with("channel:")) {
        auto target = channel_from_string(value);
        if (!target) {
            throw ConfigError("channel mapping target must be agent or client, got '" + std::string(value) + "'");
        }
        channel_values[std::string(key.substr(8))] = *target;
        return;
    }
    if (value.empty()) {
        throw ConfigError("empty column name for key '" + std::string(key) + "'");
    }
    if (key == "dialogue_id") {
        dialogue_id_column = value;
    } else if (key == "channel") {
        channel_column = value;
    } else if (key == "start") {
        start_column = value;
    } else if (key == "end") {
        end_column = value;
    } else if (key == "text") {
        text_column = value;
    } else if (key == "audio_uri") {
        audio_uri_column = value;
    } else {
        throw ConfigError("unknown column-map key '" + std::string(key) + "'");
    }
}

FormatConfig parse_column_map(std::string_view spec, FormatConfig base) {
    while (!spec.empty()) {
        const auto comma = spec.find(',');
        const auto item = spec.substr(0, comma);
        spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
        if (trim(item).empty()) {
            continue;
        }
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("column-map entry '" + std::string(item) + "' is not key=value");
        }
        base.apply_mapping(item.substr(0, eq), item.substr(eq + 1));
    }
    return base;
}

std::optional<std::int64_t> parse_timestamp_ms(std::string_view text, TimeUnit unit) {
    text = trim(text);
    if (text.empty()) {
        return std::nullopt;
    }
    const auto dot = text.find('.');
    const auto whole = text.substr(0, dot);
    const auto frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() && frac.empty()) {
        return std::nullopt;
    }
    const auto all_digits = [](std::string_view s) {
        return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (!all_digits(whole) || !all_digits(frac) || (dot != std::string_view::npos && frac.empty())) {
        return std::nullopt;
    }
    // 15 integer digits keeps every intermediate below 2^63 after the x1000 scale.
    if (whole.size() > 15) {
        return std::nullopt;
    }

    std::int64_t value = 0;
    for (char c : whole) {
        value = value * 10 + (c - '0');
    }
    std::size_t kept = 0;
    if (unit == TimeUnit::seconds) {
        value *= 1000;
        std::int64_t scale = 100;
        for (; kept < 3 && kept < frac.size(); ++kept, scale /= 10) {
            value += (frac[kept] - '0') * scale;
        }
    }
    if (kept < frac.size() && frac[kept] >= '5') {
        ++value;
    }
    return value;
}

std::vector<Turn> order_turns(std::vector<Turn> turns) {
    if (!turns.empty()) {
        const auto& id = turns.front().dialogue_id;
        for (const auto& t : turns) {
            if (t.dialogue_id != id) {
                throw UsageError("order_turns: mixed dialogue ids '" + id + "' and '" + t.dialogue_id + "'");
            }
        }
    }
    std::stable_sort(turns.begin(), turns.end(), [](const Turn& a, const Turn& b) {
        if (a.start_ms != b.start_ms) {
            return a.start_ms < b.start_ms;
        }
        return a.channel < b.channel;
    });
    for (std::size_t i = 0; i < turns.size(); ++i) {
        turns[i].turn_index = i;
    }
    return turns;
}

std::vector<Dialogue> parse_transcript(std::istream& source, const FormatConfig& config) {
    CsvReader reader(source, config.delimiter);
    auto header = reader.next();
    if (!header) {
        throw SchemaError("dialogue_id");
    }
    if (!header->empty() && (*header)[0].starts_with("\xEF\xBB\xBF")) {
        (*header)[0].erase(0, 3);
    }

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header->size(); ++i) {
        index.emplace(std::string(trim((*header)[i])), i);
    }
    const auto require = [&](const char* logical, const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) {
            throw SchemaError(logical);
        }
        return it->second;
    };
    const std::size_t col_id = require("dialogue_id", config.dialogue_id_column);
    const std::size_t col_channel = require("channel", config.channel_column);
    const std::size_t col_start = require("start", config.start_column);
    const std::size_t col_end = require("end", config.end_column);
    const std::size_t col_text = require("text", config.text_column);
    std::optional<std::size_t> col_audio;
    if (auto it = index.find(config.audio_uri_column); it != index.end()) {
        col_audio = it->second;
    }

    std::vector<Dialogue> dialogues;
    std::unordered_map<std::string, std::size_t> position;

    while (auto record = reader.next()) {
        const std::size_t row = reader.record_number();
        if (record->size() == 1 && trim((*record)[0]).empty()) {
            continue;  // blank line
        }
        if (record->size() != header->size()) {
            throw RowError(row, "expected " + std::to_string(header->size()) + " fields, got " +
                                    std::to_string(record->size()));
        }
        const auto& r = *record;

        Turn turn;
        turn.dialogue_id = std::string(trim(r[col_id]));
        if (turn.dialogue_id.empty()) {
            throw RowError(row, "empty dialogue id");
        }
        auto channel = map_channel(r[col_channel], config);
        if (!channel) {
            throw RowError(row, "unknown channel value '" + r[col_channel] + "'");
        }
        turn.channel = *channel;
        auto start = parse_timestamp_ms(r[col_start], config.time_unit);
        if (!start) {
            throw RowError(row, "unparseable start timestamp '" + r[col_start] + "'");
        }
        auto end = parse_timestamp_ms(r[col_end], config.time_unit);
        if (!end) {
            throw RowError(row, "unparseable end timestamp '" + r[col_end] + "'");
        }
        if (*end <= *start) {
            throw RowValidationError(row, "end (" + std::to_string(*end) + ") must be greater than start (" +
                                              std::to_string(*start) + ")");
        }
        turn.start_ms = *start;
        turn.end_ms = *end;
        turn.text = r[col_text];

        auto [it, inserted] = position.emplace(turn.dialogue_id, dialogues.size());
        if (inserted) {
            dialogues.push_back(Dialogue{turn.dialogue_id, {}, std::nullopt});
        }
        Dialogue& d = dialogues[it->second];
        if (col_audio) {
            const auto uri = trim(r[*col_audio]);
            if (!uri.empty()) {
                if (d.audio_uri && *d.audio_uri != uri) {
                    throw RowError(row, "conflicting audio_uri for dialogue '" + d.dialogue_id + "'");
                }
                d.audio_uri = std::string(uri);
            }
        }
        d.turns.push_back(std::move(turn));
    }

    for (auto& d : dialogues) {
        d.turns = order_turns(std::move(d.turns));
    }
    return dialogues;
}

nlohmann::json turn_to_json(const Turn& turn) {
    return nlohmann::json{
        {"dialogue_id", turn.dialogue_id}, {"turn_index", turn.turn_index},
        {"channel", to_string(turn.channel)}, {"start_ms", turn.start_ms},
        {"end_ms", turn.end_ms},           {"text", turn.text},
    };
}

Turn turn_from_json(const nlohmann::json& j) {
    Turn t;
    try {
        t.dialogue_id = j.at("dialogue_id").get<std::string>();
        t.turn_index = j.at("turn_index").get<std::size_t>();
        auto channel = channel_from_string(j.at("channel").get<std::string>());
        if (!channel) {
            throw ValidationError("turn: unknown channel '" + j.at("channel").get<std::string>() + "'");
        }
        t.channel = *channel;
        t.start_ms = j.at("start_ms").get<std::int64_t>();
        t.end_ms = j.at("end_ms").get<std::int64_t>();
        t.text = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("turn record: ") + e.what());
    }
    if (t.start_ms < 0 || t.end_ms <= t.start_ms) {
        throw ValidationError("turn record: end_ms must exceed start_ms >= 0");
    }
    return t;
}

void write_turns(std::ostream& out, const std::vector<Dialogue>& dialogues) {
    for (const auto& d : dialogues) {
        for (const auto& t : d.turns) {
            auto j = turn_to_json(t);
            if (d.audio_uri) {
                j["audio_uri"] = *d.audio_uri;
            }
            out << j.dump() << '\n';
        }
    }
}

std::vector<Dialogue> read_turns(std::istream& in) {
    std::vector<Dialogue> dialogues;
    std::unordered_map<std::string, std::size_t> position;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("turns line " + std::to_string(line_no) + ": " + e.what());
        }
        Turn t = turn_from_json(j);
        auto [it, inserted] = position.emplace(t.dialogue_id, dialogues.size());
        if (inserted) {
            dialogues.push_back(Dialogue{t.dialogue_id, {}, std::nullopt});
        }
        Dialogue& d = dialogues[it->second];
        if (auto a = j.find("audio_uri"); a != j.end() && a->is_string()) {
            d.audio_uri = a->get<std::string>();
        }
        d.turns.push_back(std::move(t));
    }
    for (auto& d : dialogues) {
        for (std::size_t i = 0; i < d.turns.size(); ++i) {
            if (d.turns[i].turn_index != i) {
                throw ValidationError("dialogue '" + d.dialogue_id + "': turn_index values are not consecutive from 0");
            }
        }
    }
    return dialogues;
}

}  // namespace overlap
