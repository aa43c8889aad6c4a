#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace overlap {

enum class Channel : std::uint8_t { agent = 0, client = 1 };

std::string_view to_string(Channel c) noexcept;
/// Parses the canonical names "agent" / "client"; nullopt otherwise.
std::optional<Channel> channel_from_string(std::string_view s) noexcept;

/// One VAD-separated utterance on one channel.
struct Turn {
    std::string dialogue_id;
    std::size_t turn_index = 0;
    Channel channel = Channel::agent;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::string text;

    bool operator==(const Turn&) const = default;
};

struct Dialogue {
    std::string dialogue_id;
    std::vector<Turn> turns;
    std::optional<std::string> audio_uri;

    bool operator==(const Dialogue&) const = default;
};

enum class TimeUnit { milliseconds, seconds };

/// Column mapping and value vocabulary for a delimited transcript table.
struct FormatConfig {
    char delimiter = ',';
    std::string dialogue_id_column = "dialogue_id";
    std::string channel_column = "channel";
    std::string start_column = "start_ms";
    std::string end_column = "end_ms";
    std::string text_column = "text";
    /// Optional; when the header has it, non-empty values become Dialogue::audio_uri.
    std::string audio_uri_column = "audio_uri";
    TimeUnit time_unit = TimeUnit::milliseconds;
    /// Source channel value -> canonical channel. "agent"/"client" always map to themselves.
    std::map<std::string, Channel> channel_values;

    /// Applies one `key=value` override. Keys: dialogue_id, channel, start, end, text,
    /// audio_uri (column names) and channel:<source> (value mapping, e.g. channel:0=agent).
    void apply_mapping(std::string_view key, std::string_view value);
};

/// Parses a list like "start=begin,end=finish,channel:0=agent".
FormatConfig parse_column_map(std::string_view spec, FormatConfig base = {});

/// Parses a header-first delimited table into dialogues grouped by dialogue_id in order of
/// first appearance, each with turns ordered by order_turns().
/// Throws SchemaError, RowError or RowValidationError.
std::vector<Dialogue> parse_transcript(std::istream& source, const FormatConfig& config = {});

/// Stable sort by (start_ms, channel) with agent before client; reassigns turn_index 0..n-1.
/// Throws UsageError when the turns do not share one dialogue_id.
std::vector<Turn> order_turns(std::vector<Turn> turns);

/// Converts a decimal timestamp string into milliseconds, rounding half-up.
/// Returns nullopt for anything that is not a non-negative decimal number.
std::optional<std::int64_t> parse_timestamp_ms(std::string_view text, TimeUnit unit);

// Canonical turn file: one JSON object per line with the Turn fields. A dialogue's
// audio_uri, when present, is carried as an extra "audio_uri" key on each of its lines.
nlohmann::json turn_to_json(const Turn& turn);
Turn turn_from_json(const nlohmann::json& j);

void write_turns(std::ostream& out, const std::vector<Dialogue>& dialogues);
std::vector<Dialogue> read_turns(std::istream& in);

}  // namespace overlap
