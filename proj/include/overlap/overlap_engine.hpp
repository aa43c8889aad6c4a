#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "overlap/transcript.hpp"

namespace overlap {

enum class SwitchKind : std::uint8_t { gap, overlap, continuation };

std::string_view to_string(SwitchKind k) noexcept;

/// A consecutive turn pair (K, K+1) and the features derived from its timing.
/// The three optional fields are engaged iff kind == overlap.
struct SwitchEvent {
    std::string event_id;
    std::string dialogue_id;
    std::size_t k_index = 0;
    Turn turn_k;
    Turn turn_k1;
    SwitchKind kind = SwitchKind::gap;
    std::optional<bool> successful;
    std::optional<std::int64_t> overlap_duration_ms;
    std::optional<bool> client_is_interrupter;

    /// Channel of turn K+1; only meaningful for overlaps.
    Channel interrupter() const noexcept { return turn_k1.channel; }

    bool operator==(const SwitchEvent&) const = default;
};

/// Stable identifier for the pair starting at turn K of a dialogue (16 hex digits).
std::string make_event_id(std::string_view dialogue_id, std::size_t k_index);

/// Classifies a switch. Ties: start(K+1) == end(K) is a gap, end(K) == end(K+1) is unsuccessful.
/// Throws UsageError when turn_k1 does not directly follow turn_k.
SwitchEvent classify_switch(const Turn& turn_k, const Turn& turn_k1);

/// n-1 events for n ordered turns; empty for fewer than two turns.
std::vector<SwitchEvent> build_turn_pairs(const Dialogue& dialogue);

struct FilterConfig {
    std::int64_t min_overlap_ms = 1000;
    bool require_successful = true;
    std::set<Channel> roles_kept{Channel::agent, Channel::client};

    /// Throws ConfigError on min_overlap_ms < 1 or an empty role set.
    void validate() const;
};

/// Keeps overlaps that pass the successfulness, duration and interrupter-role rules, in order.
std::vector<SwitchEvent> filter_overlaps(const std::vector<SwitchEvent>& events, const FilterConfig& config = {});

nlohmann::json event_to_json(const SwitchEvent& e);
SwitchEvent event_from_json(const nlohmann::json& j);

void write_events(std::ostream& out, const std::vector<SwitchEvent>& events);
std::vector<SwitchEvent> read_events(std::istream& in);

}  // namespace overlap
