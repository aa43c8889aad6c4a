#include "overlap/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "overlap/errors.hpp"
#include "overlap/rng.hpp"

namespace overlap {

std::string_view to_string(ContextVariant::Kind k) noexcept {
    switch (k) {
        case ContextVariant::Kind::interrupter_only:
            return "interrupter_only";
        case ContextVariant::Kind::both_speakers:
            return "both_speakers";
        case ContextVariant::Kind::extended:
            return "extended";
    }
    return "both_speakers";
}

ContextVariant::Kind context_kind_from_string(std::string_view s) {
    if (s == "interrupter" || s == "interrupter_only") {
        return ContextVariant::Kind::interrupter_only;
    }
    if (s == "both" || s == "both_speakers") {
        return ContextVariant::Kind::both_speakers;
    }
    if (s == "extended") {
        return ContextVariant::Kind::extended;
    }
    throw ConfigError("unknown context variant '" + std::string(s) + "'");
}

void FoldedDataset::validate() const {
    if (n_folds < 2) {
        throw ConfigError("n_folds must be >= 2");
    }
    if (test_fold < 0 || test_fold >= n_folds) {
        throw ConfigError("test_fold " + std::to_string(test_fold) + " outside [0, " + std::to_string(n_folds) + ")");
    }
    for (const auto& m : inputs) {
        if (m.fold < 0 || m.fold >= n_folds) {
            throw ConfigError("input " + m.event_id + " has fold " + std::to_string(m.fold) + " outside [0, " +
                              std::to_string(n_folds) + ")");
        }
    }
}

std::vector<ExportedLabel> assemble_dataset(const std::vector<ExportedLabel>& labeled) {
    std::vector<ExportedLabel> out;
    std::copy_if(labeled.begin(), labeled.end(), std::back_inserter(out),
                 [](const ExportedLabel& r) { return r.label.label != Label::undefined; });
    return out;
}

namespace {

void check_fold_request(std::size_t size, int n_folds) {
    if (n_folds < 2) {
        throw ConfigError("n_folds must be >= 2");
    }
    if (size == 0) {
        throw ConfigError("cannot assign folds to an empty dataset");
    }
    if (static_cast<std::size_t>(n_folds) > size) {
        throw ConfigError("n_folds (" + std::to_string(n_folds) + ") exceeds dataset size (" + std::to_string(size) +
                          ")");
    }
}

}  // namespace

std::vector<int> assign_folds(std::span<const Label> labels, int n_folds, std::uint64_t seed) {
    check_fold_request(labels.size(), n_folds);
    Rng rng(seed);
    std::vector<int> folds(labels.size(), -1);
    int next_fold = 0;
    for (Label cls : {Label::competitive, Label::non_competitive, Label::undefined}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) {
                members.push_back(i);
            }
        }
        rng.shuffle(std::span<std::size_t>(members));
        for (std::size_t idx : members) {
            folds[idx] = next_fold;
            next_fold = (next_fold + 1) % n_folds;
        }
    }
    return folds;
}

std::vector<int> assign_folds_grouped(std::span<const Label> labels, std::span<const std::string> groups, int n_folds,
                                      std::uint64_t seed) {
    if (groups.size() != labels.size()) {
        throw UsageError("assign_folds_grouped: labels and groups differ in length");
    }
    check_fold_request(labels.size(), n_folds);

    std::vector<std::string> keys;
    std::unordered_map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        auto [it, inserted] = members.try_emplace(groups[i]);
        if (inserted) {
            keys.push_back(groups[i]);
        }
        it->second.push_back(i);
    }
    std::sort(keys.begin(), keys.end());
    Rng rng(seed);
    rng.shuffle(std::span<std::string>(keys));

    std::vector<std::size_t> fold_size(static_cast<std::size_t>(n_folds), 0);
    std::vector<int> folds(labels.size(), -1);
    for (const auto& key : keys) {
        const auto smallest = std::min_element(fold_size.begin(), fold_size.end()) - fold_size.begin();
        for (std::size_t idx : members[key]) {
            folds[idx] = static_cast<int>(smallest);
        }
        fold_size[static_cast<std::size_t>(smallest)] += members[key].size();
    }
    return folds;
}

std::pair<std::string, std::string> build_model_input(const SwitchEvent& event, const Dialogue& dialogue,
                                                      const ContextVariant& variant) {
    const auto& turns = dialogue.turns;
    const std::size_t k = event.k_index;
    if (event.dialogue_id != dialogue.dialogue_id || k + 1 >= turns.size() || !(turns[k] == event.turn_k) ||
        !(turns[k + 1] == event.turn_k1)) {
        throw UsageError("build_model_input: event " + event.event_id + " does not belong to dialogue '" +
                         dialogue.dialogue_id + "'");
    }

    const auto join = [&](std::size_t first, std::size_t last) {
        std::string out;
        for (std::size_t i = first; i <= last; ++i) {
            if (turns[i].text.empty()) {
                continue;
            }
            if (!out.empty()) {
                out.push_back(' ');
            }
            out += turns[i].text;
        }
        return out;
    };

    switch (variant.kind) {
        case ContextVariant::Kind::interrupter_only:
            return {std::string{}, event.turn_k1.text};
        case ContextVariant::Kind::both_speakers:
            return {event.turn_k.text, event.turn_k1.text};
        case ContextVariant::Kind::extended: {
            const std::size_t w = variant.extension_width;
            const std::size_t first = k >= w ? k - w : 0;
            const std::size_t last = std::min(turns.size() - 1, k + 1 + w);
            return {join(first, k), join(k + 1, last)};
        }
    }
    return {};
}

FoldedDataset build_folded_dataset(const std::vector<ExportedLabel>& labeled, const std::vector<Dialogue>& dialogues,
                                   const DatasetOptions& options, DatasetSummary* summary) {
    std::unordered_map<std::string, const Dialogue*> by_id;
    for (const auto& d : dialogues) {
        by_id.emplace(d.dialogue_id, &d);
    }

    DatasetSummary local;
    const auto retained = assemble_dataset(labeled);
    local.dropped_undefined = labeled.size() - retained.size();

    FoldedDataset out;
    out.n_folds = options.n_folds;
    out.test_fold = options.test_fold;
    out.seed = options.seed;
    std::vector<Label> labels;
    std::vector<std::string> groups;
    for (const auto& r : retained) {
        auto it = by_id.find(r.event.dialogue_id);
        if (it == by_id.end()) {
            throw UsageError("labeled event " + r.event.event_id + " references unknown dialogue '" +
                             r.event.dialogue_id + "'");
        }
        auto [a, b] = build_model_input(r.event, *it->second, options.variant);
        if (b.empty()) {
            ++local.dropped_empty_interrupter;
            continue;
        }
        out.inputs.push_back(ModelInput{r.event.event_id, std::move(a), std::move(b), r.label.label, 0,
                                        r.event.client_is_interrupter.value_or(false)});
        labels.push_back(r.label.label);
        groups.push_back(r.event.dialogue_id);
    }

    const auto folds = options.group_by_dialogue
                           ? assign_folds_grouped(labels, groups, options.n_folds, options.seed)
                           : assign_folds(labels, options.n_folds, options.seed);
    for (std::size_t i = 0; i < folds.size(); ++i) {
        out.inputs[i].fold = folds[i];
    }
    out.validate();
    if (summary) {
        *summary = local;
    }
    return out;
}

nlohmann::json to_json(const ModelInput& m) {
    return {{"event_id", m.event_id},
            {"segment_a", m.segment_a},
            {"segment_b", m.segment_b},
            {"label", to_string(m.label)},
            {"fold", m.fold},
            {"client_is_interrupter", m.client_is_interrupter}};
}

ModelInput model_input_from_json(const nlohmann::json& j) {
    ModelInput m;
    try {
        m.event_id = j.at("event_id").get<std::string>();
        m.segment_a = j.at("segment_a").get<std::string>();
        m.segment_b = j.at("segment_b").get<std::string>();
        const auto label = label_from_string(j.at("label").get<std::string>());
        if (!label || *label == Label::undefined) {
            throw ValidationError("dataset record " + m.event_id + ": label must be competitive or non_competitive");
        }
        m.label = *label;
        m.fold = j.at("fold").get<int>();
        m.client_is_interrupter = j.at("client_is_interrupter").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dataset record: ") + e.what());
    }
    if (m.segment_b.empty()) {
        throw ValidationError("dataset record " + m.event_id + ": segment_b is empty");
    }
    return m;
}

void write_dataset(std::ostream& out, const std::vector<ModelInput>& inputs) {
    for (const auto& m : inputs) {
        out << to_json(m).dump() << '\n';
    }
}

std::vector<ModelInput> read_dataset(std::istream& in) {
    std::vector<ModelInput> inputs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            inputs.push_back(model_input_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return inputs;
}

}  // namespace overlap
