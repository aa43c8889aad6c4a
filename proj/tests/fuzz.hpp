#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "overlap/rng.hpp"
#include "overlap/wire.hpp"

namespace testing {

/// 3 epochs, a two-class validation list and four evaluation examples.
inline overlap::wire::TrainRequest fuzz_request() {
    overlap::wire::TrainRequest r;
    r.hyperparameters.epochs = 3;
    r.train = {{"a", "стоп", 1}, {"b", "угу", 0}};
    r.validation = {{"c", "подождите", 1}, {"d", "ага", 0}};
    r.evaluation = {{"e", "x", std::nullopt}, {"f", "y", std::nullopt}, {"g", "z", std::nullopt}, {"h", "w", std::nullopt}};
    return r;
}

inline nlohmann::json fuzz_valid_response() {
    overlap::wire::TrainResponse r;
    for (int e = 1; e <= 3; ++e) {
        r.per_epoch.push_back({e, 0.7 / e, 0.6 + 0.1 * e});
    }
    r.eval_scores = {0.1, 0.5, 0.9, 1.0};
    // Without the optional free-text member every string in the message is load-bearing.
    auto j = overlap::wire::to_json(r);
    j.erase("backend_info");
    return j;
}

/// A response line that violates the contract for fuzz_request(), built by one of several
/// mutation families (truncation, byte damage, missing or retyped fields, out-of-range values).
inline std::string mutate_response(overlap::Rng& gen) {
    using nlohmann::json;
    const json valid = fuzz_valid_response();
    const std::string text = valid.dump();
    json j = valid;
    const auto pick = [&](std::size_t n) { return static_cast<std::size_t>(gen.below(n)); };
    const json junk_values[] = {json(nullptr), json("0.5"), json::array(), json::object(), json(true), json(-0.25),
                                json(1.5), json(7)};

    switch (gen.below(12)) {
        case 0:  // strict prefix
            return text.substr(0, pick(text.size()));
        case 1: {  // stray quote
            auto s = text;
            s.insert(pick(s.size() + 1), 1, '"');
            return s;
        }
        case 2: {  // stray opening bracket
            auto s = text;
            s.insert(pick(s.size()), 1, gen.below(2) ? '[' : '{');
            return s;
        }
        case 3: {  // required member removed
            const char* keys[] = {"schema", "per_epoch", "eval_scores"};
            j.erase(keys[pick(3)]);
            return j.dump();
        }
        case 4: {  // wrong schema
            const char* schemas[] = {"overlap-trainer/2", "", "OVERLAP-TRAINER/1"};
            j["schema"] = schemas[pick(3)];
            return j.dump();
        }
        case 5: {  // score out of range or not a number
            const json bad[] = {json(1.0001), json(-1e-9), json(42), json("0.3"), json(nullptr), json::array()};
            j["eval_scores"][pick(4)] = bad[pick(6)];
            return j.dump();
        }
        case 6: {  // score count
            if (gen.below(2)) {
                j["eval_scores"].push_back(0.5);
            } else {
                j["eval_scores"].erase(pick(4));
            }
            return j.dump();
        }
        case 7: {  // epoch numbering or count
            const auto i = pick(3);
            switch (gen.below(3)) {
                case 0:
                    j["per_epoch"][i]["epoch"] = static_cast<int>(i) + 2 + static_cast<int>(gen.below(3));
                    break;
                case 1:
                    j["per_epoch"].erase(i);
                    break;
                default:
                    j["per_epoch"].push_back({{"epoch", 4}, {"val_loss", 0.1}, {"val_roc_auc", 0.9}});
            }
            return j.dump();
        }
        case 8: {  // validation curve values
            const auto i = pick(3);
            if (gen.below(2)) {
                const json bad[] = {json(-0.1), json("low"), json(nullptr), json::object()};
                j["per_epoch"][i]["val_loss"] = bad[pick(4)];
            } else {
                const json bad[] = {json(1.2), json(-0.5), json(nullptr), json("high")};
                j["per_epoch"][i]["val_roc_auc"] = bad[pick(4)];
            }
            return j.dump();
        }
        case 9: {  // member retyped
            const char* keys[] = {"per_epoch", "eval_scores", "backend_info", "schema"};
            const auto* key = keys[pick(4)];
            json v = junk_values[pick(8)];
            if (std::string(key) == "backend_info" && (v.is_null() || v.is_string())) {
                v = json(3);
            }
            if (std::string(key) == "per_epoch" && v.is_array()) {
                v = json(0);
            }
            if (std::string(key) == "eval_scores" && v.is_array()) {
                v = json::object();
            }
            j[key] = v;
            return j.dump();
        }
        case 10: {  // not an object at all
            const std::string others[] = {"[]", "null", "42", "\"response\"", "", "   ", "[" + text + "]"};
            return others[pick(7)];
        }
        default: {  // epoch entry damaged
            const auto i = pick(3);
            if (gen.below(2)) {
                j["per_epoch"][i] = junk_values[pick(8)];
            } else {
                j["per_epoch"][i].erase("epoch");
            }
            return j.dump();
        }
    }
}

}  // namespace testing
