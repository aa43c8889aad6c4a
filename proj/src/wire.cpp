#include "overlap/wire.hpp"

#include <cmath>

#include "overlap/errors.hpp"

namespace overlap::wire {

using nlohmann::json;

namespace {

json example_to_json(const Example& e) {
    json j{{"segment_a", e.segment_a}, {"segment_b", e.segment_b}};
    if (e.label) {
        j["label"] = *e.label;
    }
    return j;
}

json examples_to_json(const std::vector<Example>& examples) {
    json arr = json::array();
    for (const auto& e : examples) {
        arr.push_back(example_to_json(e));
    }
    return arr;
}

bool is_integer(const json& v) { return v.is_number_integer(); }

bool is_finite_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

std::optional<double> optional_number(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!is_finite_number(*it)) {
        throw ProtocolError(path + "." + key, "must be a finite number or null");
    }
    return it->get<double>();
}

std::vector<Example> decode_examples(const json& root, const char* key, bool label_required) {
    auto it = root.find(key);
    if (it == root.end() || !it->is_array()) {
        throw ProtocolError(key, "must be an array");
    }
    std::vector<Example> out;
    out.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& e = (*it)[i];
        const std::string path = std::string(key) + "[" + std::to_string(i) + "]";
        if (!e.is_object()) {
            throw ProtocolError(path, "must be an object");
        }
        Example ex;
        for (const char* seg : {"segment_a", "segment_b"}) {
            auto s = e.find(seg);
            if (s == e.end() || !s->is_string()) {
                throw ProtocolError(path + "." + seg, "must be a string");
            }
        }
        ex.segment_a = e["segment_a"].get<std::string>();
        ex.segment_b = e["segment_b"].get<std::string>();
        if (auto l = e.find("label"); l != e.end() && !l->is_null()) {
            if (!is_integer(*l) || (l->get<std::int64_t>() != 0 && l->get<std::int64_t>() != 1)) {
                throw ProtocolError(path + ".label", "must be 0 or 1");
            }
            ex.label = l->get<int>();
        } else if (label_required) {
            throw ProtocolError(path + ".label", "required");
        }
        out.push_back(std::move(ex));
    }
    return out;
}

void check_schema(const json& j) {
    auto it = j.find("schema");
    if (it == j.end() || !it->is_string()) {
        throw ProtocolError("schema", "must be a string");
    }
    if (it->get<std::string>() != kSchema) {
        throw ProtocolError("schema", "expected '" + std::string(kSchema) + "', got '" + it->get<std::string>() + "'");
    }
}

}  // namespace

json to_json(const TrainRequest& r) {
    const auto& h = r.hyperparameters;
    json hp{{"learning_rate", h.learning_rate}, {"epochs", h.epochs},         {"batch_size", h.batch_size},
            {"weight_decay", h.weight_decay},   {"max_length", h.max_length}, {"seed", h.seed}};
    if (h.warmup_steps) {
        hp["warmup_steps"] = *h.warmup_steps;
    }
    if (h.max_grad_norm) {
        hp["max_grad_norm"] = *h.max_grad_norm;
    }
    return json{{"schema", kSchema},
                {"hyperparameters", std::move(hp)},
                {"train", examples_to_json(r.train)},
                {"validation", examples_to_json(r.validation)},
                {"evaluation", examples_to_json(r.evaluation)}};
}

json to_json(const TrainResponse& r) {
    json epochs = json::array();
    for (const auto& p : r.per_epoch) {
        epochs.push_back({{"epoch", p.epoch},
                          {"val_loss", p.val_loss ? json(*p.val_loss) : json(nullptr)},
                          {"val_roc_auc", p.val_roc_auc ? json(*p.val_roc_auc) : json(nullptr)}});
    }
    return json{{"schema", kSchema},
                {"per_epoch", std::move(epochs)},
                {"eval_scores", r.eval_scores},
                {"backend_info", r.backend_info}};
}

std::string encode_error(std::string_view message) {
    return json{{"schema", kSchema}, {"error", std::string(message)}}.dump();
}

TrainRequest decode_request(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError("$", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ProtocolError("$", "request must be a JSON object");
    }
    check_schema(j);

    auto hp_it = j.find("hyperparameters");
    if (hp_it == j.end() || !hp_it->is_object()) {
        throw ProtocolError("hyperparameters", "must be an object");
    }
    const json& hp = *hp_it;
    TrainRequest r;
    auto& h = r.hyperparameters;

    const auto positive_int = [&](const char* key) {
        auto it = hp.find(key);
        if (it == hp.end() || !is_integer(*it) || it->get<std::int64_t>() < 1 || it->get<std::int64_t>() > 1'000'000) {
            throw ProtocolError(std::string("hyperparameters.") + key, "must be a positive integer");
        }
        return it->get<int>();
    };
    auto lr = hp.find("learning_rate");
    if (lr == hp.end() || !is_finite_number(*lr) || lr->get<double>() <= 0) {
        throw ProtocolError("hyperparameters.learning_rate", "must be a positive number");
    }
    h.learning_rate = lr->get<double>();
    h.epochs = positive_int("epochs");
    h.batch_size = positive_int("batch_size");
    h.max_length = positive_int("max_length");
    auto wd = hp.find("weight_decay");
    if (wd == hp.end() || !is_finite_number(*wd) || wd->get<double>() < 0) {
        throw ProtocolError("hyperparameters.weight_decay", "must be a non-negative number");
    }
    h.weight_decay = wd->get<double>();
    if (auto s = hp.find("seed"); s != hp.end()) {
        if (!s->is_number_unsigned() && !(is_integer(*s) && s->get<std::int64_t>() >= 0)) {
            throw ProtocolError("hyperparameters.seed", "must be a non-negative integer");
        }
        h.seed = s->get<std::uint64_t>();
    }
    if (auto w = hp.find("warmup_steps"); w != hp.end() && !w->is_null()) {
        if (!is_integer(*w) || w->get<std::int64_t>() < 0) {
            throw ProtocolError("hyperparameters.warmup_steps", "must be a non-negative integer");
        }
        h.warmup_steps = w->get<int>();
    }
    if (auto g = hp.find("max_grad_norm"); g != hp.end() && !g->is_null()) {
        if (!is_finite_number(*g) || g->get<double>() <= 0) {
            throw ProtocolError("hyperparameters.max_grad_norm", "must be a positive number");
        }
        h.max_grad_norm = g->get<double>();
    }

    r.train = decode_examples(j, "train", true);
    r.validation = decode_examples(j, "validation", true);
    r.evaluation = decode_examples(j, "evaluation", false);
    if (r.train.empty()) {
        throw ProtocolError("train", "must not be empty");
    }
    return r;
}

void validate_response(const TrainResponse& response, const TrainRequest& request) {
    const auto& h = request.hyperparameters;
    if (response.per_epoch.size() != static_cast<std::size_t>(h.epochs)) {
        throw ProtocolError("per_epoch", "has " + std::to_string(response.per_epoch.size()) + " entries, expected " +
                                             std::to_string(h.epochs));
    }
    bool has_pos = false;
    bool has_neg = false;
    for (const auto& e : request.validation) {
        (e.label.value_or(0) != 0 ? has_pos : has_neg) = true;
    }
    const bool no_validation = request.validation.empty();
    const bool auc_defined = has_pos && has_neg;

    for (std::size_t i = 0; i < response.per_epoch.size(); ++i) {
        const auto& p = response.per_epoch[i];
        const std::string path = "per_epoch[" + std::to_string(i) + "]";
        if (p.epoch != static_cast<int>(i) + 1) {
            throw ProtocolError(path + ".epoch", "expected " + std::to_string(i + 1) + ", got " + std::to_string(p.epoch));
        }
        if (p.val_loss) {
            if (!std::isfinite(*p.val_loss) || *p.val_loss < 0) {
                throw ProtocolError(path + ".val_loss", "must be finite and non-negative");
            }
        } else if (!no_validation) {
            throw ProtocolError(path + ".val_loss", "required when a validation set is given");
        }
        if (p.val_roc_auc) {
            if (!(*p.val_roc_auc >= 0.0 && *p.val_roc_auc <= 1.0)) {
                throw ProtocolError(path + ".val_roc_auc", "must lie in [0, 1]");
            }
        } else if (auc_defined) {
            throw ProtocolError(path + ".val_roc_auc", "required when the validation set has both classes");
        }
    }

    if (response.eval_scores.size() != request.evaluation.size()) {
        throw ProtocolError("eval_scores", "has " + std::to_string(response.eval_scores.size()) +
                                               " entries, expected " + std::to_string(request.evaluation.size()));
    }
    for (std::size_t i = 0; i < response.eval_scores.size(); ++i) {
        const double s = response.eval_scores[i];
        if (!(s >= 0.0 && s <= 1.0)) {
            throw ProtocolError("eval_scores[" + std::to_string(i) + "]", "must lie in [0, 1]");
        }
    }
}

TrainResponse decode_response(std::string_view line, const TrainRequest& request) {
    const std::string raw(line);
    try {
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ProtocolError("$", std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) {
            throw ProtocolError("$", "response must be a JSON object");
        }
        check_schema(j);
        if (auto err = j.find("error"); err != j.end()) {
            if (!err->is_string()) {
                throw ProtocolError("error", "must be a string");
            }
            throw BackendError("backend reported an error: " + err->get<std::string>(), err->get<std::string>());
        }

        TrainResponse r;
        auto pe = j.find("per_epoch");
        if (pe == j.end() || !pe->is_array()) {
            throw ProtocolError("per_epoch", "must be an array");
        }
        for (std::size_t i = 0; i < pe->size(); ++i) {
            const auto& p = (*pe)[i];
            const std::string path = "per_epoch[" + std::to_string(i) + "]";
            if (!p.is_object()) {
                throw ProtocolError(path, "must be an object");
            }
            auto ep = p.find("epoch");
            if (ep == p.end() || !is_integer(*ep) || ep->get<std::int64_t>() < 1 ||
                ep->get<std::int64_t>() > 1'000'000) {
                throw ProtocolError(path + ".epoch", "must be a positive integer");
            }
            EpochPoint point;
            point.epoch = ep->get<int>();
            point.val_loss = optional_number(p, "val_loss", path);
            point.val_roc_auc = optional_number(p, "val_roc_auc", path);
            r.per_epoch.push_back(point);
        }

        auto es = j.find("eval_scores");
        if (es == j.end() || !es->is_array()) {
            throw ProtocolError("eval_scores", "must be an array");
        }
        r.eval_scores.reserve(es->size());
        for (std::size_t i = 0; i < es->size(); ++i) {
            if (!is_finite_number((*es)[i])) {
                throw ProtocolError("eval_scores[" + std::to_string(i) + "]", "must be a finite number");
            }
            r.eval_scores.push_back((*es)[i].get<double>());
        }

        if (auto bi = j.find("backend_info"); bi != j.end() && !bi->is_null()) {
            if (!bi->is_string()) {
                throw ProtocolError("backend_info", "must be a string");
            }
            r.backend_info = bi->get<std::string>();
        }

        validate_response(r, request);
        return r;
    } catch (const ProtocolError& e) {
        if (!e.raw_message().empty()) {
            throw;
        }
        throw ProtocolError(e.field(), e.detail(), raw);
    }
}

}  // namespace overlap::wire
