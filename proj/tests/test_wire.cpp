#include <doctest.h>

#include <httplib.h>

#include <fstream>
#include <thread>

#include "fuzz.hpp"
#include "overlap/errors.hpp"
#include "overlap/trainer.hpp"
#include "overlap/wire.hpp"
#include "support.hpp"

using namespace overlap;
using nlohmann::json;

namespace {

wire::TrainRequest small_request(int epochs = 2) {
    wire::TrainRequest r;
    r.hyperparameters.epochs = epochs;
    r.hyperparameters.learning_rate = 3e-6;
    r.hyperparameters.seed = 11;
    r.train = {{"вы не поняли", "подождите стоп", 1}, {"а тариф", "угу понятно", 0},
               {"вы не поняли", "стоп подождите", 1}, {"а тариф", "понятно угу", 0}};
    r.validation = {{"вы", "стоп", 1}, {"а", "угу", 0}};
    r.evaluation = {{"x", "стоп", std::nullopt}, {"y", "угу", std::nullopt}};
    return r;
}

json echo_response(const wire::TrainRequest& r, double score = 0.5) {
    json epochs = json::array();
    for (int e = 1; e <= r.hyperparameters.epochs; ++e) {
        epochs.push_back({{"epoch", e}, {"val_loss", 0.69}, {"val_roc_auc", 0.5}});
    }
    return {{"schema", "overlap-trainer/1"},
            {"per_epoch", epochs},
            {"eval_scores", std::vector<double>(r.evaluation.size(), score)},
            {"backend_info", "echo"}};
}

/// Shell command that swallows stdin and prints `body`.
std::string canned_command(const testing::TempDir& dir, const std::string& name, const std::string& body,
                           const std::string& tail = "") {
    const auto path = dir / name;
    std::ofstream(path) << body;
    return "cat >/dev/null; cat '" + path.string() + "'" + tail;
}

}  // namespace

TEST_CASE("request encode/decode round trip") {
    auto r = small_request();
    r.hyperparameters.warmup_steps = 10;
    r.hyperparameters.max_grad_norm = 1.0;
    CHECK(wire::decode_request(wire::to_json(r).dump()) == r);
    CHECK(wire::decode_request(wire::to_json(small_request()).dump()) == small_request());
}

TEST_CASE("request decoding ignores unknown fields and names the first bad field") {
    auto j = wire::to_json(small_request());
    j["comment"] = "extra";
    j["hyperparameters"]["scheduler"] = "linear";
    j["train"][0]["weight"] = 2;
    CHECK(wire::decode_request(j.dump()) == small_request());

    const auto field_of = [](const json& bad) {
        try {
            wire::decode_request(bad.dump());
        } catch (const ProtocolError& e) {
            return e.field();
        }
        return std::string("<accepted>");
    };
    auto bad = wire::to_json(small_request());
    bad["schema"] = "overlap-trainer/0";
    CHECK(field_of(bad) == "schema");
    bad = wire::to_json(small_request());
    bad["hyperparameters"]["epochs"] = 0;
    CHECK(field_of(bad) == "hyperparameters.epochs");
    bad = wire::to_json(small_request());
    bad["hyperparameters"]["learning_rate"] = -1;
    CHECK(field_of(bad) == "hyperparameters.learning_rate");
    bad = wire::to_json(small_request());
    bad["train"][1]["label"] = 2;
    CHECK(field_of(bad) == "train[1].label");
    bad = wire::to_json(small_request());
    bad["validation"][0].erase("label");
    CHECK(field_of(bad) == "validation[0].label");
    bad = wire::to_json(small_request());
    bad["evaluation"][1]["segment_b"] = 5;
    CHECK(field_of(bad) == "evaluation[1].segment_b");
    bad = wire::to_json(small_request());
    bad["train"] = json::array();
    CHECK(field_of(bad) == "train");
    CHECK_THROWS_AS(wire::decode_request("{"), ProtocolError);
}

TEST_CASE("response validation") {
    const auto req = small_request();
    SUBCASE("echo backend scoring 0.5 is valid") {
        const auto r = wire::decode_response(echo_response(req).dump(), req);
        CHECK(r.eval_scores == std::vector<double>{0.5, 0.5});
        CHECK(r.per_epoch.size() == 2);
        CHECK(r.backend_info == "echo");
    }
    SUBCASE("score count mismatch") {
        auto j = echo_response(req);
        j["eval_scores"].push_back(0.5);
        try {
            wire::decode_response(j.dump(), req);
            FAIL("expected ProtocolError");
        } catch (const ProtocolError& e) {
            CHECK(e.field() == "eval_scores");
            CHECK(e.raw_message() == j.dump());
        }
    }
    SUBCASE("score above one") {
        auto j = echo_response(req);
        j["eval_scores"][1] = 1.3;
        try {
            wire::decode_response(j.dump(), req);
            FAIL("expected ProtocolError");
        } catch (const ProtocolError& e) {
            CHECK(e.field() == "eval_scores[1]");
        }
    }
    SUBCASE("error reply") {
        try {
            wire::decode_response(wire::encode_error("CUDA out of memory"), req);
            FAIL("expected BackendError");
        } catch (const BackendError& e) {
            CHECK(e.diagnostics() == "CUDA out of memory");
        }
    }
    SUBCASE("curves may be null only without validation data") {
        auto j = echo_response(req);
        j["per_epoch"][0]["val_loss"] = nullptr;
        CHECK_THROWS_AS(wire::decode_response(j.dump(), req), ProtocolError);
        auto no_val = req;
        no_val.validation.clear();
        CHECK_NOTHROW(wire::decode_response(j.dump(), no_val));

        auto single = req;
        single.validation = {{"a", "b", 1}};
        auto k = echo_response(req);
        k["per_epoch"][1]["val_roc_auc"] = nullptr;
        CHECK_NOTHROW(wire::decode_response(k.dump(), single));
        CHECK_THROWS_AS(wire::decode_response(k.dump(), req), ProtocolError);
    }
    SUBCASE("unknown response members are ignored") {
        auto j = echo_response(req);
        j["gpu"] = "A100";
        j["per_epoch"][0]["train_loss"] = 0.3;
        CHECK_NOTHROW(wire::decode_response(j.dump(), req));
    }
}

TEST_CASE("mutated and truncated responses are always structured protocol errors") {
    const auto req = testing::fuzz_request();
    CHECK_NOTHROW(wire::decode_response(testing::fuzz_valid_response().dump(), req));
    Rng gen(10);
    std::size_t rejected = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto msg = testing::mutate_response(gen);
        CAPTURE(msg);
        try {
            wire::decode_response(msg, req);
            FAIL("mutated message accepted");
        } catch (const ProtocolError& e) {
            CHECK_FALSE(e.field().empty());
            CHECK(e.raw_message() == msg);
            ++rejected;
        } catch (const std::exception& e) {
            FAIL("unstructured error: " << e.what());
        }
    }
    CHECK(rejected == 1000);
}

TEST_CASE("serve_request_line answers with a response or an error reply") {
    auto backend = BaselineTrainer{};
    bool ok = false;
    const auto line = serve_request_line(backend, wire::to_json(small_request()).dump(), &ok);
    CHECK(ok);
    const auto r = wire::decode_response(line, small_request());
    CHECK(r.per_epoch.size() == 2);
    CHECK(r.eval_scores[0] > r.eval_scores[1]);

    const auto err = serve_request_line(backend, "{\"schema\":\"overlap-trainer/1\"}", &ok);
    CHECK_FALSE(ok);
    const auto j = json::parse(err);
    CHECK(j["schema"] == "overlap-trainer/1");
    CHECK(j["error"].get<std::string>().find("hyperparameters") != std::string::npos);
}

TEST_CASE("baseline trainer emits one curve point per requested epoch") {
    for (int epochs : {1, 3, 5}) {
        BaselineTrainer backend;
        const auto req = small_request(epochs);
        const auto r = backend.train(req);
        CHECK_NOTHROW(wire::validate_response(r, req));
        CHECK(r.per_epoch.size() == static_cast<std::size_t>(epochs));
    }
    BaselineTrainerOptions opt;
    opt.steps_per_epoch = 0;
    BaselineTrainer broken(opt);
    CHECK_THROWS_AS(broken.train(small_request()), ConfigError);
    CHECK(BaselineTrainer{}.describe().find("baseline") != std::string::npos);
}

TEST_CASE("baseline trainer uses the request learning rate only when asked") {
    auto slow = small_request();
    slow.hyperparameters.learning_rate = 1e-9;
    BaselineTrainer fixed;
    CHECK(fixed.train(slow).eval_scores == fixed.train(small_request()).eval_scores);
    BaselineTrainerOptions opt;
    opt.use_request_learning_rate = true;
    BaselineTrainer follows(opt);
    const auto s = follows.train(slow).eval_scores;
    CHECK(std::abs(s[0] - 0.5) < 1e-3);
}

TEST_CASE("subprocess trainer") {
    testing::TempDir dir;
    const auto req = small_request();

    SUBCASE("canned valid response") {
        SubprocessTrainer t(canned_command(dir, "ok.json", echo_response(req).dump() + "\n"));
        CHECK(t.train(req).eval_scores == std::vector<double>{0.5, 0.5});
        CHECK(t.describe().starts_with("subprocess: "));
    }
    SUBCASE("request arrives on stdin as one line") {
        const auto captured = dir / "request.json";
        SubprocessTrainer t("cat > '" + captured.string() + "'; cat '" + (dir / "ok.json").string() + "'");
        std::ofstream(dir / "ok.json") << echo_response(req).dump() << "\n";
        t.train(req);
        const auto text = testing::slurp(captured);
        CHECK(text.back() == '\n');
        CHECK(text.find('\n') == text.size() - 1);
        CHECK(wire::decode_request(text) == req);
    }
    SUBCASE("nonzero exit carries stderr") {
        SubprocessTrainer t("cat >/dev/null; echo 'no GPU found' >&2; exit 3");
        try {
            t.train(req);
            FAIL("expected BackendError");
        } catch (const BackendError& e) {
            CHECK(std::string(e.what()).find("status 3") != std::string::npos);
            CHECK(e.diagnostics().find("no GPU found") != std::string::npos);
        }
    }
    SUBCASE("error reply with nonzero exit") {
        SubprocessTrainer t(canned_command(dir, "err.json", wire::encode_error("bad batch") + "\n", "; exit 1"));
        try {
            t.train(req);
            FAIL("expected BackendError");
        } catch (const BackendError& e) {
            CHECK(e.diagnostics() == "bad batch");
        }
    }
    SUBCASE("malformed response quotes the message") {
        auto j = echo_response(req);
        j["eval_scores"][0] = 1.3;
        SubprocessTrainer t(canned_command(dir, "bad.json", j.dump() + "\n"));
        try {
            t.train(req);
            FAIL("expected ProtocolError");
        } catch (const ProtocolError& e) {
            CHECK(e.field() == "eval_scores[0]");
            CHECK(e.raw_message() == j.dump());
        }
    }
    SUBCASE("silent backend") {
        SubprocessTrainer t("cat >/dev/null");
        CHECK_THROWS_AS(t.train(req), ProtocolError);
    }
    SUBCASE("timeout") {
        SubprocessTrainer t("sleep 5", std::chrono::milliseconds(200));
        const auto start = std::chrono::steady_clock::now();
        CHECK_THROWS_AS(t.train(req), BackendError);
        CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(4));
    }
    SUBCASE("large request does not deadlock") {
        auto big = req;
        for (int i = 0; i < 5000; ++i) {
            big.evaluation.push_back({"a long segment of text " + std::to_string(i), "b", std::nullopt});
        }
        SubprocessTrainer t(canned_command(dir, "big.json", echo_response(big).dump() + "\n"));
        CHECK(t.train(big).eval_scores.size() == big.evaluation.size());
    }
}

TEST_CASE("run_process collects both streams and the exit status") {
    const auto r = run_process("read x; echo \"got $x\"; echo warn >&2; exit 4", "hello\n", std::chrono::seconds(10));
    CHECK(r.exit_code == 4);
    CHECK_FALSE(r.timed_out);
    CHECK(r.out == "got hello\n");
    CHECK(r.err == "warn\n");
}

TEST_CASE("http trainer") {
    const auto req = small_request();
    httplib::Server svr;
    svr.Post("/train", [&](const httplib::Request& in, httplib::Response& out) {
        const auto r = wire::decode_request(in.body);
        out.set_content(echo_response(r, 0.25).dump(), "application/json");
    });
    svr.Post("/fail", [](const httplib::Request&, httplib::Response& out) {
        out.status = 500;
        out.set_content(wire::encode_error("trainer crashed"), "application/json");
    });
    svr.Post("/teapot", [](const httplib::Request&, httplib::Response& out) {
        out.status = 418;
        out.set_content("short and stout", "text/plain");
    });
    const int port = svr.bind_to_any_port("127.0.0.1");
    std::thread runner([&] { svr.listen_after_bind(); });
    svr.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    CHECK(HttpTrainer(base + "/train").train(req).eval_scores == std::vector<double>{0.25, 0.25});
    CHECK(call_trainer(req, base + "/train").backend_info == "echo");
    try {
        HttpTrainer(base + "/fail").train(req);
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.diagnostics() == "trainer crashed");
    }
    try {
        HttpTrainer(base + "/teapot").train(req);
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(std::string(e.what()).find("418") != std::string::npos);
    }
    svr.stop();
    runner.join();

    CHECK_THROWS_AS(HttpTrainer(base + "/train", std::chrono::seconds(2)).train(req), BackendError);
}

TEST_CASE("make_trainer maps locators to backends") {
    CHECK(make_trainer("http://localhost:9/x")->describe() == "http: http://localhost:9/x");
    CHECK(make_trainer("builtin:baseline")->describe().find("baseline") != std::string::npos);
    CHECK(make_trainer("python -m trainer")->describe() == "subprocess: python -m trainer");
    CHECK_THROWS_AS(make_trainer(""), ConfigError);
    CHECK_THROWS_AS(make_trainer("https://secure/x"), ConfigError);
}
