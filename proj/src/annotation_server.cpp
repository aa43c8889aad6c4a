#include "overlap/annotation_server.hpp"

#include <httplib.h>

#include "overlap/errors.hpp"

namespace overlap {

namespace {

constexpr const char* kJson = "application/json";

constexpr const char* kStubPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>Overlap annotation</title></head>
<body>
<p>The labeling UI assets are not installed. Start the service with <code>--static-dir</code>
pointing at the built UI, or use the JSON API under <code>/api/</code>.</p>
</body></html>
)";

void reply_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", message}}.dump(), kJson);
}

}  // namespace

struct AnnotationServer::Impl {
    AnnotationStore& store;
    httplib::Server server;
    int port = -1;

    explicit Impl(AnnotationStore& s) : store(s) {}
};

AnnotationServer::AnnotationServer(AnnotationStore& store, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(store)) {
    auto& svr = impl_->server;
    AnnotationStore* st = &store;

    svr.Get("/api/queue/next", [st](const httplib::Request&, httplib::Response& res) {
        auto entry = st->next_unlabeled();
        if (!entry) {
            res.status = 204;
            return;
        }
        res.set_content(to_json(*entry).dump(), kJson);
    });

    svr.Get("/api/progress", [st](const httplib::Request&, httplib::Response& res) {
        res.set_content(to_json(st->progress()).dump(), kJson);
    });

    svr.Get("/api/events/:id", [st](const httplib::Request& req, httplib::Response& res) {
        const auto& id = req.path_params.at("id");
        auto entry = st->entry(id);
        if (!entry) {
            reply_error(res, 404, "unknown event_id '" + id + "'");
            return;
        }
        res.set_content(to_json(*entry).dump(), kJson);
    });

    svr.Post("/api/labels", [st](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error& e) {
            reply_error(res, 400, std::string("malformed JSON: ") + e.what());
            return;
        }
        if (!body.is_object()) {
            reply_error(res, 400, "body must be a JSON object");
            return;
        }
        for (const char* field : {"event_id", "label", "annotator_id"}) {
            if (!body.contains(field) || !body[field].is_string()) {
                reply_error(res, 400, std::string("missing or non-string field '") + field + "'");
                return;
            }
        }
        try {
            auto stored = st->submit_label(body["event_id"].get<std::string>(), body["label"].get<std::string>(),
                                           body["annotator_id"].get<std::string>());
            res.status = 201;
            res.set_content(to_json(stored).dump(), kJson);
        } catch (const NotFoundError& e) {
            reply_error(res, 404, e.what());
        } catch (const ValidationError& e) {
            reply_error(res, 400, e.what());
        }
    });

    if (static_dir) {
        if (!svr.set_mount_point("/", static_dir->string())) {
            throw ConfigError("static asset directory does not exist: " + static_dir->string());
        }
    } else {
        svr.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(kStubPage, "text/html; charset=utf-8");
        });
    }

    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            reply_error(res, 500, e.what());
        } catch (...) {
            reply_error(res, 500, "unknown error");
        }
    });
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
    } else if (impl_->server.bind_to_port(host, port)) {
        impl_->port = port;
    }
    if (impl_->port <= 0) {
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    }
    return impl_->port;
}

void AnnotationServer::run() {
    if (impl_->port <= 0) {
        throw UsageError("AnnotationServer::run called before bind");
    }
    impl_->server.listen_after_bind();
}

void AnnotationServer::stop() {
    if (impl_) {
        impl_->server.stop();
    }
}

}  // namespace overlap
