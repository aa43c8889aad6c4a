#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "overlap/annotation.hpp"

namespace overlap {

/// HTTP/JSON front end over an AnnotationStore.
///
///   GET  /api/queue/next   200 entry | 204 when nothing is left
///   POST /api/labels       {event_id, label, annotator_id} -> 201 stored record
///   GET  /api/progress     per-label counts plus unlabeled
///   GET  /api/events/{id}  entry (event, context turns, audio clip locator, status)
///   GET  /                 static UI assets from `static_dir`, or a stub page
class AnnotationServer {
public:
    AnnotationServer(AnnotationStore& store, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~AnnotationServer();

    AnnotationServer(const AnnotationServer&) = delete;
    AnnotationServer& operator=(const AnnotationServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port. Throws ConfigError on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called. Requires a prior bind().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace overlap
