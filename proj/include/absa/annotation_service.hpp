#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "absa/annotation_store.hpp"

namespace absa::annotation {

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct ServiceOptions {
    AdjudicationMode mode = AdjudicationMode::ExactSet;
    /// Directory served at "/" (the annotator UI build), if any.
    std::optional<std::filesystem::path> static_dir;
};

/// Routes one API call against the store:
///   GET  /api/tasks/next?annotator=ID   200 task JSON, or 204 when the queue is done
///   POST /api/annotations               {response_id, annotator_id, verdict[, submitted_at]}
///   GET  /api/progress                  per-annotator counts
///   POST /api/adjudicate                resolution summary (+ agreement when complete)
///   GET  /api/export                    JSON Lines of labeled responses
/// Errors are JSON {"error": message} with 400, 404, 405 or 409.
ApiResponse handle_api(AnnotationStore& store, const ApiRequest& request, const ServiceOptions& options = {});

/// cpp-httplib server around handle_api.
class AnnotationServer {
public:
    AnnotationServer(AnnotationStore& store, ServiceOptions options = {});
    ~AnnotationServer();

    AnnotationServer(const AnnotationServer&) = delete;
    AnnotationServer& operator=(const AnnotationServer&) = delete;

    /// Binds host:port (0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves on a background thread after bind().
    void start();
    /// Serves on the calling thread after bind() until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace absa::annotation
