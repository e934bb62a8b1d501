#include "absa/annotation_service.hpp"

#include <thread>

#include "httplib.h"

namespace absa::annotation {

using nlohmann::json;

namespace {

ApiResponse error(int status, const std::string& message) {
    return {status, json{{"error", message}}.dump(), "application/json"};
}

ApiResponse ok(const json& body, int status = 200) { return {status, body.dump(), "application/json"}; }

ApiResponse next_task(AnnotationStore& store, const ApiRequest& req) {
    auto it = req.query.find("annotator");
    if (it == req.query.end() || it->second.empty()) return error(400, "missing query parameter 'annotator'");
    auto task = store.next_task(it->second);
    if (!task) return {204, "", "application/json"};
    return ok({{"response_id", task->response_id},
               {"annotator_id", task->annotator_id},
               {"text", task->text},
               {"position", task->position},
               {"total", task->total},
               {"escalation", task->escalation}});
}

ApiResponse post_annotation(AnnotationStore& store, const ApiRequest& req) {
    json body;
    try {
        body = json::parse(req.body);
    } catch (const json::exception& e) {
        return error(400, std::string("invalid JSON: ") + e.what());
    }
    Annotation a;
    try {
        a = annotation_from_json(body);
    } catch (const std::exception& e) {
        return error(400, e.what());
    }
    auto result = store.submit(a.response_id, a.annotator_id, a.verdict, a.submitted_at);
    json out = {{"status", "ok"}, {"annotation", to_json(result.annotation)}};
    out["escalated_to"] = result.escalated_to ? json(*result.escalated_to) : json(nullptr);
    return ok(out, 201);
}

ApiResponse progress(AnnotationStore& store) {
    json annotators = json::array();
    std::size_t assigned = 0, done = 0;
    for (const auto& p : store.progress()) {
        annotators.push_back({{"annotator_id", p.annotator_id}, {"assigned", p.assigned}, {"done", p.done}});
        assigned += p.assigned;
        done += p.done;
    }
    return ok({{"annotators", annotators},
               {"assigned", assigned},
               {"done", done},
               {"responses", store.response_ids().size()},
               {"pending_escalations", store.pending_escalations()},
               {"complete", store.complete()}});
}

ApiResponse adjudicate_all(AnnotationStore& store, const ServiceOptions& options) {
    auto outcomes = store.adjudicate(options.mode);
    std::map<std::string, std::size_t> counts = {{"unanimous", 0}, {"majority", 0}, {"escalated", 0}, {"excluded", 0}};
    std::size_t awaiting = 0;
    for (const auto& o : outcomes) {
        ++counts[std::string(resolution_name(o.resolution))];
        awaiting += o.awaiting_fourth;
    }
    auto ids = store.response_ids();
    json out = {{"responses", ids.size()},
                {"adjudicated", outcomes.size()},
                {"incomplete", ids.size() - outcomes.size()},
                {"awaiting_fourth", awaiting},
                {"resolutions", counts},
                {"exported", store.export_labeled(options.mode).size()}};
    out["agreement"] = nullptr;
    if (outcomes.size() == ids.size() && !ids.empty()) {
        out["agreement"] = agreement_report(ids, store.by_response(), options.mode).to_json();
    }
    return ok(out);
}

ApiResponse export_jsonl(AnnotationStore& store, const ServiceOptions& options) {
    return {200, corpus::to_jsonl(store.export_labeled(options.mode)), "application/x-ndjson"};
}

}  // namespace

ApiResponse handle_api(AnnotationStore& store, const ApiRequest& req, const ServiceOptions& options) {
    try {
        if (req.path == "/api/tasks/next") {
            if (req.method != "GET") return error(405, "use GET");
            return next_task(store, req);
        }
        if (req.path == "/api/annotations") {
            if (req.method != "POST") return error(405, "use POST");
            return post_annotation(store, req);
        }
        if (req.path == "/api/progress") {
            if (req.method != "GET") return error(405, "use GET");
            return progress(store);
        }
        if (req.path == "/api/adjudicate") {
            if (req.method != "POST") return error(405, "use POST");
            return adjudicate_all(store, options);
        }
        if (req.path == "/api/export") {
            if (req.method != "GET") return error(405, "use GET");
            return export_jsonl(store, options);
        }
        return error(404, "no route for " + req.path);
    } catch (const AnnotationStore::NotFound& e) {
        return error(404, e.what());
    } catch (const AnnotationStore::Conflict& e) {
        return error(409, e.what());
    } catch (const std::exception& e) {
        return error(400, e.what());
    }
}

struct AnnotationServer::Impl {
    AnnotationStore& store;
    ServiceOptions options;
    httplib::Server server;
    std::thread thread;
    bool bound = false;

    Impl(AnnotationStore& s, ServiceOptions o) : store(s), options(std::move(o)) {}
};

AnnotationServer::AnnotationServer(AnnotationStore& store, ServiceOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest api{req.method, req.path, {}, req.body};
        for (const auto& [k, v] : req.params) api.query[k] = v;
        auto out = handle_api(impl_->store, api, impl_->options);
        res.status = out.status;
        if (out.status != 204) res.set_content(out.body, out.content_type);
        res.set_header("Access-Control-Allow-Origin", "*");
    };
    auto& srv = impl_->server;
    srv.Get(R"(/api/.*)", handler);
    srv.Post(R"(/api/.*)", handler);
    srv.Put(R"(/api/.*)", handler);
    srv.Delete(R"(/api/.*)", handler);
    srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    if (impl_->options.static_dir) srv.set_mount_point("/", impl_->options.static_dir->string());
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    impl_->bound = true;
    return bound;
}

void AnnotationServer::start() {
    if (!impl_->bound) throw Error("AnnotationServer::start before bind");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void AnnotationServer::run() {
    if (!impl_->bound) throw Error("AnnotationServer::run before bind");
    impl_->server.listen_after_bind();
}

void AnnotationServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace absa::annotation
