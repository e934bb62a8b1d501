#include "absa/backend.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

#include "absa/common.hpp"
#include "absa/textproc.hpp"
#include "httplib.h"

namespace absa::models {

using nlohmann::json;

double cosine(const FeatureVector& a, const FeatureVector& b) {
    if (a.size() != b.size()) throw Error("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

HashingBackend::HashingBackend(std::size_t dimension, std::uint64_t seed, double scale, double bias, double norm)
    : dimension_(dimension), seed_(seed), scale_(scale), bias_(bias), norm_(norm) {
    if (dimension_ == 0) throw ConfigError("hashing backend dimension must be positive");
    if (!(norm_ > 0.0)) throw ConfigError("hashing backend norm must be positive");
}

std::string HashingBackend::id() const {
    std::string id = "hashing-d" + std::to_string(dimension_) + "-s" + std::to_string(seed_);
    if (norm_ != 16.0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "-n%g", norm_);
        id += buf;
    }
    return id;
}

FeatureVector HashingBackend::embed(std::string_view text) const {
    std::vector<std::string> words;
    for (const auto& t : text::tokenize(text)) {
        if (!t.is_punct()) words.push_back(to_lower(t.surface));
    }
    FeatureVector v(dimension_, 0.0);
    const std::uint64_t basis = mix_seed(seed_, 0x9e37);
    // Signed hashing: the top bit picks the sign, so collisions cancel on average.
    auto add = [&](const std::string& feature) {
        std::uint64_t h = fnv1a(feature, basis);
        v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        add(words[i]);
        if (i + 1 < words.size()) add(words[i] + ' ' + words[i + 1]);
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    if (n > 0.0) {
        n = std::sqrt(n) / norm_;
        for (double& x : v) x /= n;
    }
    return v;
}

double HashingBackend::entail(std::string_view text, std::string_view hypothesis) const {
    double z = scale_ * cosine(embed(text), embed(hypothesis)) + bias_;
    return 1.0 / (1.0 + std::exp(-z));
}

std::string ConstantBackend::id() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "constant-%.17g-d%zu", p_, dimension_);
    return buf;
}

HttpBackend::HttpBackend(std::string host, int port) : host_(std::move(host)), port_(port) {
    httplib::Client cli(host_, port_);
    auto res = cli.Get("/info");
    if (!res || res->status != 200) throw Error("backend at " + host_ + ":" + std::to_string(port_) + " unreachable");
    auto info = json::parse(res->body);
    id_ = "http:" + info.at("id").get<std::string>();
    dimension_ = info.at("dimension").get<std::size_t>();
}

json HttpBackend::post(const std::string& path, const json& body) const {
    httplib::Client cli(host_, port_);
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res) throw Error("backend request " + path + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error("backend request " + path + " returned " + std::to_string(res->status));
    return json::parse(res->body);
}

FeatureVector HttpBackend::embed(std::string_view text) const {
    try {
        auto v = post("/embed", {{"text", text}}).at("vector").get<FeatureVector>();
        if (v.size() != dimension_) throw Error("backend returned a vector of the wrong dimension");
        return v;
    } catch (const std::exception& e) {
        throw Error(std::string(e.what()) + " (text hash " + hex64(fnv1a(text)) + ")");
    }
}

double HttpBackend::entail(std::string_view text, std::string_view hypothesis) const {
    try {
        return post("/entail", {{"text", text}, {"hypothesis", hypothesis}}).at("p").get<double>();
    } catch (const std::exception& e) {
        throw Error(std::string(e.what()) + " (text hash " + hex64(fnv1a(text)) + ")");
    }
}

struct BackendServer::Impl {
    const EmbeddingBackend& backend;
    httplib::Server server;
    std::thread thread;
    explicit Impl(const EmbeddingBackend& b) : backend(b) {}
};

BackendServer::BackendServer(const EmbeddingBackend& backend) : impl_(std::make_unique<Impl>(backend)) {
    auto& srv = impl_->server;
    auto reply = [](httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    srv.Get("/info", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, {{"id", impl_->backend.id()}, {"dimension", impl_->backend.dimension()}});
    });
    srv.Post("/embed", [this, reply](const httplib::Request& req, httplib::Response& res) {
        try {
            auto body = json::parse(req.body);
            reply(res, 200, {{"vector", impl_->backend.embed(body.at("text").get<std::string>())}});
        } catch (const std::exception& e) {
            reply(res, 400, {{"error", e.what()}});
        }
    });
    srv.Post("/entail", [this, reply](const httplib::Request& req, httplib::Response& res) {
        try {
            auto body = json::parse(req.body);
            reply(res, 200,
                  {{"p", impl_->backend.entail(body.at("text").get<std::string>(),
                                               body.at("hypothesis").get<std::string>())}});
        } catch (const std::exception& e) {
            reply(res, 400, {{"error", e.what()}});
        }
    });
}

BackendServer::~BackendServer() { stop(); }

int BackendServer::bind(const std::string& host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void BackendServer::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void BackendServer::run() { impl_->server.listen_after_bind(); }

void BackendServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::unique_ptr<EmbeddingBackend> make_backend(const json& config) {
    auto kind = config.value("kind", std::string("hashing"));
    if (kind == "hashing") {
        return std::make_unique<HashingBackend>(config.value("dimension", std::size_t{1024}),
                                                config.value("seed", std::uint64_t{0}), config.value("scale", 5.0),
                                                config.value("bias", 0.0), config.value("norm", 16.0));
    }
    if (kind == "constant") {
        return std::make_unique<ConstantBackend>(config.value("p", 0.5), config.value("dimension", std::size_t{8}));
    }
    if (kind == "http") {
        return std::make_unique<HttpBackend>(config.value("host", std::string("127.0.0.1")), config.at("port").get<int>());
    }
    throw ConfigError("unknown backend kind '" + kind + "'");
}

}  // namespace absa::models
