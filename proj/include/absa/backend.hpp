#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace absa::models {

using FeatureVector = std::vector<double>;

/// Frozen text encoder plus entailment scorer. Implementations must be
/// deterministic per (id, input) and keep a constant dimension.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual FeatureVector embed(std::string_view text) const = 0;
    /// Probability in [0, 1] that text entails hypothesis.
    virtual double entail(std::string_view text, std::string_view hypothesis) const = 0;
};

/// Signed feature hashing of lowercased word unigrams and bigrams into
/// `dimension` buckets, scaled to Euclidean length `norm`.
/// entail = logistic(scale * cosine + bias).
class HashingBackend : public EmbeddingBackend {
public:
    explicit HashingBackend(std::size_t dimension = 1024, std::uint64_t seed = 0, double scale = 5.0, double bias = 0.0,
                            double norm = 16.0);

    std::string id() const override;
    std::size_t dimension() const override { return dimension_; }
    FeatureVector embed(std::string_view text) const override;
    double entail(std::string_view text, std::string_view hypothesis) const override;

private:
    std::size_t dimension_;
    std::uint64_t seed_;
    double scale_;
    double bias_;
    double norm_;
};

/// Returns a fixed entailment probability and a zero embedding.
class ConstantBackend : public EmbeddingBackend {
public:
    explicit ConstantBackend(double p = 0.5, std::size_t dimension = 8) : p_(p), dimension_(dimension) {}

    std::string id() const override;
    std::size_t dimension() const override { return dimension_; }
    FeatureVector embed(std::string_view) const override { return FeatureVector(dimension_, 0.0); }
    double entail(std::string_view, std::string_view) const override { return p_; }

private:
    double p_;
    std::size_t dimension_;
};

/// Client for a remote backend: POST /embed {text} -> {vector},
/// POST /entail {text, hypothesis} -> {p}, GET /info -> {id, dimension}.
class HttpBackend : public EmbeddingBackend {
public:
    HttpBackend(std::string host, int port);

    std::string id() const override { return id_; }
    std::size_t dimension() const override { return dimension_; }
    FeatureVector embed(std::string_view text) const override;
    double entail(std::string_view text, std::string_view hypothesis) const override;

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

    std::string host_;
    int port_;
    std::string id_;
    std::size_t dimension_ = 0;
};

/// Serves any backend over the HTTP contract above.
class BackendServer {
public:
    explicit BackendServer(const EmbeddingBackend& backend);
    ~BackendServer();

    int bind(const std::string& host, int port);
    void start();
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// {"kind": "hashing", "dimension": 1024, "seed": 0, "scale": 5, "bias": 0, "norm": 16}
/// | {"kind": "constant", "p": 0.5} | {"kind": "http", "host": ..., "port": ...}
std::unique_ptr<EmbeddingBackend> make_backend(const nlohmann::json& config);

double cosine(const FeatureVector& a, const FeatureVector& b);

}  // namespace absa::models
