#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absa/backend.hpp"
#include "absa/corpus.hpp"
#include "absa/textproc.hpp"
#include "json.hpp"

namespace absa::augment {

struct AugmentationParams {
    std::size_t min_count_per_combo = 30;
    double substitution_prob = 0.30;
    std::size_t max_tokens_replaced = 50;
    std::size_t min_aspects = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Proposes a replacement surface for tokens[position]. Must be deterministic
/// in (tokens, position, seed) and never return the original surface.
class SubstitutionProvider {
public:
    virtual ~SubstitutionProvider() = default;
    virtual std::string id() const = 0;
    virtual std::optional<std::string> propose(const std::vector<text::Token>& tokens, std::size_t position,
                                               std::uint64_t seed) const = 0;
};

/// Table lookup on the lowercased surface; a seeded pick among the
/// alternatives. A capitalized original gets a capitalized replacement.
class SynonymProvider : public SubstitutionProvider {
public:
    explicit SynonymProvider(std::map<std::string, std::vector<std::string>> table);
    /// UTF-8 TSV `surface<TAB>alt1,alt2,...`.
    static SynonymProvider load(const std::filesystem::path& path);
    /// The demo table shipped under data/lexicon.
    static SynonymProvider demo(const std::filesystem::path& data_dir = ABSA_DATA_DIR);

    std::string id() const override;
    std::optional<std::string> propose(const std::vector<text::Token>& tokens, std::size_t position,
                                       std::uint64_t seed) const override;

private:
    std::map<std::string, std::vector<std::string>> table_;
};

/// Nearest neighbours in the backend's embedding space over a candidate
/// vocabulary; a seeded pick among the top k with positive similarity.
class BackendProvider : public SubstitutionProvider {
public:
    BackendProvider(const models::EmbeddingBackend& backend, std::vector<std::string> vocabulary, std::size_t top_k = 5);

    std::string id() const override;
    std::optional<std::string> propose(const std::vector<text::Token>& tokens, std::size_t position,
                                       std::uint64_t seed) const override;

private:
    const models::EmbeddingBackend& backend_;
    std::vector<std::string> vocabulary_;
    std::vector<models::FeatureVector> embeddings_;
    std::size_t top_k_;
};

struct ComboDeficit {
    LabelSet labels;
    std::size_t count = 0;
    std::size_t deficit = 0;
};

/// Every distinct label set in train with at least min_aspects aspects, in
/// key order, with deficit max(0, min_count - count).
std::vector<ComboDeficit> plan(const std::vector<corpus::LabeledResponse>& train, const AugmentationParams& params);

struct Augmented {
    corpus::LabeledResponse sample;
    std::size_t replaced = 0;
};

/// One augmented copy: each token is selected with substitution_prob and the
/// first max_tokens_replaced successful substitutions are applied. Labels are
/// copied; the id is fresh and augmented_from links the source. When nothing
/// was replaced the text is verbatim and noop_augmentation is set.
Augmented augment_one(const corpus::LabeledResponse& source, const SubstitutionProvider& provider,
                      const AugmentationParams& params, std::uint64_t draw_seed, const std::string& new_id);

struct ComboSummary {
    std::string key;
    std::size_t before = 0;
    std::size_t after = 0;
    std::size_t sources = 0;
    bool skipped = false;
};

struct RunSummary {
    std::vector<ComboSummary> combos;
    std::vector<std::string> warnings;
    std::size_t added = 0;
    std::size_t noop = 0;
    std::size_t max_replaced = 0;

    nlohmann::json to_json() const;
};

struct RunResult {
    std::vector<corpus::LabeledResponse> data;
    RunSummary summary;
};

/// Appends augmented copies, cycling over each deficient combo's sources in
/// train order, until every planned combo reaches min_count.
RunResult run(const std::vector<corpus::LabeledResponse>& train, const SubstitutionProvider& provider,
              const AugmentationParams& params);

}  // namespace absa::augment
