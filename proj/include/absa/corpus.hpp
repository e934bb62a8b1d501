#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "absa/labels.hpp"
#include "json.hpp"

namespace absa::corpus {

struct Response {
    std::string id;
    std::string text;
    std::string source;
    std::string recorded_at;  // ISO-8601 date
    std::size_t token_count = 0;
    std::size_t char_count = 0;

    /// Builds a response and computes its token and character counts.
    static Response make(std::string id, std::string text, std::string source = "", std::string recorded_at = "");

    /// Replaces the text and recomputes the counts.
    void set_text(std::string new_text);

    bool operator==(const Response&) const = default;
};

/// Ordered responses with unique ids. Provenance lists every operation
/// applied, in order.
class ResponseSet {
public:
    ResponseSet() = default;
    explicit ResponseSet(std::vector<Response> responses, nlohmann::json provenance = nlohmann::json::array());

    const std::vector<Response>& responses() const { return responses_; }
    const nlohmann::json& provenance() const { return provenance_; }
    std::size_t size() const { return responses_.size(); }
    bool empty() const { return responses_.empty(); }
    const Response& operator[](std::size_t i) const { return responses_[i]; }
    auto begin() const { return responses_.begin(); }
    auto end() const { return responses_.end(); }

    const Response* find(std::string_view id) const;

    ResponseSet with_step(nlohmann::json step) const;

private:
    std::vector<Response> responses_;
    nlohmann::json provenance_ = nlohmann::json::array();
};

enum class Format { Jsonl, Csv };

std::optional<Format> parse_format(std::string_view name);

/// Reads one response per record. Required fields: id, text. Errors name the
/// offending line, or the duplicated id.
ResponseSet ingest(const std::filesystem::path& path, Format format);
ResponseSet ingest_jsonl(std::string_view content, const std::string& origin = "<memory>");
ResponseSet ingest_csv(std::string_view content, const std::string& origin = "<memory>");

nlohmann::json to_json(const Response& r);
std::string to_jsonl(const ResponseSet& set);

/// Retains responses with token_count >= min_tokens and char_count <=
/// max_chars; provenance records how many each rule removed.
ResponseSet filter_by_length(const ResponseSet& set, std::size_t min_tokens = 10, std::size_t max_chars = 512);

struct PseudonymizationRules {
    std::set<std::string> name_gazetteer;
    std::string email_pattern = R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,})";
    std::string address_pattern =
        R"(\b[A-Z][a-z]+(straat|laan|weg|plein|gracht|kade|singel|dijk|steeg|hof)\s+[0-9]+[a-zA-Z]?\b|\b[1-9][0-9]{3}\s?[A-Z]{2}\b)";
    std::map<std::string, std::string> replacements = {
        {"person", "Naam"}, {"email", "Emailadres"}, {"address", "Adres"}};

    /// Throws ConfigError when a placeholder is empty, a pattern does not
    /// compile, or a placeholder would itself match a rule.
    void validate() const;

    /// Gazetteer from a file with one name per line.
    static PseudonymizationRules with_gazetteer(const std::filesystem::path& path);
};

class Pseudonymizer {
public:
    explicit Pseudonymizer(PseudonymizationRules rules);

    Response operator()(const Response& r) const;
    std::string apply(std::string_view text) const;

    /// Gazetteer names plus email/address matches still present in text.
    std::size_t residual_matches(std::string_view text) const;

    const PseudonymizationRules& rules() const { return rules_; }

private:
    PseudonymizationRules rules_;
    std::regex email_;
    std::regex address_;
};

Response pseudonymize(const Response& response, const PseudonymizationRules& rules);
ResponseSet pseudonymize(const ResponseSet& set, const PseudonymizationRules& rules);

/// Capitalized tokens that are not sentence-initial, not placeholders, and not
/// in the known-word list: candidates for a manual review pass.
struct ReviewItem {
    std::string response_id;
    std::string token;
    std::size_t offset;
};
std::vector<ReviewItem> review_residual_names(const ResponseSet& set, const std::set<std::string>& known_words,
                                              const PseudonymizationRules& rules);

/// A response with its adjudicated labels.
struct LabeledResponse {
    Response response;
    LabelSet labels;
    /// Set on augmented copies: id of the original.
    std::optional<std::string> augmented_from;
    bool noop_augmentation = false;

    bool operator==(const LabeledResponse&) const = default;
};

nlohmann::json to_json(const LabeledResponse& r);
LabeledResponse labeled_from_json(const nlohmann::json& j);
std::string to_jsonl(const std::vector<LabeledResponse>& set);
std::vector<LabeledResponse> read_labeled_jsonl(std::string_view content);
std::vector<LabeledResponse> read_labeled(const std::filesystem::path& path);

}  // namespace absa::corpus
