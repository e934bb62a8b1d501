#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/labels.hpp"

namespace absa::corpus {

/// Vocabulary and mixing rates for a planted corpus. Each aspect mention is
/// one sentence built from that aspect's keyword phrases and one sentiment
/// cue, so gold labels follow exactly from what was planted.
struct SyntheticSpec {
    std::array<std::vector<std::string>, kNumAspects> keywords;
    /// Clauses naming a second keyword of the same aspect; no sentiment.
    std::array<std::vector<std::string>, kNumAspects> clauses;
    /// Cues completing "Ik ben {cue} over {keyword}." style templates.
    std::vector<std::string> positive_state_cues;
    std::vector<std::string> negative_state_cues;
    /// Cues completing "{keyword} vind ik {cue}." style templates.
    std::vector<std::string> positive_property_cues;
    std::vector<std::string> negative_property_cues;
    /// Sentences with neither aspect nor sentiment content.
    std::vector<std::string> background;
    /// Aspect-free sentences carrying sentiment; only used in no-topic responses.
    std::vector<std::string> general_sentiment;
    std::vector<std::string> short_responses;
    std::vector<std::string> names;
    std::vector<std::string> streets;

    std::size_t size = 0;
    std::array<double, kNumAspects> aspect_weights{};
    std::array<double, kNumAspects> positive_rate{};
    /// Share of responses with 0, 1, 2, ... aspects.
    std::vector<double> aspects_per_response;
    /// Sentences generated per labeled aspect, all with the same sentiment.
    std::size_t mentions_per_aspect = 1;
    double clause_rate = 0.3;
    double general_sentiment_rate = 0.3;
    double name_rate = 0.0;
    double email_rate = 0.0;
    double address_rate = 0.0;
    double short_rate = 0.0;
    std::size_t min_tokens = 12;

    /// "paper" (alias "skewed"): label distribution skewed like a real campaign.
    /// "topics": single-aspect responses, uniform over the six aspects, each
    /// mentioning its aspect three times.
    /// "balanced": uniform aspects, half positive, mixed aspect counts.
    static SyntheticSpec preset(std::string_view name, std::size_t size);

    /// Throws ConfigError on an empty keyword list or inconsistent rates.
    void validate() const;
};

struct SyntheticCorpus {
    ResponseSet responses;
    std::vector<LabelSet> gold;

    std::vector<LabeledResponse> labeled() const;
};

/// Deterministic for a given (spec, seed).
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace absa::corpus
