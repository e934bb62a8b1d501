#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace absa {

/// The six satisfaction aspects. The enumerator order is the vector
/// encoding order used by every classifier and report.
enum class Aspect : int {
    Contact = 0,
    Schedule,
    Agreements,
    Salary,
    PersonalAttention,
    Communication,
};

inline constexpr std::size_t kNumAspects = 6;

inline constexpr std::array<Aspect, kNumAspects> kAllAspects = {
    Aspect::Contact, Aspect::Schedule,          Aspect::Agreements,
    Aspect::Salary,  Aspect::PersonalAttention, Aspect::Communication,
};

enum class Sentiment : int { Positive = 0, Negative = 1 };

/// Wire name, e.g. "personal_attention".
std::string_view aspect_name(Aspect a);
/// Human readable name, e.g. "personal attention".
std::string_view aspect_display_name(Aspect a);
std::optional<Aspect> parse_aspect(std::string_view name);

std::string_view sentiment_name(Sentiment s);  // "positive" / "negative"
std::string_view sentiment_tag(Sentiment s);   // "POS" / "NEG"
std::optional<Sentiment> parse_sentiment(std::string_view name);

inline std::size_t index_of(Aspect a) { return static_cast<std::size_t>(a); }

struct AspectSentiment {
    Aspect aspect;
    Sentiment sentiment;

    auto operator<=>(const AspectSentiment&) const = default;

    /// "salary:POS"
    std::string tag() const;
};

/// Every (aspect, sentiment) pair in encoding order (12 values).
const std::array<AspectSentiment, 2 * kNumAspects>& all_aspect_sentiments();

/// A set of aspect-sentiment pairs with at most one sentiment per aspect.
/// The empty set means "no topics".
class LabelSet {
public:
    LabelSet() = default;
    LabelSet(std::initializer_list<AspectSentiment> pairs);

    /// Sets the sentiment for an aspect, replacing any previous value.
    void set(Aspect a, Sentiment s) { slots_[index_of(a)] = s; }
    void erase(Aspect a) { slots_[index_of(a)].reset(); }
    std::optional<Sentiment> get(Aspect a) const { return slots_[index_of(a)]; }
    bool has(Aspect a) const { return slots_[index_of(a)].has_value(); }
    bool contains(const AspectSentiment& p) const { return get(p.aspect) == p.sentiment; }

    std::size_t size() const;
    bool empty() const { return size() == 0; }

    std::vector<Aspect> aspects() const;
    std::vector<AspectSentiment> pairs() const;

    /// Number of pairs shared with another set.
    std::size_t overlap(const LabelSet& other) const;

    /// Canonical key, "contact:NEG|salary:POS"; "no_topics" when empty.
    std::string key() const;

    auto operator<=>(const LabelSet&) const = default;

private:
    std::array<std::optional<Sentiment>, kNumAspects> slots_{};
};

nlohmann::json to_json(const LabelSet& labels);
/// Parses [{"aspect": ..., "sentiment": ...}, ...]; rejects two sentiments
/// for one aspect and unknown names.
LabelSet label_set_from_json(const nlohmann::json& j);

}  // namespace absa
