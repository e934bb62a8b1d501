#include "absa/labels.hpp"

#include "absa/common.hpp"

namespace absa {

namespace {

constexpr std::array<std::string_view, kNumAspects> kAspectNames = {
    "contact", "schedule", "agreements", "salary", "personal_attention", "communication",
};

constexpr std::array<std::string_view, kNumAspects> kAspectDisplay = {
    "contact", "schedule", "agreements", "salary", "personal attention", "communication",
};

}  // namespace

std::string_view aspect_name(Aspect a) { return kAspectNames[index_of(a)]; }

std::string_view aspect_display_name(Aspect a) { return kAspectDisplay[index_of(a)]; }

std::optional<Aspect> parse_aspect(std::string_view name) {
    for (Aspect a : kAllAspects) {
        if (aspect_name(a) == name || aspect_display_name(a) == name) return a;
    }
    return std::nullopt;
}

std::string_view sentiment_name(Sentiment s) {
    return s == Sentiment::Positive ? "positive" : "negative";
}

std::string_view sentiment_tag(Sentiment s) { return s == Sentiment::Positive ? "POS" : "NEG"; }

std::optional<Sentiment> parse_sentiment(std::string_view name) {
    if (name == "positive" || name == "POS") return Sentiment::Positive;
    if (name == "negative" || name == "NEG") return Sentiment::Negative;
    return std::nullopt;
}

std::string AspectSentiment::tag() const {
    return std::string(aspect_name(aspect)) + ":" + std::string(sentiment_tag(sentiment));
}

const std::array<AspectSentiment, 2 * kNumAspects>& all_aspect_sentiments() {
    static const auto values = [] {
        std::array<AspectSentiment, 2 * kNumAspects> out{};
        std::size_t i = 0;
        for (Aspect a : kAllAspects) {
            out[i++] = {a, Sentiment::Positive};
            out[i++] = {a, Sentiment::Negative};
        }
        return out;
    }();
    return values;
}

LabelSet::LabelSet(std::initializer_list<AspectSentiment> pairs) {
    for (const auto& p : pairs) {
        if (has(p.aspect)) throw Error("label set holds two sentiments for " + std::string(aspect_name(p.aspect)));
        set(p.aspect, p.sentiment);
    }
}

std::size_t LabelSet::size() const {
    std::size_t n = 0;
    for (const auto& s : slots_) n += s.has_value();
    return n;
}

std::vector<Aspect> LabelSet::aspects() const {
    std::vector<Aspect> out;
    for (Aspect a : kAllAspects) {
        if (has(a)) out.push_back(a);
    }
    return out;
}

std::vector<AspectSentiment> LabelSet::pairs() const {
    std::vector<AspectSentiment> out;
    for (Aspect a : kAllAspects) {
        if (auto s = get(a)) out.push_back({a, *s});
    }
    return out;
}

std::size_t LabelSet::overlap(const LabelSet& other) const {
    std::size_t n = 0;
    for (Aspect a : kAllAspects) {
        if (has(a) && get(a) == other.get(a)) ++n;
    }
    return n;
}

std::string LabelSet::key() const {
    if (empty()) return "no_topics";
    std::string out;
    for (const auto& p : pairs()) {
        if (!out.empty()) out += '|';
        out += p.tag();
    }
    return out;
}

nlohmann::json to_json(const LabelSet& labels) {
    auto arr = nlohmann::json::array();
    for (const auto& p : labels.pairs()) {
        arr.push_back({{"aspect", aspect_name(p.aspect)}, {"sentiment", sentiment_name(p.sentiment)}});
    }
    return arr;
}

LabelSet label_set_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error("labels must be an array");
    LabelSet out;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("aspect") || !item.contains("sentiment")) {
            throw Error("label entries need aspect and sentiment");
        }
        auto a = parse_aspect(item.at("aspect").get<std::string>());
        auto s = parse_sentiment(item.at("sentiment").get<std::string>());
        if (!a) throw Error("unknown aspect '" + item.at("aspect").get<std::string>() + "'");
        if (!s) throw Error("unknown sentiment '" + item.at("sentiment").get<std::string>() + "'");
        if (out.has(*a)) throw Error("two sentiments for aspect " + std::string(aspect_name(*a)));
        out.set(*a, *s);
    }
    return out;
}

}  // namespace absa
