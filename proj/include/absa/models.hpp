#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absa/backend.hpp"
#include "absa/corpus.hpp"
#include "absa/labels.hpp"
#include "absa/mlp.hpp"
#include "absa/svm.hpp"
#include "absa/textproc.hpp"
#include "json.hpp"

namespace absa::models {

inline constexpr int kModelFormatVersion = 1;

using AspectScores = std::array<double, kNumAspects>;
using Thresholds = std::array<double, kNumAspects>;

/// Dense TF-IDF features over the preprocessor's terms.
FeatureVector featurize_bow(const text::TfIdfModel& tfidf, const text::Preprocessor& pre, std::string_view text);
FeatureVector featurize_bow(const text::TfIdfModel& tfidf, const text::Preprocessor& pre,
                            const corpus::Response& response);

struct BowFeaturizer {
    text::Preprocessor preprocessor;
    text::TfIdfModel tfidf;

    static BowFeaturizer fit(const std::vector<std::string>& texts, text::Preprocessor pre);
    FeatureVector operator()(std::string_view text) const { return featurize_bow(tfidf, preprocessor, text); }
    std::size_t dimension() const { return tfidf.dimension(); }

    nlohmann::json to_json() const;
    static BowFeaturizer from_json(const nlohmann::json& j);
};

/// Sentences end at '.', '!' or '?' followed by whitespace or the end of text.
std::vector<std::string> split_sentences(std::string_view text);

/// Picks the sentence of a response that is most about a given aspect, by
/// smoothed log-odds of terms in responses with vs without the aspect.
class AspectFocus {
public:
    static AspectFocus fit(const std::vector<corpus::LabeledResponse>& train, text::Preprocessor pre);

    double relevance(std::string_view sentence, Aspect aspect) const;
    /// Highest-relevance sentence (first on ties); the text itself when it
    /// has at most one sentence.
    std::string focus(std::string_view text, Aspect aspect) const;

    nlohmann::json to_json() const;
    static AspectFocus from_json(const nlohmann::json& j);

private:
    text::Preprocessor pre_;
    std::array<std::map<std::string, double>, kNumAspects> weights_;
};

struct AspectPrediction {
    Aspect aspect;
    double score;
    bool operator==(const AspectPrediction&) const = default;
};

struct SentimentPrediction {
    Sentiment sentiment;
    /// Probability of the predicted class.
    double probability;
    bool operator==(const SentimentPrediction&) const = default;
};

class AspectPredictor {
public:
    virtual ~AspectPredictor() = default;
    virtual std::vector<AspectPrediction> predict(const corpus::Response& response) const = 0;
};

class SentimentPredictor {
public:
    virtual ~SentimentPredictor() = default;
    virtual SentimentPrediction predict(const corpus::Response& response, Aspect aspect) const = 0;
};

enum class AspectVariant { SvmOvr, MlpMultiLabel, EmbeddingHead, ZeroShot };
enum class SentimentVariant { SvmLinear, Mlp, EmbeddingHead };

std::string_view variant_name(AspectVariant v);
std::string_view variant_name(SentimentVariant v);
AspectVariant parse_aspect_variant(std::string_view s);
SentimentVariant parse_sentiment_variant(std::string_view s);

/// Hypotheses for zero-shot entailment, one per aspect in enum order.
std::array<std::string, kNumAspects> default_hypotheses();

struct AspectTrainConfig {
    AspectVariant variant = AspectVariant::SvmOvr;
    SvmParams svm{Kernel::rbf(0.01), 1000.0};
    std::vector<std::size_t> hidden = {256, 128};
    double dropout = 0.3;
    MlpTrainParams mlp{0.005, 10, 16};
    text::PreprocessConfig preprocess;
    std::array<std::string, kNumAspects> hypotheses = default_hypotheses();
    Thresholds thresholds = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    std::uint64_t seed = 0;
};

struct SentimentTrainConfig {
    SentimentVariant variant = SentimentVariant::SvmLinear;
    SvmParams svm{Kernel::linear(), 10.0};
    std::vector<std::size_t> hidden = {128, 64};
    double dropout = 0.3;
    MlpTrainParams mlp{0.005, 10, 4};
    text::PreprocessConfig preprocess;
    bool aspect_focus = true;
    std::uint64_t seed = 0;
};

class AspectClassifier : public AspectPredictor {
public:
    /// Stage 1 on gold label sets. Embedding heads and zero-shot need a backend.
    static AspectClassifier train(const AspectTrainConfig& config, const std::vector<corpus::LabeledResponse>& train,
                                  std::shared_ptr<const EmbeddingBackend> backend = nullptr);
    static AspectClassifier zero_shot(std::shared_ptr<const EmbeddingBackend> backend,
                                      std::array<std::string, kNumAspects> hypotheses, Thresholds thresholds);

    AspectVariant variant() const { return variant_; }
    AspectScores scores(const corpus::Response& response) const;
    AspectScores scores(std::string_view text) const;
    const Thresholds& thresholds() const { return thresholds_; }
    /// Copy with other thresholds; each must lie in (0, 1).
    AspectClassifier with_thresholds(const Thresholds& t) const;
    std::vector<AspectPrediction> predict(const corpus::Response& response) const override;
    const nlohmann::json& metadata() const { return metadata_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    nlohmann::json to_json() const;
    /// The backend must match the id recorded in the file when the variant needs one.
    static AspectClassifier from_json(const nlohmann::json& j, std::shared_ptr<const EmbeddingBackend> backend = nullptr);

private:
    AspectVariant variant_ = AspectVariant::SvmOvr;
    Thresholds thresholds_{};
    std::optional<BowFeaturizer> bow_;
    std::optional<SvmOvr> svm_;
    std::optional<MlpModel> mlp_;
    std::array<std::string, kNumAspects> hypotheses_;
    std::shared_ptr<const EmbeddingBackend> backend_;
    nlohmann::json metadata_ = nlohmann::json::object();
    std::vector<std::string> warnings_;
};

class SentimentClassifier : public SentimentPredictor {
public:
    /// Stage 2 on (response, gold aspect) pairs.
    static SentimentClassifier train(const SentimentTrainConfig& config,
                                     const std::vector<corpus::LabeledResponse>& train,
                                     std::shared_ptr<const EmbeddingBackend> backend = nullptr);

    SentimentVariant variant() const { return variant_; }
    /// (positive, negative), summing to 1.
    std::array<double, 2> probabilities(const corpus::Response& response, Aspect aspect) const;
    std::array<double, 2> probabilities(std::string_view text, Aspect aspect) const;
    /// Positive only when its probability exceeds 0.5; an exact tie is Negative.
    SentimentPrediction predict(const corpus::Response& response, Aspect aspect) const override;
    /// The text the classifier sees for this aspect.
    std::string input_text(std::string_view text, Aspect aspect) const;
    const nlohmann::json& metadata() const { return metadata_; }

    nlohmann::json to_json() const;
    static SentimentClassifier from_json(const nlohmann::json& j,
                                         std::shared_ptr<const EmbeddingBackend> backend = nullptr);

private:
    FeatureVector features(std::string_view text, Aspect aspect) const;

    SentimentVariant variant_ = SentimentVariant::SvmLinear;
    std::optional<AspectFocus> focus_;
    std::optional<BowFeaturizer> bow_;
    std::optional<SvmModel> svm_;
    PlattScaling platt_;
    std::optional<MlpModel> mlp_;
    std::shared_ptr<const EmbeddingBackend> backend_;
    nlohmann::json metadata_ = nlohmann::json::object();
};

/// score(aspect) = backend.entail(text, hypotheses[aspect]).
AspectScores zero_shot_scores(const EmbeddingBackend& backend, std::string_view text,
                              const std::array<std::string, kNumAspects>& hypotheses);

/// Aspects scoring at or above their threshold, in enum order.
std::vector<AspectPrediction> predict_aspects(const AspectScores& scores, const Thresholds& thresholds);
std::vector<AspectPrediction> predict_aspects(const AspectClassifier& clf, const corpus::Response& response);

SentimentPrediction predict_sentiment(const SentimentClassifier& clf, const corpus::Response& response, Aspect aspect);

/// Stage 2 runs once per aspect from stage 1; no aspects means 'no topics'.
corpus::LabeledResponse pipeline_predict(const AspectPredictor& aspects, const SentimentPredictor& sentiment,
                                         const corpus::Response& response);

}  // namespace absa::models
