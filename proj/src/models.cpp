#include "absa/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "absa/common.hpp"

namespace absa::models {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "absa-model";
constexpr const char* kHeadDeviation =
    "trainable head over frozen backend embeddings; the backend encoder is not fine-tuned";

FeatureVector one_hot_concat(FeatureVector x, Aspect aspect) {
    for (Aspect a : kAllAspects) x.push_back(a == aspect ? 1.0 : 0.0);
    return x;
}

void check_thresholds(const Thresholds& t) {
    for (double v : t) {
        if (!(v > 0.0 && v < 1.0)) throw ConfigError("aspect thresholds must lie in (0, 1)");
    }
}

json header(const char* stage, std::string_view variant) {
    return {{"format", kFormat}, {"version", kModelFormatVersion}, {"stage", stage}, {"variant", variant}};
}

void check_header(const json& j, const char* stage) {
    if (j.value("format", std::string()) != kFormat) throw ParseError("not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion) {
        throw ParseError("unsupported model version " + j.at("version").dump());
    }
    if (j.at("stage").get<std::string>() != stage) {
        throw ParseError("expected a " + std::string(stage) + " model, found " + j.at("stage").get<std::string>());
    }
}

std::shared_ptr<const EmbeddingBackend> require_backend(std::shared_ptr<const EmbeddingBackend> backend,
                                                        const json& metadata) {
    if (!backend) throw ConfigError("this model needs an embedding backend");
    auto want = metadata.at("backend_id").get<std::string>();
    if (backend->id() != want) {
        throw ConfigError("model was trained with backend " + want + " but " + backend->id() + " was given");
    }
    return backend;
}

json mlp_train_json(const MlpTrainParams& p, const std::vector<std::size_t>& hidden, double dropout) {
    return {{"lr", p.lr}, {"epochs", p.epochs}, {"batch", p.batch}, {"hidden", hidden}, {"dropout", dropout}};
}

std::vector<FeatureVector> embed_all(const EmbeddingBackend& backend, const std::vector<std::string>& texts) {
    std::vector<FeatureVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(backend.embed(t));
    return out;
}

}  // namespace

FeatureVector featurize_bow(const text::TfIdfModel& tfidf, const text::Preprocessor& pre, std::string_view text) {
    return tfidf.transform(pre.terms(text)).to_dense();
}

FeatureVector featurize_bow(const text::TfIdfModel& tfidf, const text::Preprocessor& pre,
                            const corpus::Response& response) {
    return featurize_bow(tfidf, pre, response.text);
}

BowFeaturizer BowFeaturizer::fit(const std::vector<std::string>& texts, text::Preprocessor pre) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(texts.size());
    for (const auto& t : texts) docs.push_back(pre.terms(t));
    auto tfidf = text::TfIdfModel::fit(docs);
    tfidf.config = pre.config();
    return {std::move(pre), std::move(tfidf)};
}

json BowFeaturizer::to_json() const { return {{"preprocessor", preprocessor.to_json()}, {"tfidf", tfidf.to_json()}}; }

BowFeaturizer BowFeaturizer::from_json(const json& j) {
    return {text::Preprocessor::from_json(j.at("preprocessor")), text::TfIdfModel::from_json(j.at("tfidf"))};
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto push = [&](std::size_t end) {
        auto s = trim(text.substr(start, end - start));
        if (!s.empty()) out.push_back(std::move(s));
        start = end;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            push(i + 1);
        }
    }
    push(text.size());
    return out;
}

AspectFocus AspectFocus::fit(const std::vector<corpus::LabeledResponse>& train, text::Preprocessor pre) {
    AspectFocus f;
    std::vector<std::set<std::string>> docs;
    for (const auto& r : train) {
        auto terms = pre.terms(r.response.text);
        docs.emplace_back(terms.begin(), terms.end());
    }
    for (Aspect a : kAllAspects) {
        std::map<std::string, std::array<double, 2>> df;  // [with, without]
        double with = 0, without = 0;
        for (std::size_t i = 0; i < train.size(); ++i) {
            bool has = train[i].labels.has(a);
            (has ? with : without) += 1;
            for (const auto& t : docs[i]) df[t][has ? 0 : 1] += 1;
        }
        auto& w = f.weights_[index_of(a)];
        for (const auto& [term, c] : df) {
            w[term] = std::log((c[0] + 1.0) / (with + 2.0)) - std::log((c[1] + 1.0) / (without + 2.0));
        }
    }
    f.pre_ = std::move(pre);
    return f;
}

double AspectFocus::relevance(std::string_view sentence, Aspect aspect) const {
    const auto& w = weights_[index_of(aspect)];
    auto terms = pre_.terms(sentence);
    std::set<std::string> distinct(terms.begin(), terms.end());
    double s = 0.0;
    for (const auto& t : distinct) {
        auto it = w.find(t);
        if (it != w.end()) s += it->second;
    }
    return s;
}

std::string AspectFocus::focus(std::string_view text, Aspect aspect) const {
    auto sentences = split_sentences(text);
    if (sentences.size() <= 1) return std::string(text);
    std::size_t best = 0;
    double best_score = relevance(sentences[0], aspect);
    for (std::size_t i = 1; i < sentences.size(); ++i) {
        double s = relevance(sentences[i], aspect);
        if (s > best_score) best_score = s, best = i;
    }
    return sentences[best];
}

json AspectFocus::to_json() const {
    json w = json::object();
    for (Aspect a : kAllAspects) w[std::string(aspect_name(a))] = weights_[index_of(a)];
    return {{"preprocessor", pre_.to_json()}, {"weights", w}};
}

AspectFocus AspectFocus::from_json(const json& j) {
    AspectFocus f;
    f.pre_ = text::Preprocessor::from_json(j.at("preprocessor"));
    for (Aspect a : kAllAspects) {
        f.weights_[index_of(a)] = j.at("weights").at(std::string(aspect_name(a))).get<std::map<std::string, double>>();
    }
    return f;
}

std::string_view variant_name(AspectVariant v) {
    switch (v) {
        case AspectVariant::SvmOvr: return "svm_ovr";
        case AspectVariant::MlpMultiLabel: return "mlp";
        case AspectVariant::EmbeddingHead: return "embedding_head";
        case AspectVariant::ZeroShot: return "zero_shot";
    }
    return "?";
}

std::string_view variant_name(SentimentVariant v) {
    switch (v) {
        case SentimentVariant::SvmLinear: return "svm_linear";
        case SentimentVariant::Mlp: return "mlp";
        case SentimentVariant::EmbeddingHead: return "embedding_head";
    }
    return "?";
}

AspectVariant parse_aspect_variant(std::string_view s) {
    for (auto v : {AspectVariant::SvmOvr, AspectVariant::MlpMultiLabel, AspectVariant::EmbeddingHead,
                   AspectVariant::ZeroShot}) {
        if (variant_name(v) == s) return v;
    }
    throw ConfigError("unknown aspect classifier variant '" + std::string(s) + "'");
}

SentimentVariant parse_sentiment_variant(std::string_view s) {
    for (auto v : {SentimentVariant::SvmLinear, SentimentVariant::Mlp, SentimentVariant::EmbeddingHead}) {
        if (variant_name(v) == s) return v;
    }
    throw ConfigError("unknown sentiment classifier variant '" + std::string(s) + "'");
}

std::array<std::string, kNumAspects> default_hypotheses() {
    return {
        "Dit gaat over het contact met het bureau.",
        "Dit gaat over het rooster en de werktijden.",
        "Dit gaat over de afspraken en het contract.",
        "Dit gaat over het salaris en de betaling.",
        "Dit gaat over persoonlijke aandacht en begeleiding.",
        "Dit gaat over de communicatie en informatie.",
    };
}

AspectScores zero_shot_scores(const EmbeddingBackend& backend, std::string_view text,
                              const std::array<std::string, kNumAspects>& hypotheses) {
    AspectScores s{};
    for (std::size_t a = 0; a < kNumAspects; ++a) s[a] = backend.entail(text, hypotheses[a]);
    return s;
}

// ---- stage 1 ----

AspectClassifier AspectClassifier::zero_shot(std::shared_ptr<const EmbeddingBackend> backend,
                                             std::array<std::string, kNumAspects> hypotheses, Thresholds thresholds) {
    if (!backend) throw ConfigError("zero-shot scoring needs an embedding backend");
    for (const auto& h : hypotheses) {
        if (trim(h).empty()) throw ConfigError("zero-shot hypotheses must be non-empty");
    }
    check_thresholds(thresholds);
    AspectClassifier c;
    c.variant_ = AspectVariant::ZeroShot;
    c.thresholds_ = thresholds;
    c.hypotheses_ = std::move(hypotheses);
    c.backend_ = std::move(backend);
    c.metadata_ = {{"backend_id", c.backend_->id()}, {"seed", 0}, {"training_size", 0}};
    return c;
}

AspectClassifier AspectClassifier::train(const AspectTrainConfig& config,
                                         const std::vector<corpus::LabeledResponse>& train,
                                         std::shared_ptr<const EmbeddingBackend> backend) {
    if (config.variant == AspectVariant::ZeroShot) {
        return zero_shot(std::move(backend), config.hypotheses, config.thresholds);
    }
    if (train.empty()) throw Error("aspect classifier: empty training set");
    check_thresholds(config.thresholds);

    AspectClassifier c;
    c.variant_ = config.variant;
    c.thresholds_ = config.thresholds;
    c.metadata_ = {{"seed", config.seed}, {"training_size", train.size()}};

    std::vector<std::string> texts;
    std::vector<std::array<bool, kNumAspects>> targets;
    for (const auto& r : train) {
        texts.push_back(r.response.text);
        std::array<bool, kNumAspects> t{};
        for (Aspect a : kAllAspects) t[index_of(a)] = r.labels.has(a);
        targets.push_back(t);
    }
    auto as_real = [&] {
        std::vector<std::vector<double>> T;
        for (const auto& t : targets) T.emplace_back(t.begin(), t.end());
        return T;
    };
    MlpTrainParams mp = config.mlp;
    mp.seed = config.seed;

    switch (config.variant) {
        case AspectVariant::SvmOvr: {
            c.bow_ = BowFeaturizer::fit(texts, text::default_preprocessor(config.preprocess));
            std::vector<FeatureVector> X;
            for (const auto& t : texts) X.push_back((*c.bow_)(t));
            c.svm_ = svm_ovr_train(X, targets, config.svm);
            c.warnings_ = c.svm_->warnings;
            c.metadata_["svm"] = {{"kernel", config.svm.kernel.to_json()}, {"C", config.svm.C}, {"tol", config.svm.tol}};
            break;
        }
        case AspectVariant::MlpMultiLabel: {
            c.bow_ = BowFeaturizer::fit(texts, text::default_preprocessor(config.preprocess));
            std::vector<FeatureVector> X;
            for (const auto& t : texts) X.push_back((*c.bow_)(t));
            MlpConfig mc{{c.bow_->dimension()}, OutputHead::Sigmoid, config.dropout};
            mc.layers.insert(mc.layers.end(), config.hidden.begin(), config.hidden.end());
            mc.layers.push_back(kNumAspects);
            c.mlp_ = mlp_train(X, as_real(), mc, mp);
            c.metadata_["mlp"] = mlp_train_json(mp, config.hidden, config.dropout);
            break;
        }
        case AspectVariant::EmbeddingHead: {
            if (!backend) throw ConfigError("embedding head needs an embedding backend");
            c.backend_ = backend;
            MlpConfig mc{{backend->dimension(), kNumAspects}, OutputHead::Sigmoid, config.dropout};
            c.mlp_ = mlp_train(embed_all(*backend, texts), as_real(), mc, mp);
            c.metadata_["backend_id"] = backend->id();
            c.metadata_["deviation"] = kHeadDeviation;
            c.metadata_["mlp"] = mlp_train_json(mp, {}, config.dropout);
            break;
        }
        case AspectVariant::ZeroShot: break;
    }
    return c;
}

AspectScores AspectClassifier::scores(const corpus::Response& response) const { return scores(response.text); }

AspectScores AspectClassifier::scores(std::string_view text) const {
    switch (variant_) {
        case AspectVariant::SvmOvr: return svm_->scores((*bow_)(text));
        case AspectVariant::MlpMultiLabel:
        case AspectVariant::EmbeddingHead: {
            auto x = variant_ == AspectVariant::MlpMultiLabel ? (*bow_)(text) : backend_->embed(text);
            auto p = mlp_->predict(x);
            AspectScores s{};
            std::copy(p.begin(), p.end(), s.begin());
            return s;
        }
        case AspectVariant::ZeroShot: return zero_shot_scores(*backend_, text, hypotheses_);
    }
    return {};
}

AspectClassifier AspectClassifier::with_thresholds(const Thresholds& t) const {
    check_thresholds(t);
    AspectClassifier c = *this;
    c.thresholds_ = t;
    return c;
}

std::vector<AspectPrediction> AspectClassifier::predict(const corpus::Response& response) const {
    return predict_aspects(scores(response), thresholds_);
}

json AspectClassifier::to_json() const {
    json j = header("aspect", variant_name(variant_));
    j["thresholds"] = thresholds_;
    j["metadata"] = metadata_;
    j["warnings"] = warnings_;
    if (bow_) j["featurizer"] = bow_->to_json();
    if (svm_) j["svm"] = svm_->to_json();
    if (mlp_) j["mlp"] = mlp_->to_json();
    if (variant_ == AspectVariant::ZeroShot) j["hypotheses"] = hypotheses_;
    return j;
}

AspectClassifier AspectClassifier::from_json(const json& j, std::shared_ptr<const EmbeddingBackend> backend) {
    check_header(j, "aspect");
    AspectClassifier c;
    c.variant_ = parse_aspect_variant(j.at("variant").get<std::string>());
    c.thresholds_ = j.at("thresholds").get<Thresholds>();
    check_thresholds(c.thresholds_);
    c.metadata_ = j.at("metadata");
    c.warnings_ = j.value("warnings", std::vector<std::string>{});
    switch (c.variant_) {
        case AspectVariant::SvmOvr:
            c.bow_ = BowFeaturizer::from_json(j.at("featurizer"));
            c.svm_ = SvmOvr::from_json(j.at("svm"));
            break;
        case AspectVariant::MlpMultiLabel:
            c.bow_ = BowFeaturizer::from_json(j.at("featurizer"));
            c.mlp_ = MlpModel::from_json(j.at("mlp"));
            break;
        case AspectVariant::EmbeddingHead:
            c.backend_ = require_backend(std::move(backend), c.metadata_);
            c.mlp_ = MlpModel::from_json(j.at("mlp"));
            if (c.mlp_->input_dim() != c.backend_->dimension()) throw ConfigError("backend dimension mismatch");
            break;
        case AspectVariant::ZeroShot:
            c.backend_ = require_backend(std::move(backend), c.metadata_);
            c.hypotheses_ = j.at("hypotheses").get<std::array<std::string, kNumAspects>>();
            break;
    }
    return c;
}

// ---- stage 2 ----

SentimentClassifier SentimentClassifier::train(const SentimentTrainConfig& config,
                                               const std::vector<corpus::LabeledResponse>& train,
                                               std::shared_ptr<const EmbeddingBackend> backend) {
    SentimentClassifier c;
    c.variant_ = config.variant;
    if (config.aspect_focus) c.focus_ = AspectFocus::fit(train, text::default_preprocessor(config.preprocess));

    std::vector<std::string> inputs;
    std::vector<Aspect> aspects;
    std::vector<Sentiment> labels;
    for (const auto& r : train) {
        for (const auto& p : r.labels.pairs()) {
            inputs.push_back(c.input_text(r.response.text, p.aspect));
            aspects.push_back(p.aspect);
            labels.push_back(p.sentiment);
        }
    }
    if (inputs.empty()) throw Error("sentiment classifier: no aspect-sentiment pairs in the training set");
    c.metadata_ = {{"seed", config.seed},
                   {"training_pairs", inputs.size()},
                   {"aspect_conditioning", "one_hot"},
                   {"aspect_focus", config.aspect_focus},
                   {"training_aspects", "gold"}};

    if (config.variant == SentimentVariant::EmbeddingHead) {
        if (!backend) throw ConfigError("embedding head needs an embedding backend");
        c.backend_ = backend;
        c.metadata_["backend_id"] = backend->id();
        c.metadata_["deviation"] = kHeadDeviation;
    } else {
        c.bow_ = BowFeaturizer::fit(inputs, text::default_preprocessor(config.preprocess));
    }
    std::vector<FeatureVector> X;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto base = c.bow_ ? (*c.bow_)(inputs[i]) : c.backend_->embed(inputs[i]);
        X.push_back(one_hot_concat(std::move(base), aspects[i]));
    }

    if (config.variant == SentimentVariant::SvmLinear) {
        std::vector<int> y;
        for (auto s : labels) y.push_back(s == Sentiment::Positive ? 1 : -1);
        c.svm_ = svm_train(X, y, config.svm);
        std::vector<double> dec;
        for (const auto& x : X) dec.push_back(c.svm_->decision(x));
        c.platt_ = PlattScaling::fit(dec, y);
        c.metadata_["svm"] = {{"kernel", config.svm.kernel.to_json()}, {"C", config.svm.C}, {"tol", config.svm.tol}};
    } else {
        std::vector<std::vector<double>> T;
        for (auto s : labels) T.push_back(s == Sentiment::Positive ? std::vector<double>{1, 0} : std::vector<double>{0, 1});
        MlpConfig mc{{X[0].size()}, OutputHead::Softmax, config.dropout};
        std::vector<std::size_t> hidden = config.variant == SentimentVariant::Mlp ? config.hidden : std::vector<std::size_t>{};
        mc.layers.insert(mc.layers.end(), hidden.begin(), hidden.end());
        mc.layers.push_back(2);
        MlpTrainParams mp = config.mlp;
        mp.seed = config.seed;
        c.mlp_ = mlp_train(X, T, mc, mp);
        c.metadata_["mlp"] = mlp_train_json(mp, hidden, config.dropout);
    }
    return c;
}

std::string SentimentClassifier::input_text(std::string_view text, Aspect aspect) const {
    return focus_ ? focus_->focus(text, aspect) : std::string(text);
}

FeatureVector SentimentClassifier::features(std::string_view text, Aspect aspect) const {
    auto input = input_text(text, aspect);
    return one_hot_concat(bow_ ? (*bow_)(input) : backend_->embed(input), aspect);
}

std::array<double, 2> SentimentClassifier::probabilities(std::string_view text, Aspect aspect) const {
    auto x = features(text, aspect);
    if (svm_) {
        double p = platt_(svm_->decision(x));
        return {p, 1.0 - p};
    }
    auto p = mlp_->predict(x);
    return {p[0], p[1]};
}

std::array<double, 2> SentimentClassifier::probabilities(const corpus::Response& response, Aspect aspect) const {
    return probabilities(response.text, aspect);
}

SentimentPrediction SentimentClassifier::predict(const corpus::Response& response, Aspect aspect) const {
    auto p = probabilities(response, aspect);
    if (p[0] > p[1]) return {Sentiment::Positive, p[0]};
    return {Sentiment::Negative, p[1]};
}

json SentimentClassifier::to_json() const {
    json j = header("sentiment", variant_name(variant_));
    j["metadata"] = metadata_;
    if (focus_) j["aspect_focus"] = focus_->to_json();
    if (bow_) j["featurizer"] = bow_->to_json();
    if (svm_) {
        j["svm"] = svm_->to_json();
        j["platt"] = {{"A", platt_.A}, {"B", platt_.B}};
    }
    if (mlp_) j["mlp"] = mlp_->to_json();
    return j;
}

SentimentClassifier SentimentClassifier::from_json(const json& j, std::shared_ptr<const EmbeddingBackend> backend) {
    check_header(j, "sentiment");
    SentimentClassifier c;
    c.variant_ = parse_sentiment_variant(j.at("variant").get<std::string>());
    c.metadata_ = j.at("metadata");
    if (j.contains("aspect_focus")) c.focus_ = AspectFocus::from_json(j.at("aspect_focus"));
    if (c.variant_ == SentimentVariant::EmbeddingHead) {
        c.backend_ = require_backend(std::move(backend), c.metadata_);
    } else {
        c.bow_ = BowFeaturizer::from_json(j.at("featurizer"));
    }
    if (c.variant_ == SentimentVariant::SvmLinear) {
        c.svm_ = SvmModel::from_json(j.at("svm"));
        c.platt_ = {j.at("platt").at("A").get<double>(), j.at("platt").at("B").get<double>()};
    } else {
        c.mlp_ = MlpModel::from_json(j.at("mlp"));
    }
    return c;
}

// ---- prediction ----

std::vector<AspectPrediction> predict_aspects(const AspectScores& scores, const Thresholds& thresholds) {
    std::vector<AspectPrediction> out;
    for (Aspect a : kAllAspects) {
        if (scores[index_of(a)] >= thresholds[index_of(a)]) out.push_back({a, scores[index_of(a)]});
    }
    return out;
}

std::vector<AspectPrediction> predict_aspects(const AspectClassifier& clf, const corpus::Response& response) {
    return clf.predict(response);
}

SentimentPrediction predict_sentiment(const SentimentClassifier& clf, const corpus::Response& response, Aspect aspect) {
    return clf.predict(response, aspect);
}

corpus::LabeledResponse pipeline_predict(const AspectPredictor& aspects, const SentimentPredictor& sentiment,
                                         const corpus::Response& response) {
    corpus::LabeledResponse out{response, {}, std::nullopt, false};
    for (const auto& a : aspects.predict(response)) out.labels.set(a.aspect, sentiment.predict(response, a.aspect).sentiment);
    return out;
}

}  // namespace absa::models
