#include <algorithm>
#include <cmath>

#include "absa/common.hpp"
#include "absa/evaluate.hpp"
#include "absa/models.hpp"
#include "absa/synthetic.hpp"
#include "doctest.h"

using namespace absa;
using namespace absa::models;

namespace {

const std::vector<corpus::LabeledResponse>& planted() {
    static const auto data = corpus::generate_synthetic_corpus(corpus::SyntheticSpec::preset("balanced", 360), 5).labeled();
    return data;
}

LabelSet to_set(const std::vector<AspectPrediction>& p) {
    LabelSet l;
    for (const auto& x : p) l.set(x.aspect, Sentiment::Negative);
    return l;
}

double train_macro_f1(const AspectClassifier& clf) {
    std::vector<LabelSet> pred, gold;
    for (const auto& r : planted()) {
        pred.push_back(to_set(clf.predict(r.response)));
        gold.push_back(r.labels);
    }
    return eval::aspect_metrics(pred, gold).macro_f1;
}

struct CountingAspects : AspectPredictor {
    std::vector<AspectPrediction> out;
    std::vector<AspectPrediction> predict(const corpus::Response&) const override { return out; }
};

struct CountingSentiment : SentimentPredictor {
    mutable std::vector<Aspect> calls;
    SentimentPrediction predict(const corpus::Response&, Aspect a) const override {
        calls.push_back(a);
        return {a == Aspect::Salary ? Sentiment::Positive : Sentiment::Negative, 0.9};
    }
};

}  // namespace

TEST_CASE("bow features") {
    text::Preprocessor pre;
    auto bow = BowFeaturizer::fit({"salaris goed", "salaris slecht"}, pre);
    REQUIRE(bow.dimension() == 3);
    // idf: salaris ln(3/3)+1 = 1, goed/slecht ln(3/2)+1
    double idf = std::log(1.5) + 1.0;
    double norm = std::sqrt(1.0 + idf * idf);
    auto v = bow("salaris goed");
    CHECK(v[*bow.tfidf.index("goed")] == doctest::Approx(idf / norm).epsilon(1e-12));
    CHECK(v[*bow.tfidf.index("salaris")] == doctest::Approx(1.0 / norm).epsilon(1e-12));
    CHECK(v[*bow.tfidf.index("slecht")] == 0.0);

    CHECK(bow("onbekend woord") == FeatureVector(3, 0.0));
    auto one = bow("slecht slecht");
    CHECK(one[*bow.tfidf.index("slecht")] == doctest::Approx(1.0));
    double s = 0.0;
    for (double x : one) s += x;
    CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("sentence splitting") {
    CHECK(split_sentences("Een. Twee! Drie?") == std::vector<std::string>{"Een.", "Twee!", "Drie?"});
    CHECK(split_sentences("Geen punt") == std::vector<std::string>{"Geen punt"});
    CHECK(split_sentences("Versie 1.5 is uit.") == std::vector<std::string>{"Versie 1.5 is uit."});
    CHECK(split_sentences("").empty());
}

TEST_CASE("zero-shot scores") {
    auto constant = std::make_shared<ConstantBackend>(0.5);
    auto hyps = default_hypotheses();
    auto s = zero_shot_scores(*constant, "wat dan ook", hyps);
    for (double x : s) CHECK(x == 0.5);

    HashingBackend hb(512, 1);
    auto base = zero_shot_scores(hb, "Het salaris is te laat betaald.", hyps);
    std::array<std::size_t, kNumAspects> perm = {3, 0, 5, 1, 4, 2};
    std::array<std::string, kNumAspects> shuffled;
    for (std::size_t i = 0; i < kNumAspects; ++i) shuffled[i] = hyps[perm[i]];
    auto moved = zero_shot_scores(hb, "Het salaris is te laat betaald.", shuffled);
    for (std::size_t i = 0; i < kNumAspects; ++i) CHECK(moved[i] == base[perm[i]]);

    auto grid = eval::threshold_grid();
    CHECK(std::find(grid.begin(), grid.end(), 0.45) != grid.end());
    CHECK(std::find(grid.begin(), grid.end(), 0.37) != grid.end());
    auto zs = AspectClassifier::zero_shot(constant, hyps, {0.45, 0.45, 0.45, 0.45, 0.45, 0.45});
    CHECK(zs.predict(corpus::Response::make("x", "tekst")).size() == kNumAspects);
    auto zs2 = zs.with_thresholds({0.37, 0.37, 0.37, 0.37, 0.37, 0.37});
    CHECK(zs2.thresholds()[0] == 0.37);
    CHECK(zs.with_thresholds({0.51, 0.51, 0.51, 0.51, 0.51, 0.51}).predict(corpus::Response::make("x", "t")).empty());
    CHECK_THROWS_AS(zs.with_thresholds({0.0, 0.5, 0.5, 0.5, 0.5, 0.5}), ConfigError);
    CHECK_THROWS_AS(zs.with_thresholds({0.5, 0.5, 0.5, 0.5, 0.5, 1.0}), ConfigError);
    CHECK_THROWS_AS(AspectClassifier::zero_shot(nullptr, hyps, zs.thresholds()), ConfigError);
}

TEST_CASE("threshold semantics and monotonicity") {
    AspectScores s = {0.9, 0.1, 0.45, 0.44, 0.5, 0.0};
    auto p = predict_aspects(s, {0.5, 0.5, 0.45, 0.45, 0.5, 0.5});
    REQUIRE(p.size() == 3);
    CHECK(p[0].aspect == Aspect::Contact);
    CHECK(p[1].aspect == Aspect::Agreements);
    CHECK(p[2].aspect == Aspect::PersonalAttention);
    CHECK(predict_aspects(s, {0.95, 0.95, 0.95, 0.95, 0.95, 0.95}).empty());

    Rng rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> k(1, 99);
    for (int trial = 0; trial < 500; ++trial) {
        AspectScores sc;
        Thresholds lo, hi;
        for (std::size_t a = 0; a < kNumAspects; ++a) {
            sc[a] = u(rng);
            int x = k(rng), y = k(rng);
            lo[a] = std::min(x, y) / 100.0;
            hi[a] = std::max(x, y) / 100.0;
        }
        auto big = to_set(predict_aspects(sc, lo));
        auto small = to_set(predict_aspects(sc, hi));
        for (Aspect a : small.aspects()) CHECK(big.has(a));
    }
}

TEST_CASE("pipeline calls stage two once per predicted aspect") {
    CountingAspects none;
    CountingSentiment sent;
    auto r = corpus::Response::make("r1", "Prima.");
    auto out = pipeline_predict(none, sent, r);
    CHECK(out.labels.empty());
    CHECK(sent.calls.empty());
    CHECK(out.response == r);

    CountingAspects two;
    two.out = {{Aspect::Contact, 0.8}, {Aspect::Salary, 0.7}};
    out = pipeline_predict(two, sent, r);
    CHECK(sent.calls == std::vector<Aspect>{Aspect::Contact, Aspect::Salary});
    CHECK(out.labels == LabelSet{{Aspect::Contact, Sentiment::Negative}, {Aspect::Salary, Sentiment::Positive}});
}

TEST_CASE("svm aspect stage on planted data") {
    AspectTrainConfig cfg;
    auto clf = AspectClassifier::train(cfg, planted());
    CHECK(train_macro_f1(clf) >= 0.95);
    auto p = to_set(clf.predict(corpus::Response::make("q", "Ik ben ontevreden over het salaris. Ik werk nu in een magazijn in de regio.")));
    CHECK(p.has(Aspect::Salary));
    for (double s : clf.scores(planted()[0].response)) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
}

TEST_CASE("embedding head on planted data") {
    auto backend = std::make_shared<HashingBackend>();
    AspectTrainConfig cfg;
    cfg.variant = AspectVariant::EmbeddingHead;
    cfg.seed = 3;
    auto clf = AspectClassifier::train(cfg, planted(), backend);
    CHECK(train_macro_f1(clf) >= 0.9);
    CHECK(clf.metadata().at("backend_id") == backend->id());
    CHECK(clf.metadata().contains("deviation"));
    auto again = AspectClassifier::train(cfg, planted(), backend);
    CHECK(again.to_json() == clf.to_json());

    cfg.mlp.epochs = 0;
    auto raw = AspectClassifier::train(cfg, planted(), backend);
    for (double s : raw.scores(planted()[1].response)) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    CHECK_THROWS_AS(AspectClassifier::train(cfg, planted(), nullptr), ConfigError);
}

TEST_CASE("sentiment stage") {
    SentimentTrainConfig cfg;
    auto clf = SentimentClassifier::train(cfg, planted());
    CHECK(clf.metadata().at("training_aspects") == "gold");
    CHECK(clf.metadata().at("aspect_conditioning") == "one_hot");

    auto pos = corpus::Response::make("p", "Over het contact ben ik erg tevreden. Ik werk al twee jaar via het uitzendbureau.");
    CHECK(clf.predict(pos, Aspect::Contact).sentiment == Sentiment::Positive);

    auto mixed = corpus::Response::make(
        "m", "Ik ben heel blij over het salaris. De persoonlijke aandacht vind ik waardeloos. Ik doe dit werk naast mijn studie.");
    CHECK(clf.predict(mixed, Aspect::Salary).sentiment == Sentiment::Positive);
    CHECK(clf.predict(mixed, Aspect::PersonalAttention).sentiment == Sentiment::Negative);

    for (const auto& r : planted()) {
        for (Aspect a : r.labels.aspects()) {
            auto p = clf.probabilities(r.response, a);
            CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("sentiment heads sum to one and tie goes negative") {
    auto backend = std::make_shared<HashingBackend>(256, 2);
    SentimentTrainConfig cfg;
    cfg.variant = SentimentVariant::EmbeddingHead;
    auto head = SentimentClassifier::train(cfg, planted(), backend);
    auto p = head.probabilities("Ik vind het rooster prima.", Aspect::Schedule);
    CHECK(std::abs(p[0] + p[1] - 1.0) <= 1e-9);

    // Zero weights gives exactly 0.5/0.5.
    auto zero = std::make_shared<ConstantBackend>(0.5, 4);
    auto j = SentimentClassifier::train(cfg, planted(), zero).to_json();
    for (auto& layer : j["mlp"]["weights"]) {
        for (auto& row : layer["W"])
            for (auto& w : row) w = 0.0;
        for (auto& b : layer["b"]) b = 0.0;
    }
    auto tied = SentimentClassifier::from_json(j, zero);
    auto r = corpus::Response::make("t", "Maakt niet uit.");
    CHECK(tied.probabilities(r, Aspect::Contact) == std::array<double, 2>{0.5, 0.5});
    CHECK(tied.predict(r, Aspect::Contact).sentiment == Sentiment::Negative);
    CHECK(tied.predict(r, Aspect::Contact).probability == 0.5);
}

TEST_CASE("save and load reproduce predictions exactly") {
    auto backend = std::make_shared<HashingBackend>(256, 9);
    std::vector<corpus::LabeledResponse> small(planted().begin(), planted().begin() + 120);
    std::vector<const corpus::Response*> probe;
    for (std::size_t i = 120; i < 160; ++i) probe.push_back(&planted()[i].response);

    for (auto v : {AspectVariant::SvmOvr, AspectVariant::MlpMultiLabel, AspectVariant::EmbeddingHead,
                   AspectVariant::ZeroShot}) {
        CAPTURE(variant_name(v));
        AspectTrainConfig cfg;
        cfg.variant = v;
        cfg.mlp.epochs = 2;
        auto clf = AspectClassifier::train(cfg, small, backend);
        auto text = clf.to_json().dump();
        auto back = AspectClassifier::from_json(nlohmann::json::parse(text), backend);
        CHECK(back.to_json().dump() == text);
        for (const auto* r : probe) {
            CHECK(back.scores(*r) == clf.scores(*r));
            CHECK(back.predict(*r) == clf.predict(*r));
        }
        if (v == AspectVariant::EmbeddingHead || v == AspectVariant::ZeroShot) {
            auto other = std::make_shared<HashingBackend>(256, 10);
            CHECK_THROWS_AS(AspectClassifier::from_json(nlohmann::json::parse(text), other), ConfigError);
            CHECK_THROWS_AS(AspectClassifier::from_json(nlohmann::json::parse(text), nullptr), ConfigError);
        }
    }
    for (auto v : {SentimentVariant::SvmLinear, SentimentVariant::Mlp, SentimentVariant::EmbeddingHead}) {
        CAPTURE(variant_name(v));
        SentimentTrainConfig cfg;
        cfg.variant = v;
        cfg.mlp.epochs = 2;
        auto clf = SentimentClassifier::train(cfg, small, backend);
        auto text = clf.to_json().dump();
        auto back = SentimentClassifier::from_json(nlohmann::json::parse(text), backend);
        CHECK(back.to_json().dump() == text);
        for (const auto* r : probe) {
            for (Aspect a : kAllAspects) CHECK(back.predict(*r, a) == clf.predict(*r, a));
        }
    }
}

TEST_CASE("model file checks") {
    AspectTrainConfig cfg;
    std::vector<corpus::LabeledResponse> small(planted().begin(), planted().begin() + 60);
    auto j = AspectClassifier::train(cfg, small).to_json();
    auto bad = j;
    bad["version"] = kModelFormatVersion + 1;
    CHECK_THROWS_AS(AspectClassifier::from_json(bad), ParseError);
    CHECK_THROWS_AS(SentimentClassifier::from_json(j), ParseError);
    CHECK_THROWS_AS(AspectClassifier::from_json(nlohmann::json::object()), ParseError);
    CHECK_THROWS_AS(parse_aspect_variant("forest"), ConfigError);
    CHECK(parse_sentiment_variant("svm_linear") == SentimentVariant::SvmLinear);
}

TEST_CASE("end-to-end on planted corpus") {
    auto data = corpus::generate_synthetic_corpus(corpus::SyntheticSpec::preset("paper", 800), 21).labeled();
    auto sp = eval::split(data, {0.70, 0.15, 0.15, 21, true});
    auto aspects = AspectClassifier::train({}, sp.train);
    auto sentiment = SentimentClassifier::train({}, sp.train);
    std::size_t exact = 0;
    for (const auto& r : sp.test) exact += pipeline_predict(aspects, sentiment, r.response).labels == r.labels;
    CHECK(static_cast<double>(exact) / sp.test.size() >= 0.8);
}
