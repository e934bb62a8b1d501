#include "absa/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <set>

#include "absa/cluster.hpp"
#include "absa/common.hpp"
#include "absa/synthetic.hpp"
#include "absa/textproc.hpp"

namespace absa::experiment {

using nlohmann::json;
using models::Kernel;
using models::MlpTrainParams;
using models::SvmParams;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void read(const json& v, const std::string& path, bool& out);
void read(const json& v, const std::string& path, std::string& out);
void read(const json& v, const std::string& path, double& out);
void read(const json& v, const std::string& path, std::uint64_t& out);
void read(const json& v, const std::string& path, Kernel& out);
void read(const json& v, const std::string& path, SvmParams& out);
void read(const json& v, const std::string& path, MlpTrainParams& out);
void read(const json& v, const std::string& path, text::PreprocessConfig& out);
void read(const json& v, const std::string& path, annotation::AnnotatorNoise& out);
void read(const json& v, const std::string& path, annotation::AdjudicationMode& out);
void read(const json& v, const std::string& path, models::AspectVariant& out);
void read(const json& v, const std::string& path, models::SentimentVariant& out);
void read(const json& v, const std::string& path, RunSpec& out);

template <class T>
void read(const json& v, const std::string& path, std::optional<T>& out) {
    if (v.is_null()) {
        out.reset();
        return;
    }
    T value{};
    read(v, path, value);
    out = std::move(value);
}

template <class T>
void read(const json& v, const std::string& path, std::vector<T>& out) {
    if (!v.is_array()) bad(path, "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
        T value{};
        read(v[i], path + "[" + std::to_string(i) + "]", value);
        out.push_back(std::move(value));
    }
}

template <class T, std::size_t N>
void read(const json& v, const std::string& path, std::array<T, N>& out) {
    if (!v.is_array() || v.size() != N) bad(path, "expected an array of " + std::to_string(N));
    for (std::size_t i = 0; i < N; ++i) read(v[i], path + "[" + std::to_string(i) + "]", out[i]);
}

/// Reads keys on demand and rejects whatever was not asked for.
class Object {
public:
    Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) bad(path_, "expected an object");
    }

    template <class T>
    Object& opt(const std::string& key, T& out) {
        auto it = j_.find(key);
        if (it != j_.end()) {
            seen_.insert(key);
            read(*it, child(key), out);
        }
        return *this;
    }

    template <class T>
    Object& req(const std::string& key, T& out) {
        if (!j_.contains(key)) bad(child(key), "is required");
        return opt(key, out);
    }

    const json* raw(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) bad(child(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) bad(path, "expected true or false");
    out = v.get<bool>();
}

void read(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) bad(path, "expected a string");
    out = v.get<std::string>();
}

void read(const json& v, const std::string& path, double& out) {
    if (!v.is_number()) bad(path, "expected a number");
    out = v.get<double>();
}

void read(const json& v, const std::string& path, std::uint64_t& out) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        bad(path, "expected a non-negative integer");
    }
    out = v.get<std::uint64_t>();
}

void read(const json& v, const std::string& path, Kernel& out) {
    std::string type;
    double gamma = 0.0;
    Object o(v, path);
    o.req("type", type).opt("gamma", gamma).done();
    if (type == "linear") {
        out = Kernel::linear();
    } else if (type == "rbf") {
        out = Kernel::rbf(gamma);
    } else {
        bad(path + ".type", "unknown kernel '" + type + "'");
    }
}

void read(const json& v, const std::string& path, SvmParams& out) {
    Object(v, path).opt("kernel", out.kernel).opt("C", out.C).opt("tol", out.tol).opt("max_iter", out.max_iter).done();
}

void read(const json& v, const std::string& path, MlpTrainParams& out) {
    Object(v, path)
        .opt("lr", out.lr)
        .opt("epochs", out.epochs)
        .opt("batch", out.batch)
        .opt("beta1", out.beta1)
        .opt("beta2", out.beta2)
        .opt("eps", out.eps)
        .done();
}

void read(const json& v, const std::string& path, text::PreprocessConfig& out) {
    Object(v, path)
        .opt("pos_filter", out.pos_filter)
        .opt("lemmatize", out.lemmatize)
        .opt("keep_unknown", out.keep_unknown)
        .done();
}

void read(const json& v, const std::string& path, annotation::AnnotatorNoise& out) {
    Object(v, path)
        .opt("flip_sentiment", out.flip_sentiment)
        .opt("drop_aspect", out.drop_aspect)
        .opt("add_aspect", out.add_aspect)
        .opt("ignore", out.ignore)
        .done();
}

std::string mode_name(annotation::AdjudicationMode m) {
    return m == annotation::AdjudicationMode::ExactSet ? "exact_set" : "per_label";
}

void read(const json& v, const std::string& path, annotation::AdjudicationMode& out) {
    std::string s;
    read(v, path, s);
    if (s == "exact_set") {
        out = annotation::AdjudicationMode::ExactSet;
    } else if (s == "per_label") {
        out = annotation::AdjudicationMode::PerLabel;
    } else {
        bad(path, "expected exact_set or per_label");
    }
}

void read(const json& v, const std::string& path, models::AspectVariant& out) {
    std::string s;
    read(v, path, s);
    try {
        out = models::parse_aspect_variant(s);
    } catch (const ConfigError& e) {
        bad(path, e.what());
    }
}

void read(const json& v, const std::string& path, models::SentimentVariant& out) {
    std::string s;
    read(v, path, s);
    try {
        out = models::parse_sentiment_variant(s);
    } catch (const ConfigError& e) {
        bad(path, e.what());
    }
}

void read(const json& v, const std::string& path, RunSpec& out) {
    Object(v, path)
        .req("name", out.name)
        .req("aspect", out.aspect)
        .opt("sentiment", out.sentiment)
        .opt("augmented", out.augmented)
        .opt("tune_thresholds", out.tune_thresholds)
        .opt("thresholds", out.thresholds)
        .done();
}

json to_json(const SvmParams& p) {
    return {{"kernel", p.kernel.to_json()}, {"C", p.C}, {"tol", p.tol}, {"max_iter", p.max_iter}};
}

json to_json(const MlpTrainParams& p) {
    return {{"lr", p.lr},       {"epochs", p.epochs}, {"batch", p.batch},
            {"beta1", p.beta1}, {"beta2", p.beta2},   {"eps", p.eps}};
}

json to_json(const text::PreprocessConfig& c) {
    return {{"pos_filter", c.pos_filter}, {"lemmatize", c.lemmatize}, {"keep_unknown", c.keep_unknown}};
}

json seed_json(const std::optional<std::uint64_t>& s) { return s ? json(*s) : json(nullptr); }

bool is_stochastic(const RunSpec& r) {
    bool aspect = r.aspect == models::AspectVariant::MlpMultiLabel || r.aspect == models::AspectVariant::EmbeddingHead;
    bool sentiment = r.sentiment && *r.sentiment != models::SentimentVariant::SvmLinear;
    return aspect || sentiment;
}

bool needs_backend(const RunSpec& r) {
    return r.aspect == models::AspectVariant::EmbeddingHead || r.aspect == models::AspectVariant::ZeroShot ||
           r.sentiment == models::SentimentVariant::EmbeddingHead;
}

void check_mlp(const std::string& stage, const std::vector<std::size_t>& hidden, double dropout,
               const MlpTrainParams& p) {
    for (auto h : hidden) {
        if (h == 0) throw ConfigError(stage + ": hidden layer sizes must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError(stage + ": dropout must lie in [0, 1)");
    if (!(p.lr > 0.0)) throw ConfigError(stage + ": lr must be positive");
    if (p.batch == 0) throw ConfigError(stage + ": batch must be positive");
}

void check_file(const std::string& stage, const std::string& what, const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw ConfigError(stage + ": " + what + " '" + path + "' not found");
}

}  // namespace

std::vector<RunSpec> default_runs() {
    using models::AspectVariant;
    using models::SentimentVariant;
    std::vector<RunSpec> runs;
    runs.push_back({"svm", AspectVariant::SvmOvr, SentimentVariant::SvmLinear});
    runs.push_back({"mlp", AspectVariant::MlpMultiLabel, SentimentVariant::Mlp});
    runs.push_back({"head", AspectVariant::EmbeddingHead, SentimentVariant::EmbeddingHead});
    runs.push_back({"head_da", AspectVariant::EmbeddingHead, SentimentVariant::EmbeddingHead, true});
    runs.push_back({"zero_shot", AspectVariant::ZeroShot, std::nullopt});
    runs.push_back({"zero_shot_tuned", AspectVariant::ZeroShot, std::nullopt, false, true});
    return runs;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.models.runs = default_runs();
    Object top(j, "");
    std::uint64_t version = 0;
    top.req("config_version", version);
    if (version != static_cast<std::uint64_t>(kConfigVersion)) {
        bad("config_version", "unsupported version " + std::to_string(version));
    }
    top.opt("name", c.name).opt("seed", c.seed);

    if (const json* v = top.raw("corpus")) {
        auto& s = c.corpus;
        Object(*v, "corpus")
            .opt("source", s.source)
            .opt("preset", s.preset)
            .opt("size", s.size)
            .opt("input", s.input)
            .opt("min_tokens", s.min_tokens)
            .opt("max_chars", s.max_chars)
            .opt("anonymize", s.anonymize)
            .opt("gazetteer", s.gazetteer)
            .opt("seed", s.seed)
            .done();
    }
    if (const json* v = top.raw("cluster")) {
        auto& s = c.cluster;
        Object(*v, "cluster")
            .opt("enabled", s.enabled)
            .opt("k_min", s.k_min)
            .opt("k_max", s.k_max)
            .opt("top_terms", s.top_terms)
            .opt("restarts", s.restarts)
            .opt("max_iter", s.max_iter)
            .opt("preprocess", s.preprocess)
            .opt("seed", s.seed)
            .done();
    }
    if (const json* v = top.raw("annotation")) {
        auto& s = c.annotation;
        Object(*v, "annotation")
            .opt("enabled", s.enabled)
            .opt("annotators", s.annotators)
            .opt("copies", s.copies)
            .opt("mode", s.mode)
            .opt("noise", s.noise)
            .opt("labels", s.labels)
            .opt("seed", s.seed)
            .done();
    }
    if (const json* v = top.raw("split")) {
        auto& s = c.split;
        Object(*v, "split")
            .opt("train", s.train)
            .opt("validation", s.validation)
            .opt("test", s.test)
            .opt("stratify", s.stratify)
            .opt("seed", s.seed)
            .done();
    }
    if (const json* v = top.raw("augment")) {
        auto& s = c.augment;
        Object(*v, "augment")
            .opt("enabled", s.enabled)
            .opt("min_count", s.min_count)
            .opt("prob", s.prob)
            .opt("max_tokens", s.max_tokens)
            .opt("min_aspects", s.min_aspects)
            .opt("provider", s.provider)
            .opt("synonyms", s.synonyms)
            .opt("top_k", s.top_k)
            .opt("seed", s.seed)
            .done();
    }
    if (const json* v = top.raw("models")) {
        auto& s = c.models;
        Object o(*v, "models");
        if (const json* b = o.raw("backend")) {
            if (!b->is_object()) bad("models.backend", "expected an object");
            s.backend = *b;
        }
        if (const json* a = o.raw("aspect")) {
            auto& t = s.aspect;
            Object(*a, "models.aspect")
                .opt("svm", t.svm)
                .opt("hidden", t.hidden)
                .opt("dropout", t.dropout)
                .opt("mlp", t.mlp)
                .opt("preprocess", t.preprocess)
                .opt("hypotheses", t.hypotheses)
                .done();
        }
        if (const json* a = o.raw("sentiment")) {
            auto& t = s.sentiment;
            Object(*a, "models.sentiment")
                .opt("svm", t.svm)
                .opt("hidden", t.hidden)
                .opt("dropout", t.dropout)
                .opt("mlp", t.mlp)
                .opt("preprocess", t.preprocess)
                .opt("aspect_focus", t.aspect_focus)
                .done();
        }
        o.opt("runs", s.runs).opt("seed", s.seed).done();
    }
    top.done();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json runs = json::array();
    for (const auto& r : models.runs) {
        runs.push_back({{"name", r.name},
                        {"aspect", models::variant_name(r.aspect)},
                        {"sentiment", r.sentiment ? json(models::variant_name(*r.sentiment)) : json(nullptr)},
                        {"augmented", r.augmented},
                        {"tune_thresholds", r.tune_thresholds},
                        {"thresholds", r.thresholds}});
    }
    const auto& n = annotation.noise;
    return {
        {"config_version", kConfigVersion},
        {"name", name},
        {"seed", seed_json(seed)},
        {"corpus",
         {{"source", corpus.source},
          {"preset", corpus.preset},
          {"size", corpus.size},
          {"input", corpus.input},
          {"min_tokens", corpus.min_tokens},
          {"max_chars", corpus.max_chars},
          {"anonymize", corpus.anonymize},
          {"gazetteer", corpus.gazetteer},
          {"seed", seed_json(corpus.seed)}}},
        {"cluster",
         {{"enabled", cluster.enabled},
          {"k_min", cluster.k_min},
          {"k_max", cluster.k_max},
          {"top_terms", cluster.top_terms},
          {"restarts", cluster.restarts},
          {"max_iter", cluster.max_iter},
          {"preprocess", experiment::to_json(cluster.preprocess)},
          {"seed", seed_json(cluster.seed)}}},
        {"annotation",
         {{"enabled", annotation.enabled},
          {"annotators", annotation.annotators},
          {"copies", annotation.copies},
          {"mode", mode_name(annotation.mode)},
          {"noise",
           {{"flip_sentiment", n.flip_sentiment},
            {"drop_aspect", n.drop_aspect},
            {"add_aspect", n.add_aspect},
            {"ignore", n.ignore}}},
          {"labels", annotation.labels},
          {"seed", seed_json(annotation.seed)}}},
        {"split",
         {{"train", split.train},
          {"validation", split.validation},
          {"test", split.test},
          {"stratify", split.stratify},
          {"seed", seed_json(split.seed)}}},
        {"augment",
         {{"enabled", augment.enabled},
          {"min_count", augment.min_count},
          {"prob", augment.prob},
          {"max_tokens", augment.max_tokens},
          {"min_aspects", augment.min_aspects},
          {"provider", augment.provider},
          {"synonyms", augment.synonyms},
          {"top_k", augment.top_k},
          {"seed", seed_json(augment.seed)}}},
        {"models",
         {{"backend", models.backend},
          {"aspect",
           {{"svm", experiment::to_json(models.aspect.svm)},
            {"hidden", models.aspect.hidden},
            {"dropout", models.aspect.dropout},
            {"mlp", experiment::to_json(models.aspect.mlp)},
            {"preprocess", experiment::to_json(models.aspect.preprocess)},
            {"hypotheses", models.aspect.hypotheses}}},
          {"sentiment",
           {{"svm", experiment::to_json(models.sentiment.svm)},
            {"hidden", models.sentiment.hidden},
            {"dropout", models.sentiment.dropout},
            {"mlp", experiment::to_json(models.sentiment.mlp)},
            {"preprocess", experiment::to_json(models.sentiment.preprocess)},
            {"aspect_focus", models.sentiment.aspect_focus}}},
          {"runs", runs},
          {"seed", seed_json(models.seed)}}},
    };
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(to_json().dump())); }

std::optional<std::uint64_t> ExperimentConfig::seed_for(const std::optional<std::uint64_t>& stage_seed) const {
    return stage_seed ? stage_seed : seed;
}

void ExperimentConfig::validate() const {
    auto need_seed = [&](const std::string& stage, const std::optional<std::uint64_t>& s) {
        if (!seed_for(s)) throw ConfigError(stage + ": seed is required (set " + stage + ".seed or a global seed)");
    };
    auto wrap = [](const std::string& stage, auto&& f) {
        try {
            f();
        } catch (const ConfigError& e) {
            throw ConfigError(stage + ": " + e.what());
        }
    };

    if (name.empty()) throw ConfigError("name must be non-empty");

    if (corpus.source == "synthetic") {
        wrap("corpus", [&] { corpus::SyntheticSpec::preset(corpus.preset, corpus.size).validate(); });
        need_seed("corpus", corpus.seed);
    } else if (corpus.source == "labeled") {
        if (corpus.input.empty()) throw ConfigError("corpus: a labeled source needs an input path");
        check_file("corpus", "input", corpus.input);
    } else {
        throw ConfigError("corpus: source must be synthetic or labeled");
    }
    if (corpus.max_chars == 0) throw ConfigError("corpus: max_chars must be positive");
    if (corpus.anonymize && !corpus.gazetteer.empty()) check_file("corpus", "gazetteer", corpus.gazetteer);

    if (cluster.enabled) {
        if (cluster.k_min < 1 || cluster.k_min > cluster.k_max) throw ConfigError("cluster: need 1 <= k_min <= k_max");
        if (cluster.top_terms == 0) throw ConfigError("cluster: top_terms must be positive");
        if (cluster.restarts == 0 || cluster.max_iter == 0) {
            throw ConfigError("cluster: restarts and max_iter must be positive");
        }
        need_seed("cluster", cluster.seed);
    }

    if (annotation.labels != "gold" && annotation.labels != "adjudicated") {
        throw ConfigError("annotation: labels must be gold or adjudicated");
    }
    if (annotation.enabled) {
        if (annotation.copies < 3) throw ConfigError("annotation: copies must be at least 3");
        if (annotation.annotators < annotation.copies) {
            throw ConfigError("annotation: annotators must be at least copies");
        }
        const auto& n = annotation.noise;
        for (double p : {n.flip_sentiment, n.drop_aspect, n.add_aspect, n.ignore}) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("annotation: noise rates must lie in [0, 1]");
        }
        need_seed("annotation", annotation.seed);
    } else if (annotation.labels == "adjudicated") {
        throw ConfigError("annotation: adjudicated labels need the annotation stage enabled");
    }

    wrap("split", [&] { eval::SplitSpec{split.train, split.validation, split.test, 0, split.stratify}.validate(); });
    need_seed("split", split.seed);

    if (augment.enabled) {
        wrap("augment", [&] {
            augment::AugmentationParams{augment.min_count, augment.prob, augment.max_tokens, augment.min_aspects, 0}
                .validate();
        });
        if (augment.provider == "synonym") {
            if (!augment.synonyms.empty()) check_file("augment", "synonym table", augment.synonyms);
        } else if (augment.provider == "backend") {
            if (augment.top_k == 0) throw ConfigError("augment: top_k must be positive");
        } else {
            throw ConfigError("augment: provider must be synonym or backend");
        }
        need_seed("augment", augment.seed);
    }

    auto kind = models.backend.value("kind", std::string("hashing"));
    if (kind != "hashing" && kind != "constant" && kind != "http") {
        throw ConfigError("models: unknown backend kind '" + kind + "'");
    }
    if (models.runs.empty()) throw ConfigError("models: at least one run is required");
    wrap("models", [&] {
        models.aspect.svm.validate();
        models.sentiment.svm.validate();
    });
    check_mlp("models.aspect", models.aspect.hidden, models.aspect.dropout, models.aspect.mlp);
    check_mlp("models.sentiment", models.sentiment.hidden, models.sentiment.dropout, models.sentiment.mlp);
    std::set<std::string> names;
    bool stochastic = false;
    for (const auto& r : models.runs) {
        if (r.name.empty() || r.name.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_-") != std::string::npos) {
            throw ConfigError("models: run name '" + r.name + "' must be lowercase letters, digits, '_' or '-'");
        }
        if (!names.insert(r.name).second) throw ConfigError("models: duplicate run name '" + r.name + "'");
        if (r.augmented && !augment.enabled) {
            throw ConfigError("models: run '" + r.name + "' trains on augmented data but augment is disabled");
        }
        for (double t : r.thresholds) {
            if (!(t > 0.0 && t < 1.0)) throw ConfigError("models: run '" + r.name + "' thresholds must lie in (0, 1)");
        }
        stochastic = stochastic || is_stochastic(r);
    }
    if (stochastic) need_seed("models", models.seed);
}

json stamp(const std::string& config_hash, std::optional<std::uint64_t> seed) {
    return {{"config_hash", config_hash}, {"seed", seed_json(seed)}};
}

namespace {

/// Write-once artifact directory with a running manifest.
class Trail {
public:
    Trail(std::filesystem::path root, std::string hash, std::optional<std::uint64_t> seed)
        : root_(std::move(root)), hash_(std::move(hash)), seed_(seed) {}

    void bytes(const std::string& rel, std::string_view data) {
        auto path = root_ / rel;
        std::filesystem::create_directories(path.parent_path());
        write_once(path, data);
        entries_.push_back({{"path", rel}, {"fnv1a", hex64(fnv1a(data))}, {"bytes", data.size()}});
        paths_.push_back(rel);
    }

    void json_file(const std::string& rel, json j, std::optional<std::uint64_t> seed) {
        j["stamp"] = stamp(hash_, seed);
        bytes(rel, j.dump(2) + "\n");
    }

    /// Text artifacts carry the stamp on their first line.
    void text_file(const std::string& rel, const std::string& body, std::optional<std::uint64_t> seed) {
        std::string head = "# config " + hash_ + " seed " + (seed ? std::to_string(*seed) : std::string("-")) + "\n";
        bytes(rel, head + body);
    }

    void manifest(const std::string& status, const std::string& stage = "", const std::string& error = "") {
        json m = {{"config_hash", hash_}, {"seed", seed_json(seed_)}, {"status", status}, {"artifacts", entries_}};
        if (!stage.empty()) {
            m["failed_stage"] = stage;
            m["error"] = error;
        }
        write_once(root_ / "manifest.json", m.dump(2) + "\n");
    }

    const std::vector<std::string>& paths() const { return paths_; }

private:
    std::filesystem::path root_;
    std::string hash_;
    std::optional<std::uint64_t> seed_;
    json entries_ = json::array();
    std::vector<std::string> paths_;
};

std::set<std::string> known_words() {
    std::set<std::string> out;
    for (const auto& [surface, tag] : text::load_pos_lexicon(std::filesystem::path(ABSA_DATA_DIR) / "lexicon/nl_pos.tsv")) {
        out.insert(to_lower(surface));
    }
    return out;
}

std::vector<std::string> ids_of(const std::vector<corpus::LabeledResponse>& data) {
    std::vector<std::string> out;
    for (const auto& r : data) out.push_back(r.response.id);
    return out;
}

std::vector<LabelSet> labels_of(const std::vector<corpus::LabeledResponse>& data) {
    std::vector<LabelSet> out;
    for (const auto& r : data) out.push_back(r.labels);
    return out;
}

std::vector<std::string> vocabulary(const std::vector<corpus::LabeledResponse>& data) {
    std::set<std::string> words;
    for (const auto& r : data) {
        for (const auto& t : text::tokenize(r.response.text)) {
            if (!t.is_punct()) words.insert(to_lower(t.surface));
        }
    }
    return {words.begin(), words.end()};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
    config.validate();

    ExperimentResult result;
    result.config_hash = config.hash();
    result.seed = config.seed;
    Trail trail(out_dir, result.config_hash, config.seed);
    json summary = {{"name", config.name}, {"config_hash", result.config_hash}, {"seed", seed_json(config.seed)}};

    auto stage = [&](const std::string& name, auto&& body) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const std::exception& e) {
            try {
                trail.manifest("failed", name, e.what());
            } catch (const std::exception&) {
                // The stage error is the one worth reporting.
            }
            throw StageError(name, e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "[%s] %s %.2fs\n", config.name.c_str(), name.c_str(), secs);
    };

    stage("config", [&] { trail.json_file("config.json", config.to_json(), config.seed); });

    // corpus: source -> length filter -> pseudonymization
    corpus::ResponseSet responses;
    std::map<std::string, LabelSet> gold;
    stage("corpus", [&] {
        const auto& c = config.corpus;
        std::optional<std::uint64_t> seed;
        corpus::ResponseSet source;
        if (c.source == "synthetic") {
            seed = config.seed_for(c.seed);
            auto gen = corpus::generate_synthetic_corpus(corpus::SyntheticSpec::preset(c.preset, c.size), *seed);
            for (std::size_t i = 0; i < gen.gold.size(); ++i) gold[gen.responses[i].id] = gen.gold[i];
            source = gen.responses;
        } else {
            std::vector<corpus::Response> rs;
            for (auto& r : corpus::read_labeled(c.input)) {
                if (!gold.emplace(r.response.id, r.labels).second) throw Error("duplicate id " + r.response.id);
                rs.push_back(std::move(r.response));
            }
            source = corpus::ResponseSet(std::move(rs), json::array({{{"step", "ingest"}, {"source", c.input}}}));
        }
        responses = corpus::filter_by_length(source, c.min_tokens, c.max_chars);
        json review = json::array();
        if (c.anonymize) {
            auto rules = corpus::PseudonymizationRules::with_gazetteer(
                c.gazetteer.empty() ? std::filesystem::path(ABSA_DATA_DIR) / "names.txt" : std::filesystem::path(c.gazetteer));
            responses = corpus::pseudonymize(responses, rules);
            for (const auto& item : corpus::review_residual_names(responses, known_words(), rules)) {
                review.push_back({{"id", item.response_id}, {"token", item.token}, {"offset", item.offset}});
            }
        }
        std::vector<corpus::LabeledResponse> labeled;
        for (const auto& r : responses) labeled.push_back({r, gold.at(r.id)});
        trail.bytes("corpus/responses.jsonl", corpus::to_jsonl(responses));
        trail.bytes("corpus/gold.jsonl", corpus::to_jsonl(labeled));
        trail.json_file("corpus/review.json", {{"candidates", review}}, seed);
        json s = {{"source_size", source.size()},
                  {"kept", responses.size()},
                  {"review_candidates", review.size()},
                  {"provenance", responses.provenance()}};
        trail.json_file("corpus/summary.json", s, seed);
        s.erase("provenance");
        summary["corpus"] = s;
        if (responses.empty()) throw Error("no responses left after filtering");
    });

    if (config.cluster.enabled) {
        stage("cluster", [&] {
            const auto& c = config.cluster;
            auto seed = *config.seed_for(c.seed);
            auto pre = text::default_preprocessor(c.preprocess);
            std::vector<std::vector<std::string>> docs;
            for (const auto& r : responses) docs.push_back(pre.terms(r.text));
            auto tfidf = text::TfIdfModel::fit(docs);
            tfidf.config = c.preprocess;
            std::vector<text::SparseVector> vectors;
            for (const auto& d : docs) vectors.push_back(tfidf.transform(d));
            std::size_t k_max = std::min(c.k_max, vectors.size());
            if (k_max < c.k_min) throw Error("fewer responses than k_min");
            auto curve = cluster::elbow_select_k(vectors, c.k_min, k_max, seed, {c.max_iter, c.restarts});
            const auto& model = curve.selected_model();
            auto terms = cluster::top_terms(model, tfidf, vectors, c.top_terms);
            auto report = cluster::cluster_report(curve, terms);
            json assignments = json::object();
            for (std::size_t i = 0; i < responses.size(); ++i) assignments[responses[i].id] = model.assignments[i];
            report["assignments"] = assignments;
            trail.json_file("cluster/report.json", report, seed);
            trail.text_file("cluster/top_terms.txt", cluster::render_top_terms_table(model, terms), seed);
            summary["cluster"] = {{"selected_k", curve.selected_k}, {"inertia", model.inertia}};
        });
    }

    std::vector<corpus::LabeledResponse> data;
    for (const auto& r : responses) data.push_back({r, gold.at(r.id)});

    if (config.annotation.enabled) {
        stage("annotation", [&] {
            const auto& c = config.annotation;
            auto seed = *config.seed_for(c.seed);
            std::vector<std::string> annotators;
            for (std::size_t i = 1; i <= c.annotators; ++i) annotators.push_back("annotator" + std::to_string(i));
            std::vector<LabelSet> gold_sets = labels_of(data);
            auto campaign = annotation::simulate_campaign(responses, gold_sets, annotators, c.copies, c.noise, seed);
            std::vector<std::string> ids;
            std::vector<annotation::AdjudicationOutcome> outcomes;
            for (const auto& r : responses) {
                ids.push_back(r.id);
                outcomes.push_back(annotation::adjudicate(campaign.by_response.at(r.id), c.mode));
            }
            auto agreement = annotation::agreement_report(ids, campaign.by_response, c.mode);
            auto exported = annotation::export_labeled(responses, outcomes);

            std::string log;
            for (const auto& a : campaign.annotations) log += annotation::to_json(a).dump() + "\n";
            trail.json_file("annotation/plan.json", campaign.plan.to_json(), seed);
            trail.bytes("annotation/annotations.jsonl", log);
            trail.json_file("annotation/agreement.json", agreement.to_json(), seed);
            trail.bytes("annotation/adjudicated.jsonl", corpus::to_jsonl(exported));

            std::size_t matches = 0;
            for (const auto& r : exported) matches += r.labels == gold.at(r.response.id);
            json s = {{"exported", exported.size()},
                      {"average_kappa", agreement.average_kappa},
                      {"escalations", agreement.escalation_count},
                      {"excluded", agreement.excluded},
                      {"matches_gold", matches}};
            trail.json_file("annotation/summary.json", s, seed);
            summary["annotation"] = s;
            if (c.labels == "adjudicated") data = exported;
        });
    }

    eval::Split sp;
    stage("split", [&] {
        const auto& c = config.split;
        auto seed = *config.seed_for(c.seed);
        sp = eval::split(data, {c.train, c.validation, c.test, seed, c.stratify});
        trail.bytes("split/train.jsonl", corpus::to_jsonl(sp.train));
        trail.bytes("split/validation.jsonl", corpus::to_jsonl(sp.validation));
        trail.bytes("split/test.jsonl", corpus::to_jsonl(sp.test));
        json s = {{"train", sp.train.size()},
                  {"validation", sp.validation.size()},
                  {"test", sp.test.size()},
                  {"warnings", sp.warnings}};
        trail.json_file("split/summary.json", s, seed);
        s.erase("warnings");
        summary["split"] = s;
    });

    std::shared_ptr<const models::EmbeddingBackend> backend;
    bool want_backend = config.augment.enabled && config.augment.provider == "backend";
    for (const auto& r : config.models.runs) want_backend = want_backend || needs_backend(r);
    if (want_backend) stage("backend", [&] { backend = models::make_backend(config.models.backend); });

    std::vector<corpus::LabeledResponse> augmented;
    if (config.augment.enabled) {
        stage("augment", [&] {
            const auto& c = config.augment;
            auto seed = *config.seed_for(c.seed);
            augment::AugmentationParams params{c.min_count, c.prob, c.max_tokens, c.min_aspects, seed};
            std::unique_ptr<augment::SubstitutionProvider> provider;
            if (c.provider == "synonym") {
                provider = std::make_unique<augment::SynonymProvider>(
                    c.synonyms.empty() ? augment::SynonymProvider::demo() : augment::SynonymProvider::load(c.synonyms));
            } else {
                provider = std::make_unique<augment::BackendProvider>(*backend, vocabulary(sp.train), c.top_k);
            }
            auto res = augment::run(sp.train, *provider, params);
            augmented = std::move(res.data);
            trail.bytes("augment/train.jsonl", corpus::to_jsonl(augmented));
            json s = res.summary.to_json();
            s["provider"] = provider->id();
            trail.json_file("augment/summary.json", s, seed);
            summary["augment"] = {{"added", res.summary.added}, {"train_size", augmented.size()}};
        });
    }

    const auto test_ids = ids_of(sp.test);
    const auto test_gold = labels_of(sp.test);
    const auto val_gold = labels_of(sp.validation);
    std::vector<eval::Run> runs;
    json run_info = json::object();
    for (const auto& spec : config.models.runs) {
        stage("models/" + spec.name, [&] {
            auto seed = config.seed_for(config.models.seed);
            std::optional<std::uint64_t> stamp_seed = is_stochastic(spec) ? seed : std::nullopt;
            const auto& train = spec.augmented ? augmented : sp.train;
            auto model_backend = needs_backend(spec) ? backend : nullptr;

            std::optional<models::AspectClassifier> aspect;
            if (spec.aspect == models::AspectVariant::ZeroShot) {
                aspect = models::AspectClassifier::zero_shot(backend, config.models.aspect.hypotheses, spec.thresholds);
            } else {
                auto cfg = config.models.aspect;
                cfg.variant = spec.aspect;
                cfg.thresholds = spec.thresholds;
                cfg.seed = seed.value_or(0);
                aspect = models::AspectClassifier::train(cfg, train, model_backend);
            }
            json info = {{"train_size", train.size()}};
            if (spec.tune_thresholds) {
                std::vector<models::AspectScores> scores;
                for (const auto& r : sp.validation) scores.push_back(aspect->scores(r.response));
                auto choice = eval::tune_thresholds(scores, val_gold);
                aspect = aspect->with_thresholds(choice.thresholds);
                info["validation_macro_f1"] = choice.macro_f1;
            }
            info["thresholds"] = aspect->thresholds();
            trail.json_file("models/" + spec.name + "/aspect.json", aspect->to_json(), stamp_seed);

            std::optional<models::SentimentClassifier> sentiment;
            if (spec.sentiment) {
                auto cfg = config.models.sentiment;
                cfg.variant = *spec.sentiment;
                cfg.seed = seed.value_or(0);
                sentiment = models::SentimentClassifier::train(cfg, train, model_backend);
                trail.json_file("models/" + spec.name + "/sentiment.json", sentiment->to_json(), stamp_seed);
            }

            eval::Run run{spec.name, {}, std::nullopt};
            for (const auto& r : sp.test) {
                if (sentiment) {
                    run.predicted.push_back(models::pipeline_predict(*aspect, *sentiment, r.response).labels);
                } else {
                    LabelSet l;
                    for (const auto& p : aspect->predict(r.response)) l.set(p.aspect, Sentiment::Negative);
                    run.predicted.push_back(l);
                }
            }
            if (sentiment) {
                run.sentiment.emplace();
                for (const auto& [i, p] : eval::gold_pairs(test_gold)) {
                    run.sentiment->push_back(sentiment->predict(sp.test[i].response, p.aspect).sentiment);
                }
            }
            trail.bytes("predictions/" + spec.name + ".jsonl", eval::predictions_to_jsonl(run, test_ids, test_gold));
            runs.push_back(std::move(run));
            run_info[spec.name] = info;
        });
    }

    stage("evaluate", [&] {
        result.report = eval::build_report(runs, test_gold);
        result.report.meta = {{"name", config.name},
                              {"config_hash", result.config_hash},
                              {"test_size", sp.test.size()},
                              {"runs", run_info}};
        trail.json_file("report.json", result.report.to_json(), config.seed);
        trail.text_file("report.txt", result.report.render_text(), config.seed);
        json scores = json::object();
        for (std::size_t i = 0; i < result.report.runs.size(); ++i) {
            json s = {{"aspect_macro_f1", result.report.aspect[i].macro_f1}};
            if (result.report.sentiment[i]) s["sentiment_macro_f1"] = result.report.sentiment[i]->macro_f1;
            scores[result.report.runs[i]] = s;
        }
        summary["runs"] = scores;
        trail.json_file("summary.json", summary, config.seed);
    });

    trail.manifest("complete");
    result.artifacts = trail.paths();
    result.artifacts.push_back("manifest.json");
    result.summary = std::move(summary);
    return result;
}

}  // namespace absa::experiment
