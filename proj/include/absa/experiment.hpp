#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "absa/annotation.hpp"
#include "absa/common.hpp"
#include "absa/augment.hpp"
#include "absa/evaluate.hpp"
#include "absa/models.hpp"
#include "json.hpp"

namespace absa::experiment {

inline constexpr int kConfigVersion = 1;

struct CorpusStage {
    /// "synthetic" or "labeled" (a labeled JSONL file, e.g. an adjudicated export).
    std::string source = "synthetic";
    std::string preset = "paper";
    std::size_t size = 3000;
    std::string input;
    std::size_t min_tokens = 10;
    std::size_t max_chars = 512;
    bool anonymize = true;
    /// Empty: the demo gazetteer.
    std::string gazetteer;
    std::optional<std::uint64_t> seed;
};

struct ClusterStage {
    bool enabled = true;
    std::size_t k_min = 2;
    std::size_t k_max = 10;
    std::size_t top_terms = 5;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    text::PreprocessConfig preprocess{true, true, false};
    std::optional<std::uint64_t> seed;
};

struct AnnotationStage {
    bool enabled = true;
    std::size_t annotators = 4;
    std::size_t copies = 3;
    annotation::AdjudicationMode mode = annotation::AdjudicationMode::ExactSet;
    annotation::AnnotatorNoise noise;
    /// "gold" keeps the source labels for modeling; "adjudicated" uses the
    /// simulated campaign's export.
    std::string labels = "gold";
    std::optional<std::uint64_t> seed;
};

struct SplitStage {
    double train = 0.70, validation = 0.15, test = 0.15;
    bool stratify = true;
    std::optional<std::uint64_t> seed;
};

struct AugmentStage {
    bool enabled = true;
    std::size_t min_count = 30;
    double prob = 0.30;
    std::size_t max_tokens = 50;
    std::size_t min_aspects = 2;
    /// "synonym" or "backend".
    std::string provider = "synonym";
    /// Empty: the demo synonym table.
    std::string synonyms;
    std::size_t top_k = 5;
    std::optional<std::uint64_t> seed;
};

struct RunSpec {
    std::string name;
    models::AspectVariant aspect = models::AspectVariant::SvmOvr;
    std::optional<models::SentimentVariant> sentiment;
    /// Train on the augmented training split.
    bool augmented = false;
    /// Pick per-aspect thresholds on the validation split.
    bool tune_thresholds = false;
    models::Thresholds thresholds = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
};

struct ModelsStage {
    nlohmann::json backend = {{"kind", "hashing"}};
    models::AspectTrainConfig aspect;
    models::SentimentTrainConfig sentiment;
    std::vector<RunSpec> runs;
    std::optional<std::uint64_t> seed;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::optional<std::uint64_t> seed;
    CorpusStage corpus;
    ClusterStage cluster;
    AnnotationStage annotation;
    SplitStage split;
    AugmentStage augment;
    ModelsStage models;

    /// Strict: unknown keys, a wrong version or ill-typed values are errors.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
    /// Every field, defaults included; the hash is taken over this.
    nlohmann::json to_json() const;
    std::string hash() const;

    /// Seeds, paths and cross-stage consistency. Throws ConfigError naming
    /// the stage before any work is done.
    void validate() const;

    /// Stage seed, else the global seed; nullopt when neither is set.
    std::optional<std::uint64_t> seed_for(const std::optional<std::uint64_t>& stage_seed) const;
};

/// Runs built by the default configuration: svm, mlp, head, head_da,
/// zero_shot, zero_shot_tuned.
std::vector<RunSpec> default_runs();

struct StageError : Error {
    StageError(const std::string& stage, const std::string& what) : Error(stage + ": " + what), stage(stage) {}
    std::string stage;
};

struct ExperimentResult {
    eval::Report report;
    std::string config_hash;
    std::optional<std::uint64_t> seed;
    /// Relative paths of every artifact written, in write order.
    std::vector<std::string> artifacts;
    nlohmann::json summary;
};

/// synthetic or labeled input -> filter -> anonymize -> cluster -> simulated
/// annotation -> split -> augment -> train -> evaluate -> report. Artifacts
/// are write-once and stamped with the config hash and seed; a rerun of the
/// same config reproduces them byte for byte. Stage failures raise StageError
/// after the manifest of what was written so far.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// {"config_hash": ..., "seed": ...}; the seed is the producing stage's, null
/// for deterministic stages.
nlohmann::json stamp(const std::string& config_hash, std::optional<std::uint64_t> seed);

}  // namespace absa::experiment
