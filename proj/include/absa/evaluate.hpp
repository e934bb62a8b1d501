#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/labels.hpp"
#include "json.hpp"

namespace absa::eval {

inline constexpr int kReportVersion = 1;

struct SplitSpec {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
    std::uint64_t seed = 0;
    bool stratify = true;

    void validate() const;
};

struct Split {
    std::vector<corpus::LabeledResponse> train, validation, test;
    std::vector<std::string> warnings;
};

/// Split sizes by largest remainder over the whole set. With stratify, each
/// label combination is dealt so that its count in every split is within one
/// of its proportional share; combinations with a single member are pooled
/// and placed freely (with a warning). Items keep their input order.
Split split(const std::vector<corpus::LabeledResponse>& data, const SplitSpec& spec);

struct ClassMetrics {
    std::string name;
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    /// No gold instances; recall and F1 are 0 by convention.
    bool no_support = false;

    std::size_t support() const { return tp + fn; }
};

struct Metrics {
    std::vector<ClassMetrics> classes;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;

    const ClassMetrics& at(std::string_view name) const;
    nlohmann::json to_json() const;
    static Metrics from_json(const nlohmann::json& j);
};

/// Multi-label precision/recall/F1 per class; each item is the set of class
/// names present. Zero denominators give 0. Macro values are plain means.
Metrics prf(const std::vector<std::set<std::string>>& pred, const std::vector<std::set<std::string>>& gold,
            const std::vector<std::string>& classes);

std::set<std::string> aspect_names(const LabelSet& labels);
std::set<std::string> pair_tags(const LabelSet& labels);
std::vector<std::string> aspect_classes();
std::vector<std::string> sentiment_classes();
std::vector<std::string> pair_classes();

Metrics aspect_metrics(const std::vector<LabelSet>& pred, const std::vector<LabelSet>& gold);
Metrics sentiment_metrics(const std::vector<Sentiment>& pred, const std::vector<Sentiment>& gold);
Metrics pair_metrics(const std::vector<LabelSet>& pred, const std::vector<LabelSet>& gold);

struct ThresholdChoice {
    std::array<double, kNumAspects> thresholds{};
    std::array<double, kNumAspects> f1{};
    double macro_f1 = 0.0;
};

/// Grid k/100 for k = 1..99, per aspect. Macro F1 is a mean of per-aspect F1,
/// so each aspect is tuned on its own: highest F1, then fewest false
/// positives, then the lowest threshold. A score at or above the threshold
/// predicts the aspect.
ThresholdChoice tune_thresholds(const std::vector<std::array<double, kNumAspects>>& scores,
                                const std::vector<LabelSet>& gold);

/// Thresholds k/100 as used by the tuner.
std::vector<double> threshold_grid();

struct TestResult {
    std::string test;
    double statistic = 0.0;
    double p_value = 1.0;
    bool exact = false;
    std::size_t n = 0;
    std::string flag;

    nlohmann::json to_json() const;
    static TestResult from_json(const nlohmann::json& j);
};

/// b, c: discordant counts. Exact binomial when b + c < 25, otherwise
/// chi-square with continuity correction.
TestResult mcnemar(std::size_t b, std::size_t c);

/// Two-sided signed-rank test on a - b. Zero differences are dropped and
/// tied magnitudes share their mean rank. Exact for n <= 25 (conditional on
/// the ranks), otherwise normal with tie correction.
TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

/// |P ∩ G| / |P ∪ G| over aspects; 1 when both are empty.
double aspect_jaccard(const LabelSet& pred, const LabelSet& gold);

struct Run {
    std::string name;
    /// Pipeline output per test response.
    std::vector<LabelSet> predicted;
    /// Stage-2 predictions on the gold aspect pairs, in gold_pairs order.
    /// Runs without one are scored on aspects only.
    std::optional<std::vector<Sentiment>> sentiment;
};

/// The (response index, aspect) pairs stage 2 is scored on.
std::vector<std::pair<std::size_t, AspectSentiment>> gold_pairs(const std::vector<LabelSet>& gold);

/// One JSON line per response: {"id", "aspects"} plus, for runs with a
/// sentiment stage, the pipeline "labels" and "gold_aspect_sentiment" (stage 2
/// on that response's gold aspects).
std::string predictions_to_jsonl(const Run& run, const std::vector<std::string>& ids, const std::vector<LabelSet>& gold);

/// Inverse of predictions_to_jsonl, aligned with the gold items by id. Every
/// gold id must appear exactly once; a sentiment stage must cover every gold
/// aspect or be absent from every line.
Run read_predictions(std::string_view content, const std::string& name, const std::vector<std::string>& ids,
                     const std::vector<LabelSet>& gold);

struct Comparison {
    std::string a, b;
    std::optional<TestResult> wilcoxon;
    std::optional<TestResult> mcnemar;
};

struct Report {
    std::vector<std::string> runs;
    std::vector<Metrics> aspect;
    std::vector<std::optional<Metrics>> sentiment, pipeline;
    std::vector<std::optional<double>> exact_set_accuracy;
    std::vector<Comparison> comparisons;
    nlohmann::json meta = nlohmann::json::object();

    nlohmann::json to_json() const;
    static Report from_json(const nlohmann::json& j);
    /// Aligned tables, one column per run, '*' on the best value of a row.
    std::string render_text() const;
};

/// Every run must cover the same gold set. All pairs of runs are compared.
Report build_report(const std::vector<Run>& runs, const std::vector<LabelSet>& gold);

}  // namespace absa::eval
