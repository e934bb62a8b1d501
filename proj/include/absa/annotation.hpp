#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/labels.hpp"
#include "json.hpp"

namespace absa::annotation {

/// One annotator's answer: a label set ('no topics' when empty) or Ignore.
struct Verdict {
    bool ignore = false;
    LabelSet labels;

    static Verdict ignored() { return {true, {}}; }
    static Verdict of(LabelSet labels) { return {false, std::move(labels)}; }

    bool operator==(const Verdict&) const = default;
};

/// Wire form: {"ignore": bool, "labels": [{"aspect": ..., "sentiment": ...}]}.
/// An ignore verdict must carry no labels.
nlohmann::json to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

struct Annotation {
    std::string response_id;
    std::string annotator_id;
    Verdict verdict;
    std::string submitted_at;

    bool operator==(const Annotation&) const = default;
};

nlohmann::json to_json(const Annotation& a);
Annotation annotation_from_json(const nlohmann::json& j);

struct AssignmentPlan {
    std::vector<std::string> annotators;
    std::size_t copies = 0;
    std::uint64_t seed = 0;
    /// Annotator id to its shuffled work queue of response ids.
    std::map<std::string, std::vector<std::string>> queues;
    /// Response id to the annotators it was given to.
    std::map<std::string, std::vector<std::string>> assignees;

    nlohmann::json to_json() const;
    static AssignmentPlan from_json(const nlohmann::json& j);
};

/// Gives every response to `copies` distinct annotators with loads balanced
/// within one, then shuffles each annotator's queue with its own stream.
/// Throws when copies exceeds the annotator count or the optional
/// per-annotator capacity cannot cover copies x responses.
AssignmentPlan assign(const corpus::ResponseSet& responses, const std::vector<std::string>& annotators,
                      std::size_t copies, std::uint64_t seed, std::optional<std::size_t> capacity = std::nullopt);

enum class Resolution { Unanimous, Majority, Escalated, Excluded };

std::string_view resolution_name(Resolution r);

enum class AdjudicationMode {
    /// Two or three set-identical verdicts win; otherwise a fourth annotator decides.
    ExactSet,
    /// Each label (and Ignore) is kept when at least two of three chose it. Never escalates.
    PerLabel,
};

struct AdjudicationOutcome {
    std::string response_id;
    Resolution resolution = Resolution::Unanimous;
    /// Absent when Excluded, or while an escalation awaits its fourth verdict.
    std::optional<LabelSet> final;
    bool escalated = false;
    bool awaiting_fourth = false;
};

/// Resolves one response from its annotations in submission order: the first
/// three are the primary verdicts, a fourth (if any) settles an escalation.
AdjudicationOutcome adjudicate(const std::vector<Annotation>& annotations,
                               AdjudicationMode mode = AdjudicationMode::ExactSet);

/// True when the three primary verdicts are pairwise distinct.
bool needs_escalation(const std::vector<Annotation>& primary);

/// Fleiss' kappa over an items x categories count table. Returns exactly 1
/// when observed agreement is perfect and nullopt when chance agreement is 1
/// otherwise (no defined value).
std::optional<double> fleiss_kappa(const std::vector<std::vector<std::size_t>>& table, std::size_t raters_per_item);

struct AgreementReport {
    /// Keyed by AspectSentiment tag ("salary:POS") plus "ignore".
    std::map<std::string, double> per_label_kappa;
    double average_kappa = 0.0;
    /// Null when there are no majority-resolved responses.
    std::optional<double> partial_overlap_rate;
    std::size_t escalation_count = 0;
    std::size_t unanimous = 0;
    std::size_t majority = 0;
    std::size_t excluded = 0;
    std::size_t pending = 0;
    std::size_t responses = 0;

    nlohmann::json to_json() const;
};

/// Agreement over the three primary annotations of every listed response.
/// Throws listing the ids that have fewer than three annotations.
AgreementReport agreement_report(const std::vector<std::string>& response_ids,
                                 const std::map<std::string, std::vector<Annotation>>& by_response,
                                 AdjudicationMode mode = AdjudicationMode::ExactSet);

/// Resolved, non-excluded responses with their final labels, in the order of
/// `responses`. Responses awaiting escalation are left out.
std::vector<corpus::LabeledResponse> export_labeled(const corpus::ResponseSet& responses,
                                                    const std::vector<AdjudicationOutcome>& outcomes);

/// Noise model for a simulated campaign. Each annotator errs independently.
struct AnnotatorNoise {
    double flip_sentiment = 0.08;
    double drop_aspect = 0.08;
    double add_aspect = 0.04;
    double ignore = 0.01;
};

struct SimulatedCampaign {
    AssignmentPlan plan;
    std::vector<Annotation> annotations;
    std::map<std::string, std::vector<Annotation>> by_response;
};

/// Runs assign() and lets noisy simulated annotators label every task from
/// the gold sets; escalations go to the least-loaded annotator outside the
/// first three, who answers with the same noise model.
SimulatedCampaign simulate_campaign(const corpus::ResponseSet& responses, const std::vector<LabelSet>& gold,
                                    const std::vector<std::string>& annotators, std::size_t copies,
                                    const AnnotatorNoise& noise, std::uint64_t seed);

/// Least-loaded annotator not in `exclude`; ties by plan order. Nullopt when
/// everyone is excluded.
std::optional<std::string> pick_escalation_annotator(const std::vector<std::string>& annotators,
                                                     const std::map<std::string, std::size_t>& loads,
                                                     const std::vector<std::string>& exclude);

}  // namespace absa::annotation
