#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "absa/annotation.hpp"
#include "absa/common.hpp"
#include "absa/corpus.hpp"

namespace absa::annotation {

struct Task {
    std::string response_id;
    std::string annotator_id;
    std::string text;
    /// 1-based position in the annotator's queue, and the queue length.
    std::size_t position = 0;
    std::size_t total = 0;
    bool escalation = false;
};

struct AnnotatorProgress {
    std::string annotator_id;
    std::size_t assigned = 0;
    std::size_t done = 0;
};

struct SubmitResult {
    Annotation annotation;
    /// Set when this submission left the response without a majority and a
    /// fourth task was created.
    std::optional<std::string> escalated_to;
};

/// Thread-safe campaign state backed by an append-only JSON Lines event log
/// (plan, annotation, escalation events). Replaying the log rebuilds the
/// state. Writers are serialized; readers see a consistent prefix.
class AnnotationStore {
public:
    /// In-memory store with no log.
    AnnotationStore() = default;
    /// Opens (and replays) the log at path, creating it when missing.
    explicit AnnotationStore(std::filesystem::path log_path);

    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    /// Installs the campaign. Only one plan per store.
    void load_plan(const corpus::ResponseSet& responses, const AssignmentPlan& plan);
    bool has_plan() const;

    std::optional<Task> next_task(const std::string& annotator_id) const;

    /// Validates and records one verdict. Throws NotFound for unknown ids and
    /// Conflict when the task was not assigned or was already answered.
    SubmitResult submit(const std::string& response_id, const std::string& annotator_id, const Verdict& verdict,
                        std::string submitted_at = "");

    std::vector<AnnotatorProgress> progress() const;
    std::vector<Annotation> annotations() const;
    std::map<std::string, std::vector<Annotation>> by_response() const;
    std::vector<std::string> response_ids() const;
    corpus::ResponseSet responses() const;
    bool complete() const;
    std::size_t pending_escalations() const;

    /// Outcomes for every response with three or more annotations.
    std::vector<AdjudicationOutcome> adjudicate(AdjudicationMode mode = AdjudicationMode::ExactSet) const;
    std::vector<corpus::LabeledResponse> export_labeled(AdjudicationMode mode = AdjudicationMode::ExactSet) const;

    class NotFound : public Error {
    public:
        using Error::Error;
    };
    class Conflict : public Error {
    public:
        using Error::Error;
    };

private:
    void apply_plan(const nlohmann::json& event);
    SubmitResult apply_annotation(const Annotation& a, bool log);
    void append(const nlohmann::json& event);

    mutable std::shared_mutex mutex_;
    std::optional<std::filesystem::path> log_path_;
    std::ofstream log_;

    std::vector<corpus::Response> responses_;
    std::map<std::string, std::size_t> response_index_;
    AssignmentPlan plan_;
    bool has_plan_ = false;
    /// Per annotator: queue of response ids, including escalation tasks.
    std::map<std::string, std::vector<std::string>> queues_;
    std::map<std::string, std::vector<bool>> escalation_task_;
    std::map<std::string, std::size_t> done_;
    std::map<std::string, std::vector<Annotation>> by_response_;
    std::vector<Annotation> annotations_;
    /// Response id to the annotator holding its escalation task.
    std::map<std::string, std::string> escalations_;
};

}  // namespace absa::annotation
