#include "absa/annotation_store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <mutex>
#include <set>
#include <sstream>

#include "absa/common.hpp"

namespace absa::annotation {

using nlohmann::json;

namespace {

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

AnnotationStore::AnnotationStore(std::filesystem::path log_path) : log_path_(std::move(log_path)) {
    if (std::filesystem::exists(*log_path_)) {
        std::istringstream in(read_file(*log_path_));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            try {
                auto ev = json::parse(line);
                auto type = ev.at("type").get<std::string>();
                if (type == "plan") {
                    apply_plan(ev);
                } else if (type == "annotation") {
                    apply_annotation(annotation_from_json(ev.at("annotation")), false);
                } else if (type == "escalation") {
                    auto rid = ev.at("response_id").get<std::string>();
                    auto who = ev.at("annotator_id").get<std::string>();
                    escalations_[rid] = who;
                    queues_[who].push_back(rid);
                    escalation_task_[who].push_back(true);
                } else {
                    throw Error("unknown event type '" + type + "'");
                }
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw ParseError(log_path_->string() + ": " + e.what(), lineno);
            }
        }
    } else if (log_path_->has_parent_path()) {
        std::filesystem::create_directories(log_path_->parent_path());
    }
    log_.open(*log_path_, std::ios::app | std::ios::binary);
    if (!log_) throw Error("cannot open annotation log " + log_path_->string());
}

void AnnotationStore::append(const json& event) {
    if (!log_path_) return;
    log_ << event.dump() << '\n';
    log_.flush();
    if (!log_) throw Error("failed to append to annotation log " + log_path_->string());
}

void AnnotationStore::apply_plan(const json& ev) {
    if (has_plan_) throw Error("the store already holds a plan");
    for (const auto& r : ev.at("responses")) {
        auto resp = corpus::Response::make(r.at("id").get<std::string>(), r.at("text").get<std::string>(),
                                           r.value("source", ""), r.value("recorded_at", ""));
        response_index_[resp.id] = responses_.size();
        responses_.push_back(std::move(resp));
    }
    plan_ = AssignmentPlan::from_json(ev.at("plan"));
    for (const auto& a : plan_.annotators) {
        queues_[a] = plan_.queues.at(a);
        escalation_task_[a].assign(queues_[a].size(), false);
        done_[a] = 0;
    }
    has_plan_ = true;
}

void AnnotationStore::load_plan(const corpus::ResponseSet& responses, const AssignmentPlan& plan) {
    for (const auto& [a, queue] : plan.queues) {
        for (const auto& rid : queue) {
            if (!responses.find(rid)) throw Error("plan references unknown response '" + rid + "'");
        }
    }
    json rs = json::array();
    for (const auto& r : responses) rs.push_back(corpus::to_json(r));
    json ev = {{"type", "plan"}, {"responses", rs}, {"plan", plan.to_json()}};

    std::unique_lock lock(mutex_);
    if (has_plan_) throw Conflict("the store already holds a plan");
    apply_plan(ev);
    append(ev);
}

bool AnnotationStore::has_plan() const {
    std::shared_lock lock(mutex_);
    return has_plan_;
}

std::optional<Task> AnnotationStore::next_task(const std::string& annotator_id) const {
    std::shared_lock lock(mutex_);
    auto it = queues_.find(annotator_id);
    if (it == queues_.end()) throw NotFound("unknown annotator '" + annotator_id + "'");
    const auto& queue = it->second;
    for (std::size_t i = 0; i < queue.size(); ++i) {
        auto found = by_response_.find(queue[i]);
        bool answered = found != by_response_.end() &&
                        std::any_of(found->second.begin(), found->second.end(),
                                    [&](const Annotation& a) { return a.annotator_id == annotator_id; });
        if (answered) continue;
        const auto& r = responses_[response_index_.at(queue[i])];
        return Task{r.id, annotator_id, r.text, i + 1, queue.size(), escalation_task_.at(annotator_id)[i]};
    }
    return std::nullopt;
}

SubmitResult AnnotationStore::apply_annotation(const Annotation& a, bool log) {
    if (!has_plan_) throw Conflict("no plan loaded");
    if (!response_index_.count(a.response_id)) throw NotFound("unknown response '" + a.response_id + "'");
    auto q = queues_.find(a.annotator_id);
    if (q == queues_.end()) throw NotFound("unknown annotator '" + a.annotator_id + "'");
    if (std::find(q->second.begin(), q->second.end(), a.response_id) == q->second.end()) {
        throw Conflict("response '" + a.response_id + "' is not assigned to '" + a.annotator_id + "'");
    }
    auto& anns = by_response_[a.response_id];
    for (const auto& prev : anns) {
        if (prev.annotator_id == a.annotator_id) {
            throw Conflict("'" + a.annotator_id + "' already annotated '" + a.response_id + "'");
        }
    }

    if (log) append({{"type", "annotation"}, {"annotation", to_json(a)}});
    anns.push_back(a);
    annotations_.push_back(a);
    ++done_[a.annotator_id];

    SubmitResult result{a, std::nullopt};
    if (log && anns.size() == 3 && needs_escalation(anns)) {
        std::vector<std::string> first;
        for (const auto& x : anns) first.push_back(x.annotator_id);
        std::map<std::string, std::size_t> loads;
        for (const auto& [who, queue] : queues_) loads[who] = queue.size();
        if (auto fourth = pick_escalation_annotator(plan_.annotators, loads, first)) {
            append({{"type", "escalation"}, {"response_id", a.response_id}, {"annotator_id", *fourth}});
            escalations_[a.response_id] = *fourth;
            queues_[*fourth].push_back(a.response_id);
            escalation_task_[*fourth].push_back(true);
            result.escalated_to = *fourth;
        }
    }
    return result;
}

SubmitResult AnnotationStore::submit(const std::string& response_id, const std::string& annotator_id,
                                     const Verdict& verdict, std::string submitted_at) {
    if (verdict.ignore && !verdict.labels.empty()) throw Error("an ignore verdict cannot carry labels");
    Annotation a{response_id, annotator_id, verdict, submitted_at.empty() ? utc_now() : std::move(submitted_at)};
    std::unique_lock lock(mutex_);
    return apply_annotation(a, true);
}

std::vector<AnnotatorProgress> AnnotationStore::progress() const {
    std::shared_lock lock(mutex_);
    std::vector<AnnotatorProgress> out;
    for (const auto& a : plan_.annotators) out.push_back({a, queues_.at(a).size(), done_.at(a)});
    return out;
}

std::vector<Annotation> AnnotationStore::annotations() const {
    std::shared_lock lock(mutex_);
    return annotations_;
}

std::map<std::string, std::vector<Annotation>> AnnotationStore::by_response() const {
    std::shared_lock lock(mutex_);
    return by_response_;
}

std::vector<std::string> AnnotationStore::response_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& r : responses_) ids.push_back(r.id);
    return ids;
}

corpus::ResponseSet AnnotationStore::responses() const {
    std::shared_lock lock(mutex_);
    return corpus::ResponseSet(responses_);
}

bool AnnotationStore::complete() const {
    std::shared_lock lock(mutex_);
    if (!has_plan_) return false;
    for (const auto& [who, queue] : queues_) {
        if (done_.at(who) < queue.size()) return false;
    }
    return true;
}

std::size_t AnnotationStore::pending_escalations() const {
    std::shared_lock lock(mutex_);
    std::size_t n = 0;
    for (const auto& [rid, who] : escalations_) n += by_response_.at(rid).size() < 4;
    return n;
}

std::vector<AdjudicationOutcome> AnnotationStore::adjudicate(AdjudicationMode mode) const {
    std::shared_lock lock(mutex_);
    std::vector<AdjudicationOutcome> out;
    for (const auto& r : responses_) {
        auto it = by_response_.find(r.id);
        if (it == by_response_.end() || it->second.size() < 3) continue;
        out.push_back(annotation::adjudicate(it->second, mode));
    }
    return out;
}

std::vector<corpus::LabeledResponse> AnnotationStore::export_labeled(AdjudicationMode mode) const {
    auto outcomes = adjudicate(mode);
    return annotation::export_labeled(responses(), outcomes);
}

}  // namespace absa::annotation
