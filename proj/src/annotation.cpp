#include "absa/annotation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "absa/common.hpp"

namespace absa::annotation {

using nlohmann::json;

json to_json(const Verdict& v) { return {{"ignore", v.ignore}, {"labels", absa::to_json(v.labels)}}; }

Verdict verdict_from_json(const json& j) {
    if (!j.is_object()) throw Error("verdict must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key != "ignore" && key != "labels") throw Error("unknown verdict field '" + key + "'");
    }
    Verdict v;
    if (j.contains("ignore")) {
        if (!j.at("ignore").is_boolean()) throw Error("verdict.ignore must be a boolean");
        v.ignore = j.at("ignore").get<bool>();
    }
    if (j.contains("labels")) v.labels = label_set_from_json(j.at("labels"));
    if (v.ignore && !v.labels.empty()) throw Error("an ignore verdict cannot carry labels");
    return v;
}

json to_json(const Annotation& a) {
    return {{"response_id", a.response_id},
            {"annotator_id", a.annotator_id},
            {"verdict", to_json(a.verdict)},
            {"submitted_at", a.submitted_at}};
}

Annotation annotation_from_json(const json& j) {
    if (!j.is_object()) throw Error("annotation must be an object");
    for (const char* key : {"response_id", "annotator_id", "verdict"}) {
        if (!j.contains(key)) throw Error(std::string("annotation is missing '") + key + "'");
    }
    if (!j.at("response_id").is_string() || !j.at("annotator_id").is_string()) {
        throw Error("response_id and annotator_id must be strings");
    }
    Annotation a;
    a.response_id = j.at("response_id").get<std::string>();
    a.annotator_id = j.at("annotator_id").get<std::string>();
    a.verdict = verdict_from_json(j.at("verdict"));
    if (j.contains("submitted_at") && j.at("submitted_at").is_string()) {
        a.submitted_at = j.at("submitted_at").get<std::string>();
    }
    return a;
}

json AssignmentPlan::to_json() const {
    return {{"annotators", annotators}, {"copies", copies}, {"seed", seed}, {"queues", queues}, {"assignees", assignees}};
}

AssignmentPlan AssignmentPlan::from_json(const json& j) {
    AssignmentPlan p;
    p.annotators = j.at("annotators").get<std::vector<std::string>>();
    p.copies = j.at("copies").get<std::size_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.queues = j.at("queues").get<std::map<std::string, std::vector<std::string>>>();
    p.assignees = j.at("assignees").get<std::map<std::string, std::vector<std::string>>>();
    return p;
}

AssignmentPlan assign(const corpus::ResponseSet& responses, const std::vector<std::string>& annotators,
                      std::size_t copies, std::uint64_t seed, std::optional<std::size_t> capacity) {
    const std::size_t m = annotators.size();
    if (copies < 1) throw Error("assign: copies must be at least 1");
    if (std::set<std::string>(annotators.begin(), annotators.end()).size() != m) {
        throw Error("assign: annotator ids must be unique");
    }
    if (copies > m) {
        throw Error("assign: " + std::to_string(copies) + " copies need as many distinct annotators, have " +
                    std::to_string(m) + " (deficit " + std::to_string(copies - m) + ")");
    }
    const std::size_t needed = copies * responses.size();
    if (capacity && *capacity * m < needed) {
        throw Error("assign: need " + std::to_string(needed) + " slots, capacity provides " +
                    std::to_string(*capacity * m) + " (deficit " + std::to_string(needed - *capacity * m) + ")");
    }

    AssignmentPlan plan;
    plan.annotators = annotators;
    plan.copies = copies;
    plan.seed = seed;
    for (const auto& a : annotators) plan.queues[a];

    std::vector<std::size_t> order(responses.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0));
    std::shuffle(order.begin(), order.end(), rng);

    // Consecutive slots go round-robin over annotators: any `copies`
    // consecutive slots are distinct annotators, and loads differ by at most one.
    std::size_t slot = 0;
    for (std::size_t idx : order) {
        const auto& id = responses[idx].id;
        auto& who = plan.assignees[id];
        for (std::size_t c = 0; c < copies; ++c, ++slot) {
            const auto& a = annotators[slot % m];
            who.push_back(a);
            plan.queues[a].push_back(id);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        Rng q(mix_seed(seed, 1 + i));
        auto& queue = plan.queues[annotators[i]];
        std::shuffle(queue.begin(), queue.end(), q);
    }
    return plan;
}

std::string_view resolution_name(Resolution r) {
    switch (r) {
        case Resolution::Unanimous: return "unanimous";
        case Resolution::Majority: return "majority";
        case Resolution::Escalated: return "escalated";
        case Resolution::Excluded: return "excluded";
    }
    return "unknown";
}

bool needs_escalation(const std::vector<Annotation>& primary) {
    if (primary.size() < 3) return false;
    const auto& a = primary[0].verdict;
    const auto& b = primary[1].verdict;
    const auto& c = primary[2].verdict;
    return !(a == b || a == c || b == c);
}

namespace {

AdjudicationOutcome settle(std::string id, Resolution r, const Verdict& v, bool escalated) {
    AdjudicationOutcome out;
    out.response_id = std::move(id);
    out.escalated = escalated;
    if (v.ignore) {
        out.resolution = Resolution::Excluded;
    } else {
        out.resolution = r;
        out.final = v.labels;
    }
    return out;
}

}  // namespace

AdjudicationOutcome adjudicate(const std::vector<Annotation>& annotations, AdjudicationMode mode) {
    if (annotations.size() < 3) {
        std::string id = annotations.empty() ? "" : " for '" + annotations[0].response_id + "'";
        throw Error("incomplete: " + std::to_string(annotations.size()) + " of 3 annotations" + id);
    }
    const auto& id = annotations[0].response_id;
    for (const auto& a : annotations) {
        if (a.response_id != id) throw Error("adjudicate: annotations belong to different responses");
    }
    const auto& a = annotations[0].verdict;
    const auto& b = annotations[1].verdict;
    const auto& c = annotations[2].verdict;

    if (mode == AdjudicationMode::PerLabel) {
        int ignores = a.ignore + b.ignore + c.ignore;
        bool same = a == b && b == c;
        Resolution r = same ? Resolution::Unanimous : Resolution::Majority;
        if (ignores >= 2) return settle(id, r, Verdict::ignored(), false);
        LabelSet merged;
        for (const auto& p : all_aspect_sentiments()) {
            int votes = 0;
            for (const auto* v : {&a, &b, &c}) votes += !v->ignore && v->labels.contains(p);
            if (votes >= 2) merged.set(p.aspect, p.sentiment);
        }
        return settle(id, r, Verdict::of(merged), false);
    }

    if (a == b && b == c) return settle(id, Resolution::Unanimous, a, false);
    if (a == b || a == c) return settle(id, Resolution::Majority, a, false);
    if (b == c) return settle(id, Resolution::Majority, b, false);

    if (annotations.size() < 4) {
        AdjudicationOutcome out;
        out.response_id = id;
        out.resolution = Resolution::Escalated;
        out.escalated = true;
        out.awaiting_fourth = true;
        return out;
    }
    return settle(id, Resolution::Escalated, annotations[3].verdict, true);
}

std::optional<double> fleiss_kappa(const std::vector<std::vector<std::size_t>>& table, std::size_t raters) {
    if (table.empty()) throw Error("fleiss_kappa: need at least one item");
    if (raters < 2) throw Error("fleiss_kappa: need at least two raters per item");
    const std::size_t k = table[0].size();
    if (k < 2) throw Error("fleiss_kappa: need at least two categories");

    const double n = static_cast<double>(raters);
    const double items = static_cast<double>(table.size());
    std::vector<double> column(k, 0.0);
    double p_bar = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i].size() != k) throw Error("fleiss_kappa: row " + std::to_string(i) + " has the wrong width");
        std::size_t sum = 0;
        double sq = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            sum += table[i][j];
            sq += static_cast<double>(table[i][j]) * static_cast<double>(table[i][j]);
            column[j] += static_cast<double>(table[i][j]);
        }
        if (sum != raters) {
            throw Error("fleiss_kappa: row " + std::to_string(i) + " sums to " + std::to_string(sum) + ", expected " +
                        std::to_string(raters));
        }
        p_bar += (sq - n) / (n * (n - 1.0));
    }
    p_bar /= items;
    double p_e = 0.0;
    for (double c : column) {
        double p = c / (items * n);
        p_e += p * p;
    }
    if (p_bar == 1.0) return 1.0;
    if (p_e == 1.0) return std::nullopt;
    return (p_bar - p_e) / (1.0 - p_e);
}

json AgreementReport::to_json() const {
    return {{"per_label_kappa", per_label_kappa},
            {"average_kappa", average_kappa},
            {"partial_overlap_rate", partial_overlap_rate ? json(*partial_overlap_rate) : json(nullptr)},
            {"escalation_count", escalation_count},
            {"unanimous", unanimous},
            {"majority", majority},
            {"excluded", excluded},
            {"pending", pending},
            {"responses", responses}};
}

AgreementReport agreement_report(const std::vector<std::string>& response_ids,
                                 const std::map<std::string, std::vector<Annotation>>& by_response,
                                 AdjudicationMode mode) {
    std::vector<std::string> missing;
    for (const auto& id : response_ids) {
        auto it = by_response.find(id);
        if (it == by_response.end() || it->second.size() < 3) missing.push_back(id);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
        if (missing.size() > 20) list += ", ...";
        throw Error("agreement_report: " + std::to_string(missing.size()) + " responses lack three annotations: " +
                    list);
    }
    if (response_ids.empty()) throw Error("agreement_report: no responses");

    AgreementReport rep;
    rep.responses = response_ids.size();

    std::vector<std::string> labels;
    for (const auto& p : all_aspect_sentiments()) labels.push_back(p.tag());
    labels.push_back("ignore");
    std::vector<std::vector<std::vector<std::size_t>>> tables(labels.size());

    std::size_t majority_cases = 0;
    std::size_t overlapping = 0;
    for (const auto& id : response_ids) {
        const auto& anns = by_response.at(id);
        for (std::size_t l = 0; l < labels.size(); ++l) {
            std::size_t present = 0;
            for (std::size_t r = 0; r < 3; ++r) {
                const auto& v = anns[r].verdict;
                if (l == labels.size() - 1) {
                    present += v.ignore;
                } else {
                    present += !v.ignore && v.labels.contains(all_aspect_sentiments()[l]);
                }
            }
            tables[l].push_back({present, 3 - present});
        }

        auto out = adjudicate(anns, mode);
        rep.escalation_count += out.escalated;
        rep.pending += out.awaiting_fourth;
        if (out.resolution == Resolution::Excluded) ++rep.excluded;
        if (out.resolution == Resolution::Unanimous) ++rep.unanimous;
        if (out.resolution == Resolution::Majority) {
            ++rep.majority;
            ++majority_cases;
            // The dissenting verdict is the one that differs from the winner.
            for (std::size_t r = 0; r < 3; ++r) {
                const auto& v = anns[r].verdict;
                if (!v.ignore && v.labels == *out.final) continue;
                if (!v.ignore && v.labels.overlap(*out.final) > 0) ++overlapping;
                break;
            }
        }
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < labels.size(); ++l) {
        double k = fleiss_kappa(tables[l], 3).value();
        rep.per_label_kappa[labels[l]] = k;
        sum += k;
    }
    rep.average_kappa = sum / static_cast<double>(labels.size());
    if (majority_cases > 0) {
        rep.partial_overlap_rate = static_cast<double>(overlapping) / static_cast<double>(majority_cases);
    }
    return rep;
}

std::vector<corpus::LabeledResponse> export_labeled(const corpus::ResponseSet& responses,
                                                    const std::vector<AdjudicationOutcome>& outcomes) {
    std::map<std::string, const AdjudicationOutcome*> by_id;
    for (const auto& o : outcomes) by_id[o.response_id] = &o;
    std::vector<corpus::LabeledResponse> out;
    for (const auto& r : responses) {
        auto it = by_id.find(r.id);
        if (it == by_id.end() || !it->second->final) continue;
        out.push_back({r, *it->second->final, std::nullopt, false});
    }
    return out;
}

std::optional<std::string> pick_escalation_annotator(const std::vector<std::string>& annotators,
                                                     const std::map<std::string, std::size_t>& loads,
                                                     const std::vector<std::string>& exclude) {
    std::optional<std::string> best;
    std::size_t best_load = 0;
    for (const auto& a : annotators) {
        if (std::find(exclude.begin(), exclude.end(), a) != exclude.end()) continue;
        auto it = loads.find(a);
        std::size_t load = it == loads.end() ? 0 : it->second;
        if (!best || load < best_load) {
            best = a;
            best_load = load;
        }
    }
    return best;
}

namespace {

Verdict noisy_verdict(const LabelSet& gold, const AnnotatorNoise& noise, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < noise.ignore) return Verdict::ignored();
    LabelSet out;
    for (const auto& p : gold.pairs()) {
        if (u(rng) < noise.drop_aspect) continue;
        Sentiment s = p.sentiment;
        if (u(rng) < noise.flip_sentiment) s = s == Sentiment::Positive ? Sentiment::Negative : Sentiment::Positive;
        out.set(p.aspect, s);
    }
    if (u(rng) < noise.add_aspect) {
        std::vector<Aspect> absent;
        for (Aspect a : kAllAspects) {
            if (!gold.has(a)) absent.push_back(a);
        }
        if (!absent.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, absent.size() - 1);
            Aspect a = absent[pick(rng)];
            out.set(a, u(rng) < 0.5 ? Sentiment::Positive : Sentiment::Negative);
        }
    }
    return Verdict::of(out);
}

std::string sim_timestamp(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "2021-03-%02zuT%02zu:%02zu:%02zuZ", 1 + (n / 86400) % 28, (n / 3600) % 24,
                  (n / 60) % 60, n % 60);
    return buf;
}

}  // namespace

SimulatedCampaign simulate_campaign(const corpus::ResponseSet& responses, const std::vector<LabelSet>& gold,
                                    const std::vector<std::string>& annotators, std::size_t copies,
                                    const AnnotatorNoise& noise, std::uint64_t seed) {
    if (gold.size() != responses.size()) throw Error("simulate_campaign: one gold set per response required");
    SimulatedCampaign sim;
    sim.plan = assign(responses, annotators, copies, seed);

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < responses.size(); ++i) index[responses[i].id] = i;

    std::size_t clock = 0;
    std::map<std::string, std::size_t> loads;
    for (std::size_t i = 0; i < annotators.size(); ++i) {
        const auto& who = annotators[i];
        Rng rng(mix_seed(seed, 1000 + i));
        for (const auto& rid : sim.plan.queues.at(who)) {
            Annotation a{rid, who, noisy_verdict(gold[index.at(rid)], noise, rng), sim_timestamp(clock++)};
            sim.annotations.push_back(a);
            sim.by_response[rid].push_back(std::move(a));
        }
        loads[who] = sim.plan.queues.at(who).size();
    }

    Rng escalation_rng(mix_seed(seed, 999));
    for (const auto& r : responses) {
        auto& anns = sim.by_response[r.id];
        if (!needs_escalation(anns)) continue;
        std::vector<std::string> first;
        for (std::size_t k = 0; k < 3; ++k) first.push_back(anns[k].annotator_id);
        auto fourth = pick_escalation_annotator(annotators, loads, first);
        if (!fourth) continue;
        ++loads[*fourth];
        Annotation a{r.id, *fourth, noisy_verdict(gold[index.at(r.id)], noise, escalation_rng), sim_timestamp(clock++)};
        sim.annotations.push_back(a);
        anns.push_back(std::move(a));
    }
    return sim;
}

}  // namespace absa::annotation
