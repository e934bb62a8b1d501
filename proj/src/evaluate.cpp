#include "absa/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "absa/common.hpp"

namespace absa::eval {

using nlohmann::json;

void SplitSpec::validate() const {
    for (double f : {train, validation, test}) {
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0, 1]");
    }
    if (std::abs(train + validation + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

namespace {

// Largest remainder; ties go to the earlier part.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& f) {
    std::array<std::size_t, 3> out{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        double exact = static_cast<double>(n) * f[s];
        out[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        rem[s] = exact - static_cast<double>(out[s]);
        used += out[s];
    }
    while (used < n) {
        std::size_t best = 0;
        for (std::size_t s = 1; s < 3; ++s) {
            if (rem[s] > rem[best] + 1e-12) best = s;
        }
        ++out[best];
        rem[best] = -1.0;
        ++used;
    }
    return out;
}

}  // namespace

Split split(const std::vector<corpus::LabeledResponse>& data, const SplitSpec& spec) {
    spec.validate();
    const std::array<double, 3> frac = {spec.train, spec.validation, spec.test};
    const std::size_t n = data.size();
    if (n < 7 && frac[0] > 0 && frac[1] > 0 && frac[2] > 0) {
        throw Error("split: need at least 7 items for three non-empty splits, got " + std::to_string(n));
    }
    const auto target = apportion(n, frac);
    std::array<std::vector<std::size_t>, 3> parts;
    Split out;

    if (!spec.stratify) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(mix_seed(spec.seed, 0));
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t k = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t i = 0; i < target[s]; ++i) parts[s].push_back(order[k++]);
        }
    } else {
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < n; ++i) groups[data[i].labels.key()].push_back(i);

        struct Leftover {
            std::vector<std::size_t> members;
            std::array<double, 3> rem{};
            std::array<bool, 3> used{};
        };
        std::vector<Leftover> leftovers;
        std::array<std::size_t, 3> need = target;
        std::vector<std::size_t> singles;
        for (auto& [key, members] : groups) {
            Rng rng(mix_seed(spec.seed, fnv1a(key)));
            std::shuffle(members.begin(), members.end(), rng);
            if (members.size() == 1) {
                singles.push_back(members[0]);
                out.warnings.push_back("label combination " + key + " has a single member; placed without stratification");
                continue;
            }
            Leftover lo;
            std::size_t k = 0;
            for (std::size_t s = 0; s < 3; ++s) {
                double exact = static_cast<double>(members.size()) * frac[s];
                auto base = static_cast<std::size_t>(std::floor(exact + 1e-9));
                lo.rem[s] = exact - static_cast<double>(base);
                for (std::size_t i = 0; i < base; ++i) parts[s].push_back(members[k++]);
                need[s] -= base;
            }
            lo.members.assign(members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
            if (!lo.members.empty()) leftovers.push_back(std::move(lo));
        }
        // Groups with two leftovers first: they need two distinct splits.
        std::stable_sort(leftovers.begin(), leftovers.end(),
                         [](const Leftover& a, const Leftover& b) { return a.members.size() > b.members.size(); });
        Rng rng(mix_seed(spec.seed, 0x51));
        std::shuffle(singles.begin(), singles.end(), rng);
        for (auto s : singles) leftovers.push_back({{s}, {frac[0], frac[1], frac[2]}, {}});

        for (auto& lo : leftovers) {
            for (auto member : lo.members) {
                std::ptrdiff_t pick = -1;
                for (int pass = 0; pass < 2 && pick < 0; ++pass) {
                    for (std::size_t s = 0; s < 3; ++s) {
                        if (need[s] == 0 || (pass == 0 && lo.used[s])) continue;
                        if (pick < 0 || lo.rem[s] > lo.rem[static_cast<std::size_t>(pick)]) {
                            pick = static_cast<std::ptrdiff_t>(s);
                        }
                    }
                }
                auto s = static_cast<std::size_t>(pick);
                parts[s].push_back(member);
                lo.used[s] = true;
                --need[s];
            }
        }
    }

    std::array<std::vector<corpus::LabeledResponse>*, 3> dest = {&out.train, &out.validation, &out.test};
    for (std::size_t s = 0; s < 3; ++s) {
        std::sort(parts[s].begin(), parts[s].end());
        for (auto i : parts[s]) dest[s]->push_back(data[i]);
    }
    return out;
}

const ClassMetrics& Metrics::at(std::string_view name) const {
    for (const auto& c : classes) {
        if (c.name == name) return c;
    }
    throw Error("no metrics for class '" + std::string(name) + "'");
}

json Metrics::to_json() const {
    json cs = json::array();
    for (const auto& c : classes) {
        cs.push_back({{"class", c.name},
                      {"precision", c.precision},
                      {"recall", c.recall},
                      {"f1", c.f1},
                      {"tp", c.tp},
                      {"fp", c.fp},
                      {"fn", c.fn},
                      {"support", c.support()},
                      {"no_support", c.no_support}});
    }
    return {{"classes", cs},
            {"macro", {{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}}}};
}

Metrics Metrics::from_json(const json& j) {
    Metrics m;
    for (const auto& c : j.at("classes")) {
        ClassMetrics cm;
        cm.name = c.at("class").get<std::string>();
        cm.precision = c.at("precision").get<double>();
        cm.recall = c.at("recall").get<double>();
        cm.f1 = c.at("f1").get<double>();
        cm.tp = c.at("tp").get<std::size_t>();
        cm.fp = c.at("fp").get<std::size_t>();
        cm.fn = c.at("fn").get<std::size_t>();
        cm.no_support = c.at("no_support").get<bool>();
        m.classes.push_back(std::move(cm));
    }
    const auto& macro = j.at("macro");
    m.macro_precision = macro.at("precision").get<double>();
    m.macro_recall = macro.at("recall").get<double>();
    m.macro_f1 = macro.at("f1").get<double>();
    return m;
}

Metrics prf(const std::vector<std::set<std::string>>& pred, const std::vector<std::set<std::string>>& gold,
            const std::vector<std::string>& classes) {
    if (pred.size() != gold.size()) {
        throw Error("prf: " + std::to_string(pred.size()) + " predictions for " + std::to_string(gold.size()) +
                    " gold items");
    }
    if (classes.empty()) throw Error("prf: no classes");
    Metrics m;
    for (const auto& name : classes) {
        ClassMetrics c;
        c.name = name;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            bool p = pred[i].count(name) > 0, g = gold[i].count(name) > 0;
            c.tp += p && g;
            c.fp += p && !g;
            c.fn += !p && g;
        }
        c.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
        c.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
        c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
        c.no_support = c.tp + c.fn == 0;
        m.classes.push_back(c);
    }
    for (const auto& c : m.classes) {
        m.macro_precision += c.precision;
        m.macro_recall += c.recall;
        m.macro_f1 += c.f1;
    }
    const auto k = static_cast<double>(m.classes.size());
    m.macro_precision /= k;
    m.macro_recall /= k;
    m.macro_f1 /= k;
    return m;
}

std::set<std::string> aspect_names(const LabelSet& labels) {
    std::set<std::string> out;
    for (Aspect a : labels.aspects()) out.insert(std::string(aspect_name(a)));
    return out;
}

std::set<std::string> pair_tags(const LabelSet& labels) {
    std::set<std::string> out;
    for (const auto& p : labels.pairs()) out.insert(p.tag());
    return out;
}

std::vector<std::string> aspect_classes() {
    std::vector<std::string> out;
    for (Aspect a : kAllAspects) out.emplace_back(aspect_name(a));
    return out;
}

std::vector<std::string> sentiment_classes() {
    return {std::string(sentiment_name(Sentiment::Positive)), std::string(sentiment_name(Sentiment::Negative))};
}

std::vector<std::string> pair_classes() {
    std::vector<std::string> out;
    for (const auto& p : all_aspect_sentiments()) out.push_back(p.tag());
    return out;
}

Metrics aspect_metrics(const std::vector<LabelSet>& pred, const std::vector<LabelSet>& gold) {
    std::vector<std::set<std::string>> p, g;
    for (const auto& l : pred) p.push_back(aspect_names(l));
    for (const auto& l : gold) g.push_back(aspect_names(l));
    return prf(p, g, aspect_classes());
}

Metrics sentiment_metrics(const std::vector<Sentiment>& pred, const std::vector<Sentiment>& gold) {
    std::vector<std::set<std::string>> p, g;
    for (auto s : pred) p.push_back({std::string(sentiment_name(s))});
    for (auto s : gold) g.push_back({std::string(sentiment_name(s))});
    return prf(p, g, sentiment_classes());
}

Metrics pair_metrics(const std::vector<LabelSet>& pred, const std::vector<LabelSet>& gold) {
    std::vector<std::set<std::string>> p, g;
    for (const auto& l : pred) p.push_back(pair_tags(l));
    for (const auto& l : gold) g.push_back(pair_tags(l));
    return prf(p, g, pair_classes());
}

std::vector<double> threshold_grid() {
    std::vector<double> g;
    for (int k = 1; k <= 99; ++k) g.push_back(k / 100.0);
    return g;
}

ThresholdChoice tune_thresholds(const std::vector<std::array<double, kNumAspects>>& scores,
                                const std::vector<LabelSet>& gold) {
    if (scores.empty()) throw Error("tune_thresholds: empty validation set");
    if (scores.size() != gold.size()) throw Error("tune_thresholds: scores and gold differ in length");
    ThresholdChoice out;
    const auto grid = threshold_grid();
    for (Aspect a : kAllAspects) {
        const auto ai = index_of(a);
        double best_f1 = -1.0;
        std::size_t best_fp = 0;
        for (double t : grid) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                bool p = scores[i][ai] >= t, g = gold[i].has(a);
                tp += p && g;
                fp += p && !g;
                fn += !p && g;
            }
            double f1 = tp ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : 0.0;
            if (f1 > best_f1 || (f1 == best_f1 && fp < best_fp)) {
                best_f1 = f1;
                best_fp = fp;
                out.thresholds[ai] = t;
                out.f1[ai] = f1;
            }
        }
    }
    out.macro_f1 = std::accumulate(out.f1.begin(), out.f1.end(), 0.0) / static_cast<double>(kNumAspects);
    return out;
}

double aspect_jaccard(const LabelSet& pred, const LabelSet& gold) {
    std::size_t inter = 0, uni = 0;
    for (Aspect a : kAllAspects) {
        bool p = pred.has(a), g = gold.has(a);
        inter += p && g;
        uni += p || g;
    }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
}

std::vector<std::pair<std::size_t, AspectSentiment>> gold_pairs(const std::vector<LabelSet>& gold) {
    std::vector<std::pair<std::size_t, AspectSentiment>> out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        for (const auto& p : gold[i].pairs()) out.emplace_back(i, p);
    }
    return out;
}

std::string predictions_to_jsonl(const Run& run, const std::vector<std::string>& ids, const std::vector<LabelSet>& gold) {
    if (ids.size() != run.predicted.size() || gold.size() != ids.size()) {
        throw Error("predictions: ids, gold and predictions differ in length");
    }
    const auto pairs = gold_pairs(gold);
    if (run.sentiment && run.sentiment->size() != pairs.size()) {
        throw Error("predictions: run " + run.name + " has the wrong number of sentiment predictions");
    }
    std::vector<json> lines(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        json aspects = json::array();
        for (Aspect a : run.predicted[i].aspects()) aspects.push_back(aspect_name(a));
        lines[i] = {{"id", ids[i]}, {"aspects", aspects}};
        if (run.sentiment) {
            lines[i]["labels"] = to_json(run.predicted[i]);
            lines[i]["gold_aspect_sentiment"] = json::object();
        }
    }
    if (run.sentiment) {
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            auto& [i, p] = pairs[k];
            lines[i]["gold_aspect_sentiment"][std::string(aspect_name(p.aspect))] = sentiment_name((*run.sentiment)[k]);
        }
    }
    std::string out;
    for (const auto& l : lines) out += l.dump() + "\n";
    return out;
}

Run read_predictions(std::string_view content, const std::string& name, const std::vector<std::string>& ids,
                     const std::vector<LabelSet>& gold) {
    if (ids.size() != gold.size()) throw Error("predictions: ids and gold differ in length");
    std::map<std::string, json> by_id;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError(e.what(), lineno);
        }
        if (!j.is_object() || !j.contains("id") || !j.at("id").is_string() || !j.contains("aspects")) {
            throw ParseError("prediction needs id and aspects", lineno);
        }
        auto id = j.at("id").get<std::string>();
        if (!by_id.emplace(id, std::move(j)).second) throw ParseError("duplicate prediction for " + id, lineno);
    }

    Run run{name, {}, std::nullopt};
    std::optional<bool> has_sentiment;
    std::vector<std::map<Aspect, Sentiment>> on_gold(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = by_id.find(ids[i]);
        if (it == by_id.end()) throw Error("predictions " + name + ": no prediction for " + ids[i]);
        const json& j = it->second;
        bool sentiment = j.contains("labels");
        if (has_sentiment && *has_sentiment != sentiment) {
            throw Error("predictions " + name + ": sentiment present on some lines only");
        }
        has_sentiment = sentiment;
        LabelSet predicted;
        if (sentiment) {
            predicted = label_set_from_json(j.at("labels"));
            const json entries = j.value("gold_aspect_sentiment", json::object());
            if (!entries.is_object()) throw Error("predictions " + name + ": gold_aspect_sentiment must be an object");
            for (const auto& [key, value] : entries.items()) {
                auto a = parse_aspect(key);
                auto s = value.is_string() ? parse_sentiment(value.get<std::string>()) : std::nullopt;
                if (!a || !s) throw Error("predictions " + name + ": bad sentiment entry for " + ids[i]);
                on_gold[i][*a] = *s;
            }
        } else {
            // Aspect-only runs: the sentiment slot is a placeholder that aspect scoring ignores.
            for (const auto& v : j.at("aspects")) {
                auto a = v.is_string() ? parse_aspect(v.get<std::string>()) : std::nullopt;
                if (!a) throw Error("predictions " + name + ": unknown aspect for " + ids[i]);
                predicted.set(*a, Sentiment::Negative);
            }
        }
        run.predicted.push_back(predicted);
        by_id.erase(it);
    }
    if (!by_id.empty()) throw Error("predictions " + name + ": unknown id " + by_id.begin()->first);
    if (has_sentiment.value_or(false)) {
        run.sentiment.emplace();
        for (const auto& [i, p] : gold_pairs(gold)) {
            auto it = on_gold[i].find(p.aspect);
            if (it == on_gold[i].end()) {
                throw Error("predictions " + name + ": no sentiment for " + ids[i] + " " +
                            std::string(aspect_name(p.aspect)));
            }
            run.sentiment->push_back(it->second);
        }
    }
    return run;
}

Report build_report(const std::vector<Run>& runs, const std::vector<LabelSet>& gold) {
    if (runs.empty()) throw Error("build_report: no runs");
    const auto pairs = gold_pairs(gold);
    std::vector<Sentiment> gold_sentiment;
    for (const auto& p : pairs) gold_sentiment.push_back(p.second.sentiment);

    Report r;
    for (const auto& run : runs) {
        if (run.predicted.size() != gold.size()) throw Error("build_report: run " + run.name + " has the wrong length");
        r.runs.push_back(run.name);
        r.aspect.push_back(aspect_metrics(run.predicted, gold));
        if (run.sentiment) {
            if (run.sentiment->size() != pairs.size()) {
                throw Error("build_report: run " + run.name + " has the wrong number of sentiment predictions");
            }
            r.sentiment.push_back(sentiment_metrics(*run.sentiment, gold_sentiment));
            r.pipeline.push_back(pair_metrics(run.predicted, gold));
            std::size_t exact = 0;
            for (std::size_t i = 0; i < gold.size(); ++i) exact += run.predicted[i] == gold[i];
            r.exact_set_accuracy.push_back(gold.empty() ? 0.0 : static_cast<double>(exact) / gold.size());
        } else {
            r.sentiment.push_back(std::nullopt);
            r.pipeline.push_back(std::nullopt);
            r.exact_set_accuracy.push_back(std::nullopt);
        }
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (std::size_t j = i + 1; j < runs.size(); ++j) {
            Comparison c{runs[i].name, runs[j].name, std::nullopt, std::nullopt};
            std::vector<double> ja, jb;
            for (std::size_t k = 0; k < gold.size(); ++k) {
                ja.push_back(aspect_jaccard(runs[i].predicted[k], gold[k]));
                jb.push_back(aspect_jaccard(runs[j].predicted[k], gold[k]));
            }
            if (!gold.empty()) c.wilcoxon = wilcoxon_signed_rank(ja, jb);
            if (runs[i].sentiment && runs[j].sentiment) {
                std::size_t b = 0, cc = 0;
                for (std::size_t k = 0; k < pairs.size(); ++k) {
                    bool ci = (*runs[i].sentiment)[k] == gold_sentiment[k];
                    bool cj = (*runs[j].sentiment)[k] == gold_sentiment[k];
                    b += ci && !cj;
                    cc += !ci && cj;
                }
                c.mcnemar = mcnemar(b, cc);
            }
            r.comparisons.push_back(std::move(c));
        }
    }
    return r;
}

json Report::to_json() const {
    json j = {{"report_version", kReportVersion}, {"runs", runs}, {"meta", meta}};
    json rs = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        json e = {{"name", runs[i]}, {"aspect", aspect[i].to_json()}};
        e["sentiment"] = sentiment[i] ? sentiment[i]->to_json() : json(nullptr);
        e["pipeline"] = pipeline[i] ? pipeline[i]->to_json() : json(nullptr);
        e["exact_set_accuracy"] = exact_set_accuracy[i] ? json(*exact_set_accuracy[i]) : json(nullptr);
        rs.push_back(e);
    }
    j["results"] = rs;
    json cs = json::array();
    for (const auto& c : comparisons) {
        json e = {{"a", c.a}, {"b", c.b}};
        e["wilcoxon"] = c.wilcoxon ? c.wilcoxon->to_json() : json(nullptr);
        e["mcnemar"] = c.mcnemar ? c.mcnemar->to_json() : json(nullptr);
        cs.push_back(e);
    }
    j["significance"] = cs;
    return j;
}

Report Report::from_json(const json& j) {
    if (j.value("report_version", 0) != kReportVersion) throw ParseError("unsupported report version");
    Report r;
    r.meta = j.value("meta", json::object());
    auto metrics = [](const json& v) { return v.is_null() ? std::nullopt : std::optional<Metrics>(Metrics::from_json(v)); };
    for (const auto& e : j.at("results")) {
        r.runs.push_back(e.at("name").get<std::string>());
        r.aspect.push_back(Metrics::from_json(e.at("aspect")));
        r.sentiment.push_back(metrics(e.at("sentiment")));
        r.pipeline.push_back(metrics(e.at("pipeline")));
        const auto& acc = e.at("exact_set_accuracy");
        r.exact_set_accuracy.push_back(acc.is_null() ? std::nullopt : std::optional<double>(acc.get<double>()));
    }
    auto test = [](const json& v) { return v.is_null() ? std::nullopt : std::optional<TestResult>(TestResult::from_json(v)); };
    for (const auto& e : j.at("significance")) {
        r.comparisons.push_back({e.at("a").get<std::string>(), e.at("b").get<std::string>(), test(e.at("wilcoxon")),
                                 test(e.at("mcnemar"))});
    }
    return r;
}

namespace {

std::string fmt(double v, const char* f = "%.4f") {
    char buf[32];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void render_table(std::ostringstream& out, const std::string& title, const std::vector<std::string>& columns,
                  const std::vector<std::string>& row_names, const std::vector<std::vector<std::optional<double>>>& cells) {
    out << title << "\n";
    std::size_t first = 0;
    for (const auto& r : row_names) first = std::max(first, r.size());
    std::vector<std::size_t> width;
    for (const auto& c : columns) width.push_back(std::max<std::size_t>(c.size(), 7));
    auto pad = [](const std::string& s, std::size_t w, bool left) {
        std::string sp(w > s.size() ? w - s.size() : 0, ' ');
        return left ? s + sp : sp + s;
    };
    out << pad("", first, true);
    for (std::size_t c = 0; c < columns.size(); ++c) out << "  " << pad(columns[c] + " ", width[c] + 1, false);
    out << "\n";
    std::size_t total = first;
    for (auto w : width) total += w + 3;
    out << std::string(total, '-') << "\n";
    for (std::size_t r = 0; r < row_names.size(); ++r) {
        std::optional<double> best;
        for (const auto& v : cells[r]) {
            if (v && (!best || *v > *best)) best = v;
        }
        out << pad(row_names[r], first, true);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto& v = cells[r][c];
            std::string s = v ? fmt(*v) + (*v == *best ? "*" : " ") : "- ";
            out << "  " << pad(s, width[c] + 1, false);
        }
        out << "\n";
    }
    out << "\n";
}

}  // namespace

std::string Report::render_text() const {
    std::ostringstream out;
    std::vector<std::string> rows;
    std::vector<std::vector<std::optional<double>>> cells;

    for (const auto& name : aspect_classes()) {
        rows.push_back(name);
        cells.emplace_back();
        for (const auto& m : aspect) cells.back().push_back(m.at(name).f1);
    }
    rows.push_back("macro precision");
    rows.push_back("macro recall");
    rows.push_back("macro F1");
    cells.emplace_back();
    cells.emplace_back();
    cells.emplace_back();
    for (const auto& m : aspect) {
        cells[cells.size() - 3].push_back(m.macro_precision);
        cells[cells.size() - 2].push_back(m.macro_recall);
        cells[cells.size() - 1].push_back(m.macro_f1);
    }
    render_table(out, "Aspect detection (F1 per aspect)", runs, rows, cells);

    rows.clear();
    cells.clear();
    for (const auto& name : sentiment_classes()) {
        rows.push_back(name);
        cells.emplace_back();
        for (const auto& m : sentiment) cells.back().push_back(m ? std::optional<double>(m->at(name).f1) : std::nullopt);
    }
    rows.push_back("macro F1");
    cells.emplace_back();
    for (const auto& m : sentiment) cells.back().push_back(m ? std::optional<double>(m->macro_f1) : std::nullopt);
    render_table(out, "Sentiment on gold aspects (F1 per class)", runs, rows, cells);

    rows = {"pair macro F1", "exact-set accuracy"};
    cells.assign(2, {});
    for (std::size_t i = 0; i < runs.size(); ++i) {
        cells[0].push_back(pipeline[i] ? std::optional<double>(pipeline[i]->macro_f1) : std::nullopt);
        cells[1].push_back(exact_set_accuracy[i]);
    }
    render_table(out, "Pipeline (aspect-sentiment pairs)", runs, rows, cells);

    if (!comparisons.empty()) {
        out << "Significance\n";
        for (const auto& c : comparisons) {
            out << c.a << " vs " << c.b << ":";
            if (c.wilcoxon) {
                out << " Wilcoxon W=" << fmt(c.wilcoxon->statistic, "%.1f") << " n=" << c.wilcoxon->n
                    << " p=" << fmt(c.wilcoxon->p_value, "%.3g");
                if (!c.wilcoxon->flag.empty()) out << " (" << c.wilcoxon->flag << ")";
            }
            if (c.mcnemar) {
                out << "; McNemar stat=" << fmt(c.mcnemar->statistic, "%.3f") << " p=" << fmt(c.mcnemar->p_value, "%.3g");
                if (!c.mcnemar->flag.empty()) out << " (" << c.mcnemar->flag << ")";
            }
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace absa::eval
