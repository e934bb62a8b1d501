#include "absa/augment.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "absa/common.hpp"

namespace absa::augment {

void AugmentationParams::validate() const {
    if (!(substitution_prob > 0.0 && substitution_prob <= 1.0)) {
        throw ConfigError("substitution_prob must lie in (0, 1]");
    }
    if (min_count_per_combo < 1) throw ConfigError("min_count_per_combo must be at least 1");
    if (max_tokens_replaced < 1) throw ConfigError("max_tokens_replaced must be at least 1");
}

namespace {

bool starts_upper(const std::string& s) { return !s.empty() && to_lower(s.substr(0, 2)) != s.substr(0, 2); }

std::string capitalize_first(const std::string& s) {
    if (s.empty()) return s;
    if (s[0] >= 'a' && s[0] <= 'z') return static_cast<char>(s[0] - 'a' + 'A') + s.substr(1);
    return s;
}

}  // namespace

SynonymProvider::SynonymProvider(std::map<std::string, std::vector<std::string>> table) {
    for (auto& [surface, alts] : table) {
        auto key = to_lower(surface);
        std::vector<std::string> keep;
        for (auto& a : alts) {
            auto t = trim(a);
            if (!t.empty() && to_lower(t) != key && std::find(keep.begin(), keep.end(), t) == keep.end()) {
                keep.push_back(t);
            }
        }
        if (!keep.empty()) table_[key] = std::move(keep);
    }
}

SynonymProvider SynonymProvider::load(const std::filesystem::path& path) {
    std::map<std::string, std::vector<std::string>> table;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(path.string() + ": expected surface<TAB>alternatives", lineno);
        table[trim(line.substr(0, tab))] = split(line.substr(tab + 1), ',');
    }
    return SynonymProvider(std::move(table));
}

SynonymProvider SynonymProvider::demo(const std::filesystem::path& data_dir) {
    return load(data_dir / "lexicon" / "nl_synonyms.tsv");
}

std::string SynonymProvider::id() const {
    std::string all;
    for (const auto& [k, alts] : table_) {
        all += k;
        for (const auto& a : alts) all += "," + a;
        all += '\n';
    }
    return "synonym-" + hex64(fnv1a(all));
}

std::optional<std::string> SynonymProvider::propose(const std::vector<text::Token>& tokens, std::size_t position,
                                                    std::uint64_t seed) const {
    const auto& surface = tokens.at(position).surface;
    auto it = table_.find(to_lower(surface));
    if (it == table_.end()) return std::nullopt;
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
    std::string out = it->second[pick(rng)];
    if (starts_upper(surface)) out = capitalize_first(out);
    if (out == surface) return std::nullopt;
    return out;
}

BackendProvider::BackendProvider(const models::EmbeddingBackend& backend, std::vector<std::string> vocabulary,
                                 std::size_t top_k)
    : backend_(backend), top_k_(std::max<std::size_t>(1, top_k)) {
    std::set<std::string> uniq;
    for (auto& w : vocabulary) uniq.insert(to_lower(w));
    vocabulary_.assign(uniq.begin(), uniq.end());
    for (const auto& w : vocabulary_) embeddings_.push_back(backend_.embed(w));
}

std::string BackendProvider::id() const { return "backend-" + backend_.id() + "-k" + std::to_string(top_k_); }

std::optional<std::string> BackendProvider::propose(const std::vector<text::Token>& tokens, std::size_t position,
                                                    std::uint64_t seed) const {
    const auto& tok = tokens.at(position);
    if (tok.is_punct()) return std::nullopt;
    auto word = to_lower(tok.surface);
    auto query = backend_.embed(word);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
        if (vocabulary_[i] == word) continue;
        double s = models::cosine(query, embeddings_[i]);
        if (s > 0.0) scored.emplace_back(s, i);
    }
    if (scored.empty()) return std::nullopt;
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return vocabulary_[a.second] < vocabulary_[b.second];
    });
    if (scored.size() > top_k_) scored.resize(top_k_);
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, scored.size() - 1);
    std::string out = vocabulary_[scored[pick(rng)].second];
    if (starts_upper(tok.surface)) out = capitalize_first(out);
    if (out == tok.surface) return std::nullopt;
    return out;
}

std::vector<ComboDeficit> plan(const std::vector<corpus::LabeledResponse>& train, const AugmentationParams& params) {
    if (train.empty()) throw Error("augment plan: training set is empty");
    std::map<std::string, ComboDeficit> combos;
    for (const auto& r : train) {
        if (r.labels.size() < params.min_aspects) continue;
        auto& c = combos[r.labels.key()];
        c.labels = r.labels;
        ++c.count;
    }
    std::vector<ComboDeficit> out;
    for (auto& [key, c] : combos) {
        c.deficit = c.count >= params.min_count_per_combo ? 0 : params.min_count_per_combo - c.count;
        out.push_back(c);
    }
    return out;
}

Augmented augment_one(const corpus::LabeledResponse& source, const SubstitutionProvider& provider,
                      const AugmentationParams& params, std::uint64_t draw_seed, const std::string& new_id) {
    const auto& text = source.response.text;
    auto tokens = text::tokenize(text);
    Rng rng(draw_seed);
    std::bernoulli_distribution select(params.substitution_prob);

    std::vector<std::pair<std::size_t, std::string>> replacements;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        bool chosen = select(rng);
        if (!chosen || replacements.size() >= params.max_tokens_replaced) continue;
        if (auto alt = provider.propose(tokens, i, mix_seed(draw_seed, i))) replacements.emplace_back(i, *alt);
    }

    std::string out;
    std::size_t cursor = 0;
    for (const auto& [i, alt] : replacements) {
        out.append(text, cursor, tokens[i].offset - cursor);
        out += alt;
        cursor = tokens[i].offset + tokens[i].surface.size();
    }
    out.append(text, cursor, std::string::npos);

    Augmented result;
    result.replaced = replacements.size();
    auto& s = result.sample;
    s.response = corpus::Response::make(new_id, std::move(out), source.response.source, source.response.recorded_at);
    s.labels = source.labels;
    s.augmented_from = source.augmented_from.value_or(source.response.id);
    s.noop_augmentation = replacements.empty();
    return result;
}

nlohmann::json RunSummary::to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : combos) {
        cs.push_back({{"combo", c.key}, {"before", c.before}, {"after", c.after}, {"sources", c.sources},
                      {"skipped", c.skipped}});
    }
    return {{"combos", cs}, {"warnings", warnings}, {"added", added}, {"noop", noop}, {"max_replaced", max_replaced}};
}

RunResult run(const std::vector<corpus::LabeledResponse>& train, const SubstitutionProvider& provider,
              const AugmentationParams& params) {
    params.validate();
    RunResult result;
    result.data = train;
    std::set<std::string> ids;
    for (const auto& r : train) ids.insert(r.response.id);

    auto combos = plan(train, params);
    for (std::size_t ci = 0; ci < combos.size(); ++ci) {
        const auto& combo = combos[ci];
        ComboSummary summary{combo.labels.key(), combo.count, combo.count, 0, false};
        std::vector<const corpus::LabeledResponse*> sources;
        for (const auto& r : train) {
            if (r.labels == combo.labels) sources.push_back(&r);
        }
        summary.sources = sources.size();
        if (combo.deficit > 0 && sources.empty()) {
            summary.skipped = true;
            result.summary.warnings.push_back("combo " + summary.key + " has no sources; skipped");
        }
        std::map<std::string, std::size_t> uses;
        for (std::size_t j = 0; j < combo.deficit && !sources.empty(); ++j) {
            const auto& src = *sources[j % sources.size()];
            std::string id;
            do {
                id = src.response.id + "~aug" + std::to_string(++uses[src.response.id]);
            } while (ids.count(id));
            ids.insert(id);
            auto aug = augment_one(src, provider, params, mix_seed(mix_seed(params.seed, ci), j), id);
            result.summary.noop += aug.sample.noop_augmentation;
            result.summary.max_replaced = std::max(result.summary.max_replaced, aug.replaced);
            result.data.push_back(std::move(aug.sample));
            ++summary.after;
            ++result.summary.added;
        }
        result.summary.combos.push_back(std::move(summary));
    }
    return result;
}

}  // namespace absa::augment
