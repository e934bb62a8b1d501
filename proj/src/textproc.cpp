#include "absa/textproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "absa/common.hpp"

namespace absa::text {

namespace {

enum class CharClass { Space, Word, Joiner, Punct };

CharClass classify(char32_t c) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0x00A0 ||
        (c >= 0x2000 && c <= 0x200B) || c == 0x3000) {
        return CharClass::Space;
    }
    if (c == '-' || c == '\'' || c == 0x2019) return CharClass::Joiner;
    if (c < 0x80) {
        bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
        return alnum ? CharClass::Word : CharClass::Punct;
    }
    if ((c >= 0x00A1 && c <= 0x00BF) || c == 0x00D7 || c == 0x00F7 || (c >= 0x2010 && c <= 0x205E) ||
        (c >= 0x20A0 && c <= 0x20CF)) {
        return CharClass::Punct;
    }
    return CharClass::Word;
}

struct CodePoint {
    std::size_t begin;
    std::size_t end;
    CharClass cls;
};

std::vector<std::pair<std::string, std::string>> read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open lexicon " + path.string());
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected surface<TAB>value in " + path.string(), lineno);
        rows.emplace_back(trim(line.substr(0, tab)), trim(line.substr(tab + 1)));
    }
    return rows;
}

}  // namespace

std::string_view pos_name(Pos p) {
    switch (p) {
        case Pos::Noun: return "NOUN";
        case Pos::Propn: return "PROPN";
        case Pos::Verb: return "VERB";
        case Pos::Other: return "OTHER";
    }
    return "OTHER";
}

Pos parse_pos(std::string_view tag) {
    if (tag == "NOUN") return Pos::Noun;
    if (tag == "PROPN") return Pos::Propn;
    if (tag == "VERB") return Pos::Verb;
    return Pos::Other;
}

std::string Token::term() const { return lemma ? *lemma : to_lower(surface); }

bool Token::is_punct() const {
    std::size_t pos = 0;
    while (pos < surface.size()) {
        if (classify(utf8_next(surface, pos)) == CharClass::Word) return false;
    }
    return true;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<CodePoint> cps;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t begin = pos;
        char32_t c = utf8_next(text, pos);
        cps.push_back({begin, pos, classify(c)});
    }

    std::vector<Token> out;
    std::size_t i = 0;
    while (i < cps.size()) {
        CharClass cls = cps[i].cls;
        if (cls == CharClass::Space) {
            ++i;
            continue;
        }
        if (cls == CharClass::Word) {
            std::size_t j = i + 1;
            while (j < cps.size()) {
                if (cps[j].cls == CharClass::Word) {
                    ++j;
                } else if (cps[j].cls == CharClass::Joiner && j + 1 < cps.size() && cps[j + 1].cls == CharClass::Word) {
                    j += 2;
                } else {
                    break;
                }
            }
            std::size_t b = cps[i].begin;
            std::size_t e = cps[j - 1].end;
            out.push_back(Token{std::string(text.substr(b, e - b)), std::nullopt, std::nullopt, b});
            i = j;
            continue;
        }
        // Joiner outside a word, or punctuation: one token per code point.
        std::size_t b = cps[i].begin;
        out.push_back(Token{std::string(text.substr(b, cps[i].end - b)), std::nullopt, std::nullopt, b});
        ++i;
    }
    return out;
}

std::size_t count_tokens(std::string_view text) { return tokenize(text).size(); }

PosLexicon load_pos_lexicon(const std::filesystem::path& path) {
    PosLexicon lex;
    for (auto& [surface, tag] : read_tsv(path)) lex[to_lower(surface)] = parse_pos(tag);
    return lex;
}

LemmaLexicon load_lemma_lexicon(const std::filesystem::path& path) {
    LemmaLexicon lex;
    for (auto& [surface, lemma] : read_tsv(path)) lex[surface] = lemma;
    return lex;
}

std::vector<Token> pos_filter(std::vector<Token> tokens, const PosLexicon& lexicon, bool keep_unknown) {
    std::vector<Token> out;
    out.reserve(tokens.size());
    for (auto& t : tokens) {
        auto it = lexicon.find(to_lower(t.surface));
        if (it == lexicon.end()) {
            if (keep_unknown) {
                t.pos = Pos::Other;
                out.push_back(std::move(t));
            }
            continue;
        }
        t.pos = it->second;
        if (it->second != Pos::Other) out.push_back(std::move(t));
    }
    return out;
}

std::vector<Token> lemmatize(std::vector<Token> tokens, const LemmaLexicon& lexicon) {
    for (auto& t : tokens) {
        auto it = lexicon.find(t.surface);
        if (it == lexicon.end()) it = lexicon.find(to_lower(t.surface));
        t.lemma = it != lexicon.end() ? it->second : to_lower(t.surface);
    }
    return tokens;
}

Preprocessor::Preprocessor(PreprocessConfig config, PosLexicon pos, LemmaLexicon lemmas)
    : config_(config), pos_(std::move(pos)), lemmas_(std::move(lemmas)) {}

std::vector<Token> Preprocessor::tokens(std::string_view text) const {
    auto all = tokenize(text);
    std::vector<Token> toks;
    toks.reserve(all.size());
    for (auto& t : all) {
        if (!t.is_punct()) toks.push_back(std::move(t));
    }
    if (config_.pos_filter) toks = pos_filter(std::move(toks), pos_, config_.keep_unknown);
    if (config_.lemmatize) toks = lemmatize(std::move(toks), lemmas_);
    return toks;
}

std::vector<std::string> Preprocessor::terms(std::string_view text) const {
    std::vector<std::string> out;
    for (const auto& t : tokens(text)) out.push_back(t.term());
    return out;
}

nlohmann::json Preprocessor::to_json() const {
    nlohmann::json pos = nlohmann::json::object();
    for (const auto& [k, v] : pos_) pos[k] = pos_name(v);
    return {
        {"pos_filter", config_.pos_filter},
        {"lemmatize", config_.lemmatize},
        {"keep_unknown", config_.keep_unknown},
        {"pos_lexicon", pos},
        {"lemma_lexicon", lemmas_},
    };
}

Preprocessor Preprocessor::from_json(const nlohmann::json& j) {
    PreprocessConfig cfg;
    cfg.pos_filter = j.at("pos_filter").get<bool>();
    cfg.lemmatize = j.at("lemmatize").get<bool>();
    cfg.keep_unknown = j.at("keep_unknown").get<bool>();
    PosLexicon pos;
    for (const auto& [k, v] : j.at("pos_lexicon").items()) pos[k] = parse_pos(v.get<std::string>());
    auto lemmas = j.at("lemma_lexicon").get<LemmaLexicon>();
    return Preprocessor(cfg, std::move(pos), std::move(lemmas));
}

Preprocessor default_preprocessor(PreprocessConfig config, const std::filesystem::path& data_dir) {
    return Preprocessor(config, load_pos_lexicon(data_dir / "lexicon" / "nl_pos.tsv"),
                        load_lemma_lexicon(data_dir / "lexicon" / "nl_lemma.tsv"));
}

double SparseVector::norm() const {
    double s = 0.0;
    for (const auto& [i, w] : entries) s += w * w;
    return std::sqrt(s);
}

std::vector<double> SparseVector::to_dense() const {
    std::vector<double> out(dimension, 0.0);
    for (const auto& [i, w] : entries) out[i] = w;
    return out;
}

TfIdfModel TfIdfModel::fit(const std::vector<std::vector<std::string>>& docs) {
    if (docs.empty()) throw Error("empty vocabulary");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::set<std::string> seen(doc.begin(), doc.end());
        for (const auto& t : seen) ++df[t];
    }
    if (df.empty()) throw Error("empty vocabulary");

    TfIdfModel m;
    m.doc_count_ = docs.size();
    const double n = static_cast<double>(docs.size());
    for (const auto& [term, count] : df) {
        m.vocabulary_.emplace(term, m.terms_.size());
        m.terms_.push_back(term);
        m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return m;
}

TfIdfModel TfIdfModel::fit(const std::vector<std::vector<Token>>& docs) {
    std::vector<std::vector<std::string>> terms;
    terms.reserve(docs.size());
    for (const auto& d : docs) {
        auto& row = terms.emplace_back();
        for (const auto& t : d) row.push_back(t.term());
    }
    return fit(terms);
}

std::optional<std::size_t> TfIdfModel::index(const std::string& term) const {
    auto it = vocabulary_.find(term);
    if (it == vocabulary_.end()) return std::nullopt;
    return it->second;
}

SparseVector TfIdfModel::transform(const std::vector<std::string>& doc) const {
    std::map<std::size_t, double> counts;
    for (const auto& t : doc) {
        if (auto idx = index(t)) counts[*idx] += 1.0;
    }
    SparseVector v;
    v.dimension = dimension();
    double sq = 0.0;
    for (const auto& [i, c] : counts) {
        double w = c * idf_[i];
        v.entries.emplace_back(i, w);
        sq += w * w;
    }
    if (sq > 0.0) {
        double inv = 1.0 / std::sqrt(sq);
        for (auto& e : v.entries) e.second *= inv;
    }
    return v;
}

SparseVector TfIdfModel::transform(const std::vector<Token>& doc) const {
    std::vector<std::string> terms;
    terms.reserve(doc.size());
    for (const auto& t : doc) terms.push_back(t.term());
    return transform(terms);
}

nlohmann::json TfIdfModel::to_json() const {
    return {
        {"format", "absa-tfidf"},
        {"version", 1},
        {"doc_count", doc_count_},
        {"terms", terms_},
        {"idf", idf_},
        {"config", {{"pos_filter", config.pos_filter}, {"lemmatize", config.lemmatize}, {"keep_unknown", config.keep_unknown}}},
    };
}

TfIdfModel TfIdfModel::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "absa-tfidf" || j.value("version", 0) != 1) {
        throw Error("unsupported tf-idf model file");
    }
    TfIdfModel m;
    m.doc_count_ = j.at("doc_count").get<std::size_t>();
    m.terms_ = j.at("terms").get<std::vector<std::string>>();
    m.idf_ = j.at("idf").get<std::vector<double>>();
    if (m.terms_.size() != m.idf_.size()) throw Error("tf-idf model: terms and idf differ in length");
    for (std::size_t i = 0; i < m.terms_.size(); ++i) m.vocabulary_.emplace(m.terms_[i], i);
    const auto& c = j.at("config");
    m.config.pos_filter = c.at("pos_filter").get<bool>();
    m.config.lemmatize = c.at("lemmatize").get<bool>();
    m.config.keep_unknown = c.at("keep_unknown").get<bool>();
    return m;
}

}  // namespace absa::text
