#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace absa::text {

enum class Pos { Noun, Propn, Verb, Other };

std::string_view pos_name(Pos p);
/// Accepts NOUN, PROPN, VERB; every other tag maps to Other.
Pos parse_pos(std::string_view tag);

struct Token {
    std::string surface;
    std::optional<std::string> lemma;
    std::optional<Pos> pos;
    /// Byte offset of the surface in the source text.
    std::size_t offset = 0;

    /// The lemma when set, otherwise the lowercased surface.
    std::string term() const;
    bool is_punct() const;
};

/// Splits on whitespace and separates punctuation into single-character
/// tokens. Hyphens and apostrophes between word characters stay inside the
/// word ("e-mail", "zo'n"). Never changes case.
std::vector<Token> tokenize(std::string_view text);

std::size_t count_tokens(std::string_view text);

using PosLexicon = std::map<std::string, Pos>;
using LemmaLexicon = std::map<std::string, std::string>;

/// UTF-8 TSV, `surface<TAB>tag`; surfaces are stored lowercased.
PosLexicon load_pos_lexicon(const std::filesystem::path& path);
/// UTF-8 TSV, `surface<TAB>lemma`.
LemmaLexicon load_lemma_lexicon(const std::filesystem::path& path);

/// Keeps nouns, proper nouns and verbs. Tokens missing from the lexicon are
/// kept (tagged Other) only when keep_unknown is set.
std::vector<Token> pos_filter(std::vector<Token> tokens, const PosLexicon& lexicon, bool keep_unknown);

/// Sets each token's lemma from the lexicon (exact surface first, then the
/// lowercased surface); falls back to the lowercased surface.
std::vector<Token> lemmatize(std::vector<Token> tokens, const LemmaLexicon& lexicon);

struct PreprocessConfig {
    bool pos_filter = false;
    bool lemmatize = true;
    bool keep_unknown = false;

    bool operator==(const PreprocessConfig&) const = default;
};

/// Text to term list: tokenize, drop punctuation, then optional POS filter
/// and lemmatization. Owns its lexicons so models serialize self-contained.
class Preprocessor {
public:
    Preprocessor() = default;
    Preprocessor(PreprocessConfig config, PosLexicon pos, LemmaLexicon lemmas);

    std::vector<Token> tokens(std::string_view text) const;
    std::vector<std::string> terms(std::string_view text) const;

    const PreprocessConfig& config() const { return config_; }

    nlohmann::json to_json() const;
    static Preprocessor from_json(const nlohmann::json& j);

private:
    PreprocessConfig config_;
    PosLexicon pos_;
    LemmaLexicon lemmas_;
};

/// Loads the demo lexicons shipped under data/lexicon.
Preprocessor default_preprocessor(PreprocessConfig config, const std::filesystem::path& data_dir = ABSA_DATA_DIR);

struct SparseVector {
    std::size_t dimension = 0;
    /// Strictly increasing indices, all below dimension.
    std::vector<std::pair<std::size_t, double>> entries;

    double norm() const;
    bool is_zero() const { return entries.empty(); }
    std::vector<double> to_dense() const;
};

class TfIdfModel {
public:
    /// Fits over term lists (lemmas). idf(t) = ln((1 + N) / (1 + df(t))) + 1.
    /// Throws when every document is empty.
    static TfIdfModel fit(const std::vector<std::vector<std::string>>& docs);
    static TfIdfModel fit(const std::vector<std::vector<Token>>& docs);

    /// count x idf, then L2 normalized; out-of-vocabulary terms ignored.
    SparseVector transform(const std::vector<std::string>& doc) const;
    SparseVector transform(const std::vector<Token>& doc) const;

    std::size_t dimension() const { return terms_.size(); }
    std::size_t doc_count() const { return doc_count_; }
    std::optional<std::size_t> index(const std::string& term) const;
    const std::string& term(std::size_t index) const { return terms_.at(index); }
    double idf(std::size_t index) const { return idf_.at(index); }

    PreprocessConfig config;

    nlohmann::json to_json() const;
    static TfIdfModel from_json(const nlohmann::json& j);

private:
    std::map<std::string, std::size_t> vocabulary_;
    std::vector<std::string> terms_;
    std::vector<double> idf_;
    std::size_t doc_count_ = 0;
};

}  // namespace absa::text
