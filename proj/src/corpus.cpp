#include "absa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "absa/common.hpp"
#include "absa/textproc.hpp"

namespace absa::corpus {

using nlohmann::json;

Response Response::make(std::string id, std::string text, std::string source, std::string recorded_at) {
    Response r;
    r.id = std::move(id);
    r.source = std::move(source);
    r.recorded_at = std::move(recorded_at);
    r.set_text(std::move(text));
    return r;
}

void Response::set_text(std::string new_text) {
    text = std::move(new_text);
    token_count = text::count_tokens(text);
    char_count = utf8_length(text);
}

ResponseSet::ResponseSet(std::vector<Response> responses, json provenance)
    : responses_(std::move(responses)), provenance_(std::move(provenance)) {
    std::unordered_set<std::string> seen;
    for (const auto& r : responses_) {
        if (!seen.insert(r.id).second) throw Error("duplicate response id '" + r.id + "'");
    }
    if (!provenance_.is_array()) throw Error("provenance must be an array");
}

const Response* ResponseSet::find(std::string_view id) const {
    for (const auto& r : responses_) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

ResponseSet ResponseSet::with_step(json step) const {
    auto prov = provenance_;
    prov.push_back(std::move(step));
    return ResponseSet(responses_, std::move(prov));
}

std::optional<Format> parse_format(std::string_view name) {
    if (name == "jsonl") return Format::Jsonl;
    if (name == "csv") return Format::Csv;
    return std::nullopt;
}

namespace {

std::string optional_string(const json& obj, const char* key) {
    if (!obj.contains(key) || obj.at(key).is_null()) return "";
    if (!obj.at(key).is_string()) throw Error(std::string("field '") + key + "' must be a string");
    return obj.at(key).get<std::string>();
}

void check_unique(const std::vector<Response>& rs) {
    std::unordered_set<std::string> seen;
    for (const auto& r : rs) {
        if (!seen.insert(r.id).second) throw Error("duplicate response id '" + r.id + "'");
    }
}

// RFC 4180 records; returns (start line, fields) pairs.
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(std::string_view s) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_line = 1;

    auto end_field = [&] {
        fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        bool blank = fields.size() == 1 && fields[0].empty();
        if (!blank) rows.emplace_back(record_line, std::move(fields));
        fields.clear();
    };

    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < s.size() && s[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started && field.empty()) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            continue;
        } else if (c == '\n') {
            end_record();
            ++line;
            record_line = line;
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field", record_line);
    if (!field.empty() || !fields.empty()) end_record();
    return rows;
}

}  // namespace

ResponseSet ingest_jsonl(std::string_view content, const std::string& origin) {
    std::vector<Response> out;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!obj.is_object()) throw ParseError("record is not an object", lineno);
        for (const char* key : {"id", "text"}) {
            if (!obj.contains(key) || !obj.at(key).is_string()) {
                throw ParseError(std::string("missing required string field '") + key + "'", lineno);
            }
        }
        try {
            out.push_back(Response::make(obj.at("id").get<std::string>(), obj.at("text").get<std::string>(),
                                         optional_string(obj, "source"), optional_string(obj, "recorded_at")));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    check_unique(out);
    return ResponseSet(std::move(out), json::array({{{"step", "ingest"}, {"source", origin}, {"format", "jsonl"}}}));
}

ResponseSet ingest_csv(std::string_view content, const std::string& origin) {
    auto rows = parse_csv(content);
    if (rows.empty()) throw ParseError("missing header row", 1);
    const auto& header = rows.front().second;
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) return i;
        }
        return std::nullopt;
    };
    auto id_col = column("id");
    auto text_col = column("text");
    if (!id_col || !text_col) throw ParseError("header must name id and text columns", rows.front().first);
    auto source_col = column("source");
    auto date_col = column("recorded_at");

    std::vector<Response> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [lineno, fields] = rows[r];
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno);
        }
        if (fields[*id_col].empty()) throw ParseError("missing required field 'id'", lineno);
        auto get = [&](std::optional<std::size_t> c) { return c ? fields[*c] : std::string(); };
        out.push_back(Response::make(fields[*id_col], fields[*text_col], get(source_col), get(date_col)));
    }
    check_unique(out);
    return ResponseSet(std::move(out), json::array({{{"step", "ingest"}, {"source", origin}, {"format", "csv"}}}));
}

ResponseSet ingest(const std::filesystem::path& path, Format format) {
    auto content = read_file(path);
    return format == Format::Jsonl ? ingest_jsonl(content, path.string()) : ingest_csv(content, path.string());
}

json to_json(const Response& r) {
    return {{"id", r.id}, {"text", r.text}, {"source", r.source}, {"recorded_at", r.recorded_at}};
}

std::string to_jsonl(const ResponseSet& set) {
    std::string out;
    for (const auto& r : set) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

ResponseSet filter_by_length(const ResponseSet& set, std::size_t min_tokens, std::size_t max_chars) {
    if (min_tokens < 1 || max_chars < 1) throw Error("filter_by_length: bounds must be at least 1");
    std::vector<Response> kept;
    std::size_t too_short = 0;
    std::size_t too_long = 0;
    for (const auto& r : set) {
        bool short_fail = r.token_count < min_tokens;
        bool long_fail = r.char_count > max_chars;
        too_short += short_fail;
        too_long += long_fail;
        if (!short_fail && !long_fail) kept.push_back(r);
    }
    auto prov = set.provenance();
    prov.push_back({{"step", "filter_by_length"},
                    {"min_tokens", min_tokens},
                    {"max_chars", max_chars},
                    {"removed_min_tokens", too_short},
                    {"removed_max_chars", too_long},
                    {"retained", kept.size()}});
    return ResponseSet(std::move(kept), std::move(prov));
}

void PseudonymizationRules::validate() const {
    for (const char* cat : {"person", "email", "address"}) {
        auto it = replacements.find(cat);
        if (it == replacements.end() || it->second.empty()) {
            throw ConfigError(std::string("placeholder for '") + cat + "' must be non-empty");
        }
    }
    std::regex email;
    std::regex address;
    try {
        email = std::regex(email_pattern);
        address = std::regex(address_pattern);
    } catch (const std::regex_error& e) {
        throw ConfigError(std::string("pattern does not compile: ") + e.what());
    }
    for (const auto& [cat, placeholder] : replacements) {
        if (name_gazetteer.count(placeholder) || std::regex_search(placeholder, email) ||
            std::regex_search(placeholder, address)) {
            throw ConfigError("placeholder '" + placeholder + "' matches a pseudonymization rule");
        }
    }
}

PseudonymizationRules PseudonymizationRules::with_gazetteer(const std::filesystem::path& path) {
    PseudonymizationRules rules;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        auto name = trim(line);
        if (!name.empty() && name[0] != '#') rules.name_gazetteer.insert(name);
    }
    return rules;
}

Pseudonymizer::Pseudonymizer(PseudonymizationRules rules) : rules_(std::move(rules)) {
    rules_.validate();
    email_ = std::regex(rules_.email_pattern);
    address_ = std::regex(rules_.address_pattern);
}

std::string Pseudonymizer::apply(std::string_view text) const {
    std::string s = std::regex_replace(std::string(text), email_, rules_.replacements.at("email"));
    s = std::regex_replace(s, address_, rules_.replacements.at("address"));

    const auto& person = rules_.replacements.at("person");
    std::string out;
    std::size_t cursor = 0;
    for (const auto& tok : text::tokenize(s)) {
        if (!rules_.name_gazetteer.count(tok.surface)) continue;
        out.append(s, cursor, tok.offset - cursor);
        out += person;
        cursor = tok.offset + tok.surface.size();
    }
    out.append(s, cursor, std::string::npos);
    return out;
}

Response Pseudonymizer::operator()(const Response& r) const {
    Response out = r;
    out.set_text(apply(r.text));
    return out;
}

std::size_t Pseudonymizer::residual_matches(std::string_view text) const {
    std::string s(text);
    std::size_t n = 0;
    n += static_cast<std::size_t>(std::distance(std::sregex_iterator(s.begin(), s.end(), email_), std::sregex_iterator()));
    n += static_cast<std::size_t>(
        std::distance(std::sregex_iterator(s.begin(), s.end(), address_), std::sregex_iterator()));
    for (const auto& tok : text::tokenize(s)) n += rules_.name_gazetteer.count(tok.surface);
    return n;
}

Response pseudonymize(const Response& response, const PseudonymizationRules& rules) {
    return Pseudonymizer(rules)(response);
}

ResponseSet pseudonymize(const ResponseSet& set, const PseudonymizationRules& rules) {
    Pseudonymizer p(rules);
    std::vector<Response> out;
    out.reserve(set.size());
    std::size_t changed = 0;
    for (const auto& r : set) {
        out.push_back(p(r));
        changed += out.back().text != r.text;
    }
    auto prov = set.provenance();
    prov.push_back({{"step", "pseudonymize"},
                    {"gazetteer_size", rules.name_gazetteer.size()},
                    {"responses_changed", changed}});
    return ResponseSet(std::move(out), std::move(prov));
}

std::vector<ReviewItem> review_residual_names(const ResponseSet& set, const std::set<std::string>& known_words,
                                              const PseudonymizationRules& rules) {
    std::set<std::string> placeholders;
    for (const auto& [cat, p] : rules.replacements) placeholders.insert(p);

    std::vector<ReviewItem> items;
    for (const auto& r : set) {
        bool sentence_start = true;
        for (const auto& tok : text::tokenize(r.text)) {
            if (tok.is_punct()) {
                if (tok.surface == "." || tok.surface == "!" || tok.surface == "?") sentence_start = true;
                continue;
            }
            bool capital = tok.surface[0] >= 'A' && tok.surface[0] <= 'Z';
            if (capital && !sentence_start && !placeholders.count(tok.surface) &&
                !known_words.count(to_lower(tok.surface))) {
                items.push_back({r.id, tok.surface, tok.offset});
            }
            sentence_start = false;
        }
    }
    return items;
}

json to_json(const LabeledResponse& r) {
    json j = to_json(r.response);
    j["labels"] = absa::to_json(r.labels);
    if (r.augmented_from) j["augmented_from"] = *r.augmented_from;
    if (r.noop_augmentation) j["noop_augmentation"] = true;
    return j;
}

LabeledResponse labeled_from_json(const json& j) {
    LabeledResponse out;
    if (!j.contains("id") || !j.contains("text")) throw Error("labeled record needs id and text");
    out.response = Response::make(j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                                  optional_string(j, "source"), optional_string(j, "recorded_at"));
    out.labels = j.contains("labels") ? label_set_from_json(j.at("labels")) : LabelSet{};
    if (j.contains("augmented_from")) out.augmented_from = j.at("augmented_from").get<std::string>();
    out.noop_augmentation = j.value("noop_augmentation", false);
    return out;
}

std::string to_jsonl(const std::vector<LabeledResponse>& set) {
    std::string out;
    for (const auto& r : set) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<LabeledResponse> read_labeled_jsonl(std::string_view content) {
    std::vector<LabeledResponse> out;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(labeled_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return out;
}

std::vector<LabeledResponse> read_labeled(const std::filesystem::path& path) {
    return read_labeled_jsonl(read_file(path));
}

}  // namespace absa::corpus
