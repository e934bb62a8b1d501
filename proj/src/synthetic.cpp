#include "absa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "absa/common.hpp"
#include "absa/textproc.hpp"

namespace absa::corpus {

namespace {

// Largest-remainder apportionment of `total` over `weights`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
    double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double exact = static_cast<double>(total) * weights[i] / sum;
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];
    return counts;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
}

bool chance(double p, Rng& rng) {
    if (p <= 0.0) return false;
    std::uniform_real_distribution<double> d(0.0, 1.0);
    return d(rng) < p;
}

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

const std::vector<std::string> kStateTemplates = {
    "Ik ben {C} over {K}{X}.",
    "Over {K} ben ik {C}{X}.",
    "Wat betreft {K} ben ik echt {C}{X}.",
};

const std::vector<std::string> kPropertyTemplates = {
    "{K} vind ik {C}{X}.",
    "Ik vind {K} {C}{X}.",
    "Mijn ervaring met {K} is {C}{X}.",
};

std::string aspect_sentence(const SyntheticSpec& spec, Aspect a, Sentiment s, Rng& rng) {
    bool state = chance(0.5, rng);
    const auto& tmpl = pick(state ? kStateTemplates : kPropertyTemplates, rng);
    const auto& cues = state ? (s == Sentiment::Positive ? spec.positive_state_cues : spec.negative_state_cues)
                             : (s == Sentiment::Positive ? spec.positive_property_cues : spec.negative_property_cues);
    std::string clause;
    if (!spec.clauses[index_of(a)].empty() && chance(spec.clause_rate, rng)) {
        clause = ", " + pick(spec.clauses[index_of(a)], rng);
    }
    std::string out = replace_all(tmpl, "{K}", pick(spec.keywords[index_of(a)], rng));
    out = replace_all(out, "{C}", pick(cues, rng));
    out = replace_all(out, "{X}", clause);
    return capitalize(out);
}

std::string make_date(Rng& rng) {
    std::uniform_int_distribution<int> year(2019, 2022);
    std::uniform_int_distribution<int> month(1, 12);
    std::uniform_int_distribution<int> day(1, 28);
    char buf[11];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year(rng), month(rng), day(rng));
    return buf;
}

}  // namespace

SyntheticSpec SyntheticSpec::preset(std::string_view name, std::size_t size) {
    SyntheticSpec s;
    s.keywords = {{
        {"de contactpersoon", "het contact", "de telefoon", "de bereikbaarheid", "de consulent", "de vestiging",
         "het terugbellen", "de intercedent", "de reactietijd", "het aanspreekpunt"},
        {"het rooster", "de planning", "de werktijden", "de diensten", "de uren", "het weekendwerk",
         "de avonddiensten", "de vrije dagen", "de ploegendienst", "het inplannen"},
        {"de afspraken", "het contract", "de overeenkomst", "de evaluatie", "het evaluatiegesprek",
         "de contractverlenging", "de gemaakte afspraken", "het sollicitatiegesprek", "de toezeggingen",
         "de beloftes"},
        {"het salaris", "het loon", "de lonen", "de uitbetaling", "de reiskosten", "de vergoeding", "de loonstrook",
         "de bonus", "de betaling", "de reiskostenvergoeding"},
        {"de persoonlijke aandacht", "de aandacht", "de begeleiding", "de waardering", "de ondersteuning",
         "de betrokkenheid", "de feedback", "de interesse in mij", "de coaching", "de zorg voor mij"},
        {"de communicatie", "de informatie", "de nieuwsbrief", "de berichtgeving", "de updates",
         "de informatievoorziening", "de communicatie over wijzigingen", "het informeren", "de mededelingen",
         "de duidelijkheid over veranderingen"},
    }};
    s.clauses = {{
        {"als ik de vestiging bel", "wanneer ik de consulent wil spreken", "bij vragen aan de contactpersoon"},
        {"als ik de uren van volgende week zie", "wanneer het rooster wordt gemaakt",
         "met de diensten in het weekend"},
        {"over de afspraken uit het evaluatiegesprek", "bij de verlenging van het contract",
         "na de evaluatie"},
        {"bij de uitbetaling van het loon", "met de vergoeding van de reiskosten", "als ik de loonstrook bekijk"},
        {"als ik begeleiding nodig heb", "met aandacht voor mijn ontwikkeling", "bij feedback op mijn werk"},
        {"over wijzigingen in het bedrijf", "bij veranderingen in de organisatie",
         "via de nieuwsbrief en berichten"},
    }};
    s.positive_state_cues = {"tevreden", "blij", "erg tevreden", "heel blij", "zeer tevreden"};
    s.negative_state_cues = {"ontevreden", "teleurgesteld", "erg ontevreden", "boos", "gefrustreerd"};
    s.positive_property_cues = {"goed", "prima", "uitstekend", "fijn", "prettig", "top", "heel goed"};
    s.negative_property_cues = {"slecht", "matig", "waardeloos", "onvoldoende", "rommelig", "traag", "erg slecht"};
    s.background = {
        "Ik werk al twee jaar via het uitzendbureau.",
        "Ik werk nu in een magazijn in de regio.",
        "Mijn collega's komen uit verschillende landen.",
        "Het werk zelf bestaat uit orderpicken en inpakken.",
        "Ik wil graag langer bij dit bedrijf blijven werken.",
        "Ik heb eerder bij een ander bureau gewerkt.",
        "Binnenkort krijg ik nieuwe taken op de afdeling.",
        "Ik maak vaak lange dagen in de productie.",
        "Volgend jaar wil ik een opleiding volgen.",
        "Ik kom elke dag met de fiets naar het werk.",
        "Het bedrijf is de laatste tijd flink gegroeid.",
        "Ik doe dit werk naast mijn studie.",
    };
    s.general_sentiment = {
        "Over het algemeen ben ik tevreden.",
        "Alles is prima geregeld.",
        "Ik heb het erg naar mijn zin.",
        "Het is allemaal matig geregeld.",
        "Over het geheel ben ik ontevreden.",
    };
    s.short_responses = {"Prima.", "Geen opmerkingen.", "Alles goed!", "Niks te melden."};
    s.names = {"Jan", "Piet", "Sanne", "Fleur", "Daan", "Emma", "Lotte", "Bram", "Anouk", "Thijs", "Sophie", "Lars"};
    s.streets = {"Kerkstraat", "Dorpsweg", "Stationslaan", "Molenweg", "Schoolstraat"};
    s.size = size;

    if (name == "paper" || name == "skewed") {
        // Aspect totals and positive counts per aspect (agreements, communication,
        // contact, personal attention, schedule, salary), mapped to enum order.
        s.aspect_weights = {212, 139, 75, 176, 511, 245};
        s.positive_rate = {57.0 / 212, 5.0 / 139, 8.0 / 75, 23.0 / 176, 141.0 / 511, 33.0 / 245};
        s.aspects_per_response = {0.2579, 0.5729, 0.1492, 0.0200};
        s.name_rate = 0.05;
        s.email_rate = 0.02;
        s.address_rate = 0.02;
        s.short_rate = 0.02;
    } else if (name == "topics") {
        s.aspect_weights.fill(1.0);
        s.positive_rate.fill(0.5);
        s.aspects_per_response = {0.0, 1.0};
        s.mentions_per_aspect = 3;
        s.clause_rate = 0.6;
    } else if (name == "balanced") {
        s.aspect_weights.fill(1.0);
        s.positive_rate.fill(0.5);
        s.aspects_per_response = {0.2, 0.5, 0.25, 0.05};
        s.name_rate = 0.05;
        s.email_rate = 0.02;
        s.address_rate = 0.02;
    } else {
        throw ConfigError("unknown synthetic preset '" + std::string(name) + "'");
    }
    return s;
}

void SyntheticSpec::validate() const {
    if (size < 1) throw ConfigError("synthetic corpus size must be at least 1");
    if (mentions_per_aspect < 1) throw ConfigError("mentions_per_aspect must be at least 1");
    for (Aspect a : kAllAspects) {
        if (keywords[index_of(a)].empty()) {
            throw ConfigError("empty keyword list for aspect " + std::string(aspect_name(a)));
        }
        if (aspect_weights[index_of(a)] < 0.0) throw ConfigError("aspect weights must be non-negative");
        double p = positive_rate[index_of(a)];
        if (p < 0.0 || p > 1.0) throw ConfigError("positive rates must lie in [0, 1]");
    }
    if (positive_state_cues.empty() || negative_state_cues.empty() || positive_property_cues.empty() ||
        negative_property_cues.empty()) {
        throw ConfigError("sentiment cue lists must be non-empty");
    }
    if (background.empty()) throw ConfigError("background vocabulary must be non-empty");
    if (aspects_per_response.empty() || aspects_per_response.size() > kNumAspects + 1) {
        throw ConfigError("aspects_per_response needs between 1 and 7 entries");
    }
    double total = std::accumulate(aspects_per_response.begin(), aspects_per_response.end(), 0.0);
    if (total <= 0.0) throw ConfigError("aspects_per_response must have positive mass");
    bool any_weight = std::any_of(aspect_weights.begin(), aspect_weights.end(), [](double w) { return w > 0.0; });
    if (!any_weight && total > aspects_per_response[0]) throw ConfigError("aspect weights are all zero");
    if ((name_rate > 0.0 && names.empty()) || (address_rate > 0.0 && streets.empty())) {
        throw ConfigError("name/street lists required for the configured rates");
    }
}

std::vector<LabeledResponse> SyntheticCorpus::labeled() const {
    std::vector<LabeledResponse> out;
    out.reserve(responses.size());
    for (std::size_t i = 0; i < responses.size(); ++i) out.push_back({responses[i], gold[i], std::nullopt, false});
    return out;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const std::size_t n = spec.size;

    // Aspect counts per response, by quota.
    auto k_counts = apportion(n, spec.aspects_per_response);
    std::vector<std::size_t> k_of;
    for (std::size_t k = 0; k < k_counts.size(); ++k) k_of.insert(k_of.end(), k_counts[k], k);
    std::shuffle(k_of.begin(), k_of.end(), rng);

    // Exact per-aspect instance counts, dealt into response slots.
    std::size_t instances = std::accumulate(k_of.begin(), k_of.end(), std::size_t{0});
    auto per_aspect = apportion(instances, {spec.aspect_weights.begin(), spec.aspect_weights.end()});
    std::vector<Aspect> pool;
    for (Aspect a : kAllAspects) pool.insert(pool.end(), per_aspect[index_of(a)], a);
    std::shuffle(pool.begin(), pool.end(), rng);

    std::vector<std::vector<Aspect>> aspects_of(n);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t slot = 0; slot < k_of[i]; ++slot) {
            auto& mine = aspects_of[i];
            std::size_t j = next;
            while (j < pool.size() && std::find(mine.begin(), mine.end(), pool[j]) != mine.end()) ++j;
            if (j == pool.size()) break;  // only duplicates left; response keeps fewer aspects
            std::swap(pool[next], pool[j]);
            mine.push_back(pool[next++]);
        }
    }

    // Exact per-aspect positive counts.
    std::array<std::vector<std::pair<std::size_t, std::size_t>>, kNumAspects> slots_by_aspect;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < aspects_of[i].size(); ++s) {
            slots_by_aspect[index_of(aspects_of[i][s])].emplace_back(i, s);
        }
    }
    std::vector<std::vector<Sentiment>> sentiment_of(n);
    for (std::size_t i = 0; i < n; ++i) sentiment_of[i].assign(aspects_of[i].size(), Sentiment::Negative);
    for (Aspect a : kAllAspects) {
        auto& slots = slots_by_aspect[index_of(a)];
        std::shuffle(slots.begin(), slots.end(), rng);
        auto positives = static_cast<std::size_t>(std::llround(spec.positive_rate[index_of(a)] * slots.size()));
        for (std::size_t p = 0; p < positives && p < slots.size(); ++p) {
            sentiment_of[slots[p].first][slots[p].second] = Sentiment::Positive;
        }
    }

    const std::vector<std::string> sources = {"brand-a", "brand-b", "brand-c"};
    std::vector<Response> responses;
    std::vector<LabelSet> gold;
    responses.reserve(n);
    gold.reserve(n);
    char idbuf[32];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(idbuf, sizeof idbuf, "r%05zu", i + 1);
        LabelSet labels;
        std::string body;

        if (aspects_of[i].empty() && chance(spec.short_rate, rng) && !spec.short_responses.empty()) {
            body = pick(spec.short_responses, rng);
        } else {
            std::vector<std::string> sentences;
            for (std::size_t s = 0; s < aspects_of[i].size(); ++s) {
                labels.set(aspects_of[i][s], sentiment_of[i][s]);
                for (std::size_t m = 0; m < spec.mentions_per_aspect; ++m) {
                    sentences.push_back(aspect_sentence(spec, aspects_of[i][s], sentiment_of[i][s], rng));
                }
            }
            if (aspects_of[i].empty() && !spec.general_sentiment.empty() && chance(spec.general_sentiment_rate, rng)) {
                sentences.push_back(pick(spec.general_sentiment, rng));
            }
            auto count = [&] {
                std::size_t c = 0;
                for (const auto& s : sentences) c += text::count_tokens(s);
                return c;
            };
            while (sentences.empty() || count() < spec.min_tokens) {
                sentences.push_back(pick(spec.background, rng));
            }
            if (chance(spec.name_rate, rng)) {
                sentences.push_back(pick(spec.names, rng) + " van het bureau weet hiervan.");
            }
            if (chance(spec.email_rate, rng)) {
                sentences.push_back("Reageren kan via " + to_lower(pick(spec.names, rng)) + "@voorbeeld.nl.");
            }
            if (chance(spec.address_rate, rng)) {
                std::uniform_int_distribution<int> num(1, 199);
                sentences.push_back("Ik woon aan de " + pick(spec.streets, rng) + " " + std::to_string(num(rng)) + ".");
            }
            std::shuffle(sentences.begin(), sentences.end(), rng);
            for (const auto& s : sentences) {
                if (!body.empty()) body += ' ';
                body += s;
            }
        }
        std::string source = pick(sources, rng);
        responses.push_back(Response::make(idbuf, std::move(body), std::move(source), make_date(rng)));
        gold.push_back(labels);
    }

    nlohmann::json prov = nlohmann::json::array(
        {{{"step", "synthetic"}, {"seed", seed}, {"size", n}}});
    return {ResponseSet(std::move(responses), std::move(prov)), std::move(gold)};
}

}  // namespace absa::corpus
