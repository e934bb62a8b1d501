#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absa/annotation.hpp"
#include "absa/annotation_service.hpp"
#include "absa/annotation_store.hpp"
#include "absa/augment.hpp"
#include "absa/cluster.hpp"
#include "absa/common.hpp"
#include "absa/corpus.hpp"
#include "absa/evaluate.hpp"
#include "absa/experiment.hpp"
#include "absa/models.hpp"
#include "absa/synthetic.hpp"
#include "absa/textproc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace absa;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

Globals g;

fs::path out_path(const std::string& explicit_path, const std::string& default_name) {
    if (!explicit_path.empty()) return explicit_path;
    return fs::path(g.out_dir) / default_name;
}

void emit(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_once(path, bytes);
    std::cerr << "wrote " << path.string() << "\n";
}

std::uint64_t require_seed(const std::string& command) {
    if (!g.seed) throw ConfigError(command + ": --seed is required");
    return *g.seed;
}

corpus::ResponseSet load_responses(const std::string& path) {
    auto ext = fs::path(path).extension().string();
    return corpus::ingest(path, ext == ".csv" ? corpus::Format::Csv : corpus::Format::Jsonl);
}

annotation::AdjudicationMode parse_mode(const std::string& s) {
    return s == "per_label" ? annotation::AdjudicationMode::PerLabel : annotation::AdjudicationMode::ExactSet;
}

std::shared_ptr<const models::EmbeddingBackend> load_backend(const std::string& spec) {
    return models::make_backend(json::parse(spec));
}

const auto kModes = CLI::IsMember({"exact_set", "per_label"});

void add_ingest(CLI::App& app) {
    auto* cmd = app.add_subcommand("ingest", "Read JSONL or CSV responses and write normalized JSONL");
    static std::string input, format, output;
    cmd->add_option("--input", input, "Response file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", format, "jsonl or csv (default: by extension)")->check(CLI::IsMember({"jsonl", "csv"}));
    cmd->add_option("--output", output, "Output JSONL");
    cmd->callback([] {
        auto fmt = format.empty() ? std::optional<corpus::Format>() : corpus::parse_format(format);
        auto set = fmt ? corpus::ingest(input, *fmt) : load_responses(input);
        emit(out_path(output, "responses.jsonl"), corpus::to_jsonl(set));
        std::cout << set.size() << " responses\n";
    });
}

void add_filter(CLI::App& app) {
    auto* cmd = app.add_subcommand("filter", "Drop responses outside the length bounds");
    static std::string input, output;
    static std::size_t min_tokens = 10, max_chars = 512;
    cmd->add_option("--input", input, "Response file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--min-tokens", min_tokens, "Minimum token count")->capture_default_str();
    cmd->add_option("--max-chars", max_chars, "Maximum length in characters")->capture_default_str();
    cmd->add_option("--output", output, "Output JSONL");
    cmd->callback([] {
        auto set = load_responses(input);
        auto kept = corpus::filter_by_length(set, min_tokens, max_chars);
        emit(out_path(output, "filtered.jsonl"), corpus::to_jsonl(kept));
        std::cout << kept.size() << " kept, " << set.size() - kept.size() << " dropped\n";
    });
}

void add_anonymize(CLI::App& app) {
    auto* cmd = app.add_subcommand("anonymize", "Replace names, emails and addresses; list residual name candidates");
    static std::string input, output, gazetteer = (fs::path(ABSA_DATA_DIR) / "names.txt").string(), review, known;
    cmd->add_option("--input", input, "Response file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--gazetteer", gazetteer, "One name per line")->check(CLI::ExistingFile)->capture_default_str();
    cmd->add_option("--known-words", known, "Words never reported for review, one per line")
        ->check(CLI::ExistingFile);
    cmd->add_option("--output", output, "Output JSONL");
    cmd->add_option("--review", review, "Review candidates JSON");
    cmd->callback([] {
        auto rules = corpus::PseudonymizationRules::with_gazetteer(gazetteer);
        auto set = corpus::pseudonymize(load_responses(input), rules);
        std::set<std::string> words;
        if (!known.empty()) {
            for (const auto& line : split(read_file(known), '\n')) {
                auto w = trim(line);
                if (!w.empty() && w[0] != '#') words.insert(to_lower(w));
            }
        } else {
            for (const auto& [w, tag] : text::load_pos_lexicon(fs::path(ABSA_DATA_DIR) / "lexicon/nl_pos.tsv")) {
                words.insert(to_lower(w));
            }
        }
        auto items = corpus::review_residual_names(set, words, rules);
        json j = json::array();
        for (const auto& it : items) {
            j.push_back({{"id", it.response_id}, {"token", it.token}, {"offset", it.offset}});
            std::cout << it.response_id << "\t" << it.offset << "\t" << it.token << "\n";
        }
        emit(out_path(output, "anonymized.jsonl"), corpus::to_jsonl(set));
        emit(out_path(review, "review.json"), json{{"candidates", j}}.dump(2) + "\n");
        std::cerr << items.size() << " review candidates\n";
    });
}

void add_synth(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Generate a planted corpus with gold labels");
    static std::string preset = "paper", output;
    static std::size_t size = 1500;
    cmd->add_option("--preset", preset, "paper, topics or balanced")->capture_default_str();
    cmd->add_option("--size", size, "Number of responses")->capture_default_str();
    cmd->add_option("--output", output, "Labeled JSONL");
    cmd->callback([] {
        auto corpus = corpus::generate_synthetic_corpus(corpus::SyntheticSpec::preset(preset, size), require_seed("synth"));
        emit(out_path(output, "synthetic.jsonl"), corpus::to_jsonl(corpus.labeled()));
    });
}

void add_split(CLI::App& app) {
    auto* cmd = app.add_subcommand("split", "Stratified train/validation/test split of a labeled file");
    static std::string input;
    static double train = 0.70, validation = 0.15, test = 0.15;
    cmd->add_option("--input", input, "Labeled JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--train", train)->capture_default_str();
    cmd->add_option("--validation", validation)->capture_default_str();
    cmd->add_option("--test", test)->capture_default_str();
    cmd->callback([] {
        auto sp = eval::split(corpus::read_labeled(input), {train, validation, test, require_seed("split"), true});
        for (const auto& w : sp.warnings) std::cerr << "warning: " << w << "\n";
        emit(out_path("", "train.jsonl"), corpus::to_jsonl(sp.train));
        emit(out_path("", "validation.jsonl"), corpus::to_jsonl(sp.validation));
        emit(out_path("", "test.jsonl"), corpus::to_jsonl(sp.test));
    });
}

void add_cluster(CLI::App& app) {
    auto* cmd = app.add_subcommand("cluster", "TF-IDF k-means with elbow selection and top terms per cluster");
    static std::string input, report, table;
    static std::size_t k_min = 2, k_max = 10, top = 5, restarts = 10;
    static bool no_pos_filter = false;
    cmd->add_option("--input", input, "Response file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--k-min", k_min)->capture_default_str();
    cmd->add_option("--k-max", k_max)->capture_default_str();
    cmd->add_option("--top-terms", top)->capture_default_str();
    cmd->add_option("--restarts", restarts)->capture_default_str();
    cmd->add_flag("--no-pos-filter", no_pos_filter, "Keep every word class");
    cmd->add_option("--report", report, "Report JSON");
    cmd->add_option("--table", table, "Top-terms table");
    cmd->callback([] {
        auto seed = require_seed("cluster");
        auto set = load_responses(input);
        text::PreprocessConfig pc{!no_pos_filter, true, false};
        auto pre = text::default_preprocessor(pc);
        std::vector<std::vector<std::string>> docs;
        for (const auto& r : set) docs.push_back(pre.terms(r.text));
        auto tfidf = text::TfIdfModel::fit(docs);
        std::vector<text::SparseVector> vectors;
        for (const auto& d : docs) vectors.push_back(tfidf.transform(d));
        auto curve = cluster::elbow_select_k(vectors, k_min, k_max, seed, {300, restarts});
        auto terms = cluster::top_terms(curve.selected_model(), tfidf, vectors, top);
        auto rendered = cluster::render_top_terms_table(curve.selected_model(), terms);
        emit(out_path(report, "cluster_report.json"), cluster::cluster_report(curve, terms).dump(2) + "\n");
        emit(out_path(table, "cluster_table.txt"), rendered);
        std::cout << "k = " << curve.selected_k << "\n" << rendered;
    });
}

void add_annotate_serve(CLI::App& app) {
    auto* cmd = app.add_subcommand("annotate-serve", "Serve the annotation HTTP API over a campaign log");
    static std::string input, log, host = "127.0.0.1", annotators = "a1,a2,a3,a4", mode = "exact_set", static_dir;
    static int port = 8080;
    static std::size_t copies = 3;
    cmd->add_option("--input", input, "Responses for a new campaign")->check(CLI::ExistingFile);
    cmd->add_option("--log", log, "Campaign event log (replayed when it exists)");
    cmd->add_option("--annotators", annotators, "Comma-separated annotator ids")->capture_default_str();
    cmd->add_option("--copies", copies, "Annotators per response")->capture_default_str();
    cmd->add_option("--mode", mode)->check(kModes)->capture_default_str();
    cmd->add_option("--host", host)->capture_default_str();
    cmd->add_option("--port", port, "0 picks a free port")->capture_default_str();
    cmd->add_option("--static-dir", static_dir, "Annotator UI build served at /");
    cmd->callback([] {
        annotation::AnnotationStore store(out_path(log, "annotations.log"));
        if (!store.has_plan()) {
            if (input.empty()) throw ConfigError("annotate-serve: --input is required to start a campaign");
            auto set = load_responses(input);
            auto plan = annotation::assign(set, split(annotators, ','), copies, require_seed("annotate-serve"));
            store.load_plan(set, plan);
        }
        annotation::ServiceOptions opts{parse_mode(mode), std::nullopt};
        if (!static_dir.empty()) opts.static_dir = static_dir;
        annotation::AnnotationServer server(store, opts);
        int bound = server.bind(host, port);
        std::cout << "listening on http://" << host << ":" << bound << std::endl;
        server.run();
    });
}

void add_adjudicate(CLI::App& app) {
    auto* cmd = app.add_subcommand("adjudicate", "Resolve a campaign log and export labeled responses");
    static std::string log, mode = "exact_set", output;
    cmd->add_option("--log", log, "Campaign event log")->required()->check(CLI::ExistingFile);
    cmd->add_option("--mode", mode)->check(kModes)->capture_default_str();
    cmd->add_option("--output", output, "Labeled JSONL");
    cmd->callback([] {
        annotation::AnnotationStore store{fs::path(log)};
        std::map<std::string, std::size_t> counts;
        for (const auto& o : store.adjudicate(parse_mode(mode))) {
            counts[o.awaiting_fourth ? "pending" : std::string(annotation::resolution_name(o.resolution))]++;
        }
        emit(out_path(output, "adjudicated.jsonl"), corpus::to_jsonl(store.export_labeled(parse_mode(mode))));
        for (const auto& [k, n] : counts) std::cout << k << "\t" << n << "\n";
    });
}

void add_iaa(CLI::App& app) {
    auto* cmd = app.add_subcommand("iaa", "Inter-annotator agreement of a campaign log");
    static std::string log, mode = "exact_set", output;
    cmd->add_option("--log", log, "Campaign event log")->required()->check(CLI::ExistingFile);
    cmd->add_option("--mode", mode)->check(kModes)->capture_default_str();
    cmd->add_option("--output", output, "Agreement JSON");
    cmd->callback([] {
        annotation::AnnotationStore store{fs::path(log)};
        auto report = annotation::agreement_report(store.response_ids(), store.by_response(), parse_mode(mode));
        auto text = report.to_json().dump(2) + "\n";
        emit(out_path(output, "iaa.json"), text);
        std::cout << text;
    });
}

void add_augment(CLI::App& app) {
    auto* cmd = app.add_subcommand("augment", "Oversample rare multi-aspect combinations by word substitution");
    static std::string input, output, summary, provider = "synonym", synonyms, backend = R"({"kind":"hashing"})";
    static std::size_t min_count = 30, max_tokens = 50, min_aspects = 2, top_k = 5;
    static double prob = 0.30;
    cmd->add_option("--input", input, "Labeled training JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--min-count", min_count)->capture_default_str();
    cmd->add_option("--prob", prob)->capture_default_str();
    cmd->add_option("--max-tokens", max_tokens)->capture_default_str();
    cmd->add_option("--min-aspects", min_aspects)->capture_default_str();
    cmd->add_option("--provider", provider)->check(CLI::IsMember({"synonym", "backend"}))->capture_default_str();
    cmd->add_option("--synonyms", synonyms, "Synonym table TSV (default: demo table)")->check(CLI::ExistingFile);
    cmd->add_option("--backend", backend, "Backend JSON for --provider backend")->capture_default_str();
    cmd->add_option("--top-k", top_k)->capture_default_str();
    cmd->add_option("--output", output, "Augmented labeled JSONL");
    cmd->add_option("--summary", summary, "Summary JSON");
    cmd->callback([] {
        augment::AugmentationParams params{min_count, prob, max_tokens, min_aspects, require_seed("augment")};
        auto train = corpus::read_labeled(input);
        std::unique_ptr<augment::SubstitutionProvider> p;
        std::shared_ptr<const models::EmbeddingBackend> be;
        if (provider == "synonym") {
            p = std::make_unique<augment::SynonymProvider>(synonyms.empty() ? augment::SynonymProvider::demo()
                                                                            : augment::SynonymProvider::load(synonyms));
        } else {
            be = load_backend(backend);
            std::set<std::string> vocab;
            for (const auto& r : train) {
                for (const auto& t : text::tokenize(r.response.text)) {
                    if (!t.is_punct()) vocab.insert(to_lower(t.surface));
                }
            }
            p = std::make_unique<augment::BackendProvider>(*be, std::vector<std::string>(vocab.begin(), vocab.end()),
                                                           top_k);
        }
        auto res = augment::run(train, *p, params);
        for (const auto& w : res.summary.warnings) std::cerr << "warning: " << w << "\n";
        emit(out_path(output, "augmented.jsonl"), corpus::to_jsonl(res.data));
        emit(out_path(summary, "augment_summary.json"), res.summary.to_json().dump(2) + "\n");
        std::cout << res.summary.added << " added, " << res.data.size() << " total\n";
    });
}

void add_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train an aspect or sentiment classifier");
    static std::string train, validation, task = "aspect", variant, backend = R"({"kind":"hashing"})", output;
    cmd->add_option("--train", train, "Labeled training JSONL")->check(CLI::ExistingFile);
    cmd->add_option("--task", task)->check(CLI::IsMember({"aspect", "sentiment"}))->capture_default_str();
    cmd->add_option("--variant", variant,
                    "aspect: svm_ovr, mlp, embedding_head, zero_shot; sentiment: svm_linear, mlp, embedding_head")
        ->required();
    cmd->add_option("--validation", validation, "Tune aspect thresholds on this labeled file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--backend", backend, "Embedding backend JSON")->capture_default_str();
    cmd->add_option("--output", output, "Model JSON");
    cmd->callback([] {
        auto be = load_backend(backend);
        std::vector<corpus::LabeledResponse> data;
        if (!train.empty()) data = corpus::read_labeled(train);
        json model;
        if (task == "aspect") {
            models::AspectTrainConfig cfg;
            cfg.variant = models::parse_aspect_variant(variant);
            bool stochastic = cfg.variant == models::AspectVariant::MlpMultiLabel ||
                              cfg.variant == models::AspectVariant::EmbeddingHead;
            cfg.seed = stochastic ? require_seed("train") : g.seed.value_or(0);
            if (cfg.variant != models::AspectVariant::ZeroShot && data.empty()) {
                throw ConfigError("train: --train is required");
            }
            auto clf = cfg.variant == models::AspectVariant::ZeroShot
                           ? models::AspectClassifier::zero_shot(be, cfg.hypotheses, cfg.thresholds)
                           : models::AspectClassifier::train(cfg, data, be);
            if (!validation.empty()) {
                std::vector<models::AspectScores> scores;
                std::vector<LabelSet> gold;
                for (const auto& r : corpus::read_labeled(validation)) {
                    scores.push_back(clf.scores(r.response));
                    gold.push_back(r.labels);
                }
                auto choice = eval::tune_thresholds(scores, gold);
                clf = clf.with_thresholds(choice.thresholds);
                std::cerr << "validation macro F1 " << choice.macro_f1 << "\n";
            }
            for (const auto& w : clf.warnings()) std::cerr << "warning: " << w << "\n";
            model = clf.to_json();
        } else {
            models::SentimentTrainConfig cfg;
            cfg.variant = models::parse_sentiment_variant(variant);
            cfg.seed = cfg.variant != models::SentimentVariant::SvmLinear ? require_seed("train") : g.seed.value_or(0);
            if (data.empty()) throw ConfigError("train: --train is required");
            model = models::SentimentClassifier::train(cfg, data, be).to_json();
        }
        emit(out_path(output, task + "_model.json"), model.dump() + "\n");
    });
}

void add_predict(CLI::App& app) {
    auto* cmd = app.add_subcommand("predict", "Run trained models over a labeled file");
    static std::string aspect_model, sentiment_model, input, backend = R"({"kind":"hashing"})", output;
    cmd->add_option("--aspect-model", aspect_model)->required()->check(CLI::ExistingFile);
    cmd->add_option("--sentiment-model", sentiment_model)->check(CLI::ExistingFile);
    cmd->add_option("--input", input, "Labeled JSONL (gold aspects drive stage-2 scoring)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--backend", backend, "Embedding backend JSON")->capture_default_str();
    cmd->add_option("--output", output, "Predictions JSONL");
    cmd->callback([] {
        auto be = load_backend(backend);
        auto aspect = models::AspectClassifier::from_json(json::parse(read_file(aspect_model)), be);
        std::optional<models::SentimentClassifier> sentiment;
        if (!sentiment_model.empty()) {
            sentiment = models::SentimentClassifier::from_json(json::parse(read_file(sentiment_model)), be);
        }
        auto data = corpus::read_labeled(input);
        std::vector<std::string> ids;
        std::vector<LabelSet> gold;
        eval::Run run{"predict", {}, std::nullopt};
        for (const auto& r : data) {
            ids.push_back(r.response.id);
            gold.push_back(r.labels);
            if (sentiment) {
                run.predicted.push_back(models::pipeline_predict(aspect, *sentiment, r.response).labels);
            } else {
                LabelSet l;
                for (const auto& p : aspect.predict(r.response)) l.set(p.aspect, Sentiment::Negative);
                run.predicted.push_back(l);
            }
        }
        if (sentiment) {
            run.sentiment.emplace();
            for (const auto& [i, p] : eval::gold_pairs(gold)) {
                run.sentiment->push_back(sentiment->predict(data[i].response, p.aspect).sentiment);
            }
        }
        emit(out_path(output, "predictions.jsonl"), eval::predictions_to_jsonl(run, ids, gold));
    });
}

void add_evaluate(CLI::App& app) {
    auto* cmd = app.add_subcommand("evaluate", "Score prediction files against gold labels");
    static std::string gold_path, report;
    static std::vector<std::string> preds;
    cmd->add_option("--gold", gold_path, "Labeled JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--pred", preds, "Prediction JSONL files; the run name is the file stem")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--report", report, "Report JSON");
    cmd->callback([] {
        auto data = corpus::read_labeled(gold_path);
        std::vector<std::string> ids;
        std::vector<LabelSet> gold;
        for (const auto& r : data) {
            ids.push_back(r.response.id);
            gold.push_back(r.labels);
        }
        std::vector<eval::Run> runs;
        for (const auto& p : preds) {
            runs.push_back(eval::read_predictions(read_file(p), fs::path(p).stem().string(), ids, gold));
        }
        auto rep = eval::build_report(runs, gold);
        emit(out_path(report, "report.json"), rep.to_json().dump(2) + "\n");
        std::cout << rep.render_text();
    });
}

void add_report(CLI::App& app) {
    auto* cmd = app.add_subcommand("report", "Render a report JSON as text tables");
    static std::string input;
    cmd->add_option("--input", input, "Report JSON")->required()->check(CLI::ExistingFile);
    cmd->callback([] { std::cout << eval::Report::from_json(json::parse(read_file(input))).render_text(); });
}

void add_run(CLI::App& app) {
    auto* cmd = app.add_subcommand("run", "Run an experiment config end to end into --out-dir");
    cmd->callback([] {
        if (g.config.empty()) throw ConfigError("run: --config is required");
        auto config = experiment::ExperimentConfig::load(g.config);
        if (g.seed) config.seed = g.seed;
        auto result = experiment::run_experiment(config, g.out_dir);
        std::cout << result.report.render_text() << "\nconfig " << result.config_hash << ", "
                  << result.artifacts.size() << " artifacts in " << g.out_dir << "\n";
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aspect-based sentiment analysis of survey responses"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", g.config, "Experiment config JSON")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for stochastic commands (overrides the config's global seed)");
    app.add_option("--out-dir", g.out_dir, "Directory for outputs without an explicit path")->capture_default_str();

    add_ingest(app);
    add_filter(app);
    add_anonymize(app);
    add_synth(app);
    add_split(app);
    add_cluster(app);
    add_annotate_serve(app);
    add_adjudicate(app);
    add_iaa(app);
    add_augment(app);
    add_train(app);
    add_predict(app);
    add_evaluate(app);
    add_report(app);
    add_run(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const experiment::StageError& e) {
        std::cerr << "error in stage " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
