#include <filesystem>
#include <map>
#include <string>

#include "absa/common.hpp"
#include "absa/experiment.hpp"
#include "doctest.h"

using namespace absa;
using namespace absa::experiment;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("absa_experiment_" + name);
    fs::remove_all(dir);
    return dir;
}

// A few hundred responses and cheap models: the full stage chain in well under a second.
json small_config() {
    return json::parse(R"({
      "config_version": 1,
      "name": "small",
      "seed": 11,
      "corpus": {"preset": "balanced", "size": 200},
      "cluster": {"k_max": 4, "restarts": 2},
      "augment": {"min_count": 8},
      "models": {
        "aspect": {"mlp": {"epochs": 2}},
        "sentiment": {"mlp": {"epochs": 2}},
        "runs": [
          {"name": "svm", "aspect": "svm_ovr", "sentiment": "svm_linear"},
          {"name": "head", "aspect": "embedding_head", "sentiment": "embedding_head", "augmented": true},
          {"name": "zs", "aspect": "zero_shot", "tune_thresholds": true}
        ]
      }
    })");
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
    return out;
}

std::string config_error(const json& j) {
    try {
        ExperimentConfig::from_json(j).validate();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config parsing is strict") {
    auto base = small_config();
    CHECK(config_error(base) == "");

    auto j = base;
    j["colour"] = "blue";
    CHECK(config_error(j) == "colour: unknown key");
    j = base;
    j["models"]["aspect"]["dropot"] = 0.1;
    CHECK(config_error(j) == "models.aspect.dropot: unknown key");
    j = base;
    j["models"]["runs"][1]["augment"] = true;
    CHECK(config_error(j) == "models.runs[1].augment: unknown key");
    j = base;
    j["corpus"]["size"] = "200";
    CHECK(config_error(j) == "corpus.size: expected a non-negative integer");
    j = base;
    j["seed"] = -1;
    CHECK(config_error(j) == "seed: expected a non-negative integer");
    j = base;
    j["models"]["runs"][0]["aspect"] = "forest";
    CHECK(config_error(j).rfind("models.runs[0].aspect: ", 0) == 0);
    j = base;
    j.erase("config_version");
    CHECK(config_error(j) == "config_version: is required");
    j = base;
    j["config_version"] = 2;
    CHECK(config_error(j) == "config_version: unsupported version 2");
    j = base;
    j["split"]["train"] = 0.9;
    CHECK(config_error(j).rfind("split: ", 0) == 0);
    j = base;
    j["models"]["runs"][1]["name"] = "svm";
    CHECK(config_error(j) == "models: duplicate run name 'svm'");
    j = base;
    j["augment"]["enabled"] = false;
    CHECK(config_error(j) == "models: run 'head' trains on augmented data but augment is disabled");
    j = base;
    j["corpus"]["source"] = "labeled";
    j["corpus"]["input"] = "/nonexistent/labels.jsonl";
    CHECK(config_error(j) == "corpus: input '/nonexistent/labels.jsonl' not found");
}

TEST_CASE("missing augment seed fails validation before any work") {
    auto j = small_config();
    j.erase("seed");
    for (const char* stage : {"corpus", "cluster", "annotation", "split", "models"}) j[stage]["seed"] = 1;
    CHECK(config_error(j) == "augment: seed is required (set augment.seed or a global seed)");

    auto dir = fresh_dir("noseed");
    CHECK_THROWS_AS(run_experiment(ExperimentConfig::from_json(j), dir), ConfigError);
    CHECK_FALSE(fs::exists(dir));

    j["augment"]["enabled"] = false;
    j["models"]["runs"].erase(1);
    CHECK(config_error(j) == "");

    // Deterministic-only model runs need no seed.
    j["models"].erase("seed");
    CHECK(config_error(j) == "");
    j["models"]["runs"].push_back({{"name", "mlp"}, {"aspect", "mlp"}});
    CHECK(config_error(j) == "models: seed is required (set models.seed or a global seed)");
}

TEST_CASE("normalized config and hash") {
    auto c = ExperimentConfig::from_json(small_config());
    auto normal = c.to_json();
    auto again = ExperimentConfig::from_json(normal);
    CHECK(again.to_json() == normal);
    CHECK(again.hash() == c.hash());
    CHECK(c.hash().size() == 16);

    // Spelling out a default does not change the hash; changing a value does.
    auto j = small_config();
    j["augment"]["prob"] = 0.30;
    CHECK(ExperimentConfig::from_json(j).hash() == c.hash());
    j["augment"]["prob"] = 0.31;
    CHECK(ExperimentConfig::from_json(j).hash() != c.hash());

    auto defaults = ExperimentConfig::from_json({{"config_version", 1}, {"seed", 1}});
    REQUIRE(defaults.models.runs.size() == 6);
    CHECK(defaults.models.runs[3].name == "head_da");
    CHECK(defaults.models.runs[3].augmented);
    CHECK(defaults.models.runs[5].tune_thresholds);
    CHECK(defaults.corpus.size == 3000);
    CHECK(defaults.seed_for(std::nullopt) == 1u);
    CHECK(defaults.seed_for(5) == 5u);
}

TEST_CASE("experiment artifacts are stamped, listed and reproducible") {
    auto config = ExperimentConfig::from_json(small_config());
    auto a = fresh_dir("run_a"), b = fresh_dir("run_b");
    auto ra = run_experiment(config, a);
    auto rb = run_experiment(config, b);

    auto ta = tree(a), tb = tree(b);
    CHECK(ta == tb);
    CHECK(ra.artifacts == rb.artifacts);
    CHECK(ra.artifacts.size() == ta.size());
    for (const char* p : {"config.json", "corpus/responses.jsonl", "cluster/report.json", "annotation/agreement.json",
                          "split/test.jsonl", "augment/train.jsonl", "models/svm/aspect.json",
                          "models/head/sentiment.json", "models/zs/aspect.json", "predictions/zs.jsonl",
                          "report.json", "report.txt", "manifest.json"}) {
        CAPTURE(p);
        CHECK(ta.count(p) == 1);
    }
    CHECK(ta.count("models/zs/sentiment.json") == 0);

    auto manifest = json::parse(ta.at("manifest.json"));
    CHECK(manifest.at("status") == "complete");
    CHECK(manifest.at("config_hash") == config.hash());
    CHECK(manifest.at("artifacts").size() + 1 == ta.size());
    for (const auto& e : manifest.at("artifacts")) {
        auto path = e.at("path").get<std::string>();
        CAPTURE(path);
        CHECK(e.at("fnv1a") == hex64(fnv1a(ta.at(path))));
        if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
            auto j = json::parse(ta.at(path));
            CHECK(j.at("stamp").at("config_hash") == config.hash());
        }
    }
    CHECK(json::parse(ta.at("models/svm/aspect.json")).at("stamp").at("seed").is_null());
    CHECK(json::parse(ta.at("models/head/aspect.json")).at("stamp").at("seed") == 11);
    CHECK(ta.at("report.txt").rfind("# config " + config.hash() + " seed 11\n", 0) == 0);

    auto report = eval::Report::from_json(json::parse(ta.at("report.json")));
    CHECK(report.runs == std::vector<std::string>{"svm", "head", "zs"});
    CHECK(report.to_json().dump() == ra.report.to_json().dump());
    auto saved = json::parse(ta.at("config.json"));
    CHECK(saved.at("stamp").at("config_hash") == config.hash());
    saved.erase("stamp");
    CHECK(ExperimentConfig::from_json(saved).hash() == config.hash());

    // Same config into the same directory: nothing changes.
    CHECK_NOTHROW(run_experiment(config, a));
    CHECK(tree(a) == ta);

    // A different config cannot overwrite these artifacts.
    auto j = small_config();
    j["seed"] = 12;
    try {
        run_experiment(ExperimentConfig::from_json(j), a);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage == "config");
    }
    CHECK(tree(a) == ta);
}

TEST_CASE("stage failures keep the artifact trail") {
    auto dir = fresh_dir("failing");
    auto input = fs::temp_directory_path() / "absa_experiment_short.jsonl";
    write_file(input, R"({"id": "a", "text": "Te kort.", "labels": []})" "\n"
                      R"({"id": "b", "text": "Ook te kort.", "labels": []})" "\n");
    auto j = small_config();
    j["corpus"] = {{"source", "labeled"}, {"input", input.string()}};
    auto config = ExperimentConfig::from_json(j);
    try {
        run_experiment(config, dir);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage == "corpus");
        CHECK(std::string(e.what()) == "corpus: no responses left after filtering");
    }
    auto manifest = json::parse(read_file(dir / "manifest.json"));
    CHECK(manifest.at("status") == "failed");
    CHECK(manifest.at("failed_stage") == "corpus");
    std::vector<std::string> listed;
    for (const auto& e : manifest.at("artifacts")) listed.push_back(e.at("path"));
    CHECK(listed.front() == "config.json");
    for (const auto& p : listed) CHECK(fs::exists(dir / p));
}

TEST_CASE("adjudicated labels feed the models when asked") {
    auto j = small_config();
    j["annotation"]["labels"] = "adjudicated";
    j["annotation"]["noise"] = {{"flip_sentiment", 0.5}, {"drop_aspect", 0.0}, {"add_aspect", 0.0}, {"ignore", 0.0}};
    j["cluster"]["enabled"] = false;
    j["augment"]["enabled"] = false;
    j["models"]["runs"] = json::array({{{"name", "svm"}, {"aspect", "svm_ovr"}, {"sentiment", "svm_linear"}}});
    auto dir = fresh_dir("adjudicated");
    run_experiment(ExperimentConfig::from_json(j), dir);
    auto exported = corpus::read_labeled(dir / "annotation/adjudicated.jsonl");
    auto gold = corpus::read_labeled(dir / "corpus/gold.jsonl");
    std::size_t split_total = 0;
    for (const char* part : {"train", "validation", "test"}) {
        split_total += corpus::read_labeled(dir / "split" / (std::string(part) + ".jsonl")).size();
    }
    CHECK(split_total == exported.size());
    // Heavy sentiment noise: the adjudicated labels differ from gold somewhere.
    std::map<std::string, LabelSet> by_id;
    for (const auto& r : gold) by_id[r.response.id] = r.labels;
    std::size_t differ = 0;
    for (const auto& r : exported) differ += r.labels != by_id.at(r.response.id);
    CHECK(differ > 0);
    CHECK_FALSE(fs::exists(dir / "cluster"));
    CHECK_FALSE(fs::exists(dir / "augment"));
}
