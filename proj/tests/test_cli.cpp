#include "structrag/cli.hpp"
#include "structrag/data_factory.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace structrag;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = STRUCTRAG_TEST_FIXTURES;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args, std::map<std::string, std::string> env = {}) {
    args.insert(args.begin(), "structrag");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    EnvLookup lookup = [env](const std::string& name) -> std::optional<std::string> {
        auto it = env.find(name);
        if (it == env.end()) return std::nullopt;
        return it->second;
    };
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err, lookup);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "structrag_test_cli";
    fs::create_directories(dir);
    auto p = dir / name;
    fs::remove(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> session_answer(const fs::path& out) {
    auto s = kFixtures / "session";
    return {"answer", "--corpus", (s / "corpus.jsonl").string(), "--question-file", (s / "question.json").string(),
            "--scripted", (s / "scripted").string(), "--out", out.string()};
}

}  // namespace

TEST_CASE("usage errors exit 2 with help") {
    auto r = run({"answer", "--corpus", "c.jsonl", "--question-file", "q.json", "--frobnicate"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--frobnicate") != std::string::npos);
    CHECK(r.err.find("--question-file") != std::string::npos);  // subcommand help

    CHECK(run({}).code == 2);
    CHECK(run({"transmogrify"}).code == 2);
    CHECK(run({"route", "--corpus", "c.jsonl"}).code == 2);  // missing required flag
    CHECK(run({"eval", "--dataset", "d.jsonl", "--judge", "oracle"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("invalid configuration exits 1 naming the key") {
    auto r = run({"dump-config", "--chunk-size", "64", "--chunk-overlap", "64"});
    CHECK(r.code == 1);
    CHECK(r.err.find("corpus.chunk_overlap") != std::string::npos);

    auto cfg = scratch("bad.toml");
    std::ofstream(cfg) << "[corpus]\nchunk_size = 100\nchunk_overlap = 200\n";
    r = run(session_answer(scratch("unused.json")));
    CHECK(r.code == 0);
    auto args = session_answer(scratch("unused.json"));
    args.insert(args.end(), {"--config", cfg.string()});
    r = run(args);
    CHECK(r.code == 1);
    CHECK(r.err.find("corpus.chunk_overlap") != std::string::npos);

    r = run({"dump-config", "--set", "router.colour=blue"});
    CHECK(r.code == 1);
    CHECK(r.err.find("router.colour") != std::string::npos);
}

TEST_CASE("answer with scripted fixtures writes answer.json") {
    auto out = scratch("answer.json");
    auto r = run(session_answer(out));
    REQUIRE(r.code == 0);
    REQUIRE(fs::exists(out));
    auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["answer"].get<std::string>().find("Globex") == 0);
    CHECK(j["trace"]["route"]["chosen"] == "table");
    CHECK(j["trace"]["knowledge_base"]["units"].size() == 3);
    CHECK(j["trace"]["latency_ms"]["total"] == 6120.0);  // 120 + 4000 + 300 + 1200 + 500

    // Byte-identical on a second run.
    auto again = scratch("answer2.json");
    REQUIRE(run(session_answer(again)).code == 0);
    CHECK(slurp(again) == slurp(out));
}

TEST_CASE("route and structurize print JSON") {
    auto s = kFixtures / "session";
    auto r = run({"route", "--corpus", (s / "corpus.jsonl").string(), "--question-file", (s / "question.json").string(),
                  "--scripted", (s / "scripted").string()});
    REQUIRE(r.code == 0);
    auto d = nlohmann::json::parse(r.out);
    CHECK(d["chosen"] == "table");
    CHECK(d["backend"] == "prompt");

    r = run({"route", "--backend", "fixed", "--fixed-type", "algorithm", "--corpus", (s / "corpus.jsonl").string(),
             "--question-file", (s / "question.json").string()});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["chosen"] == "algorithm");

    auto kb_path = scratch("kb.json");
    r = run({"structurize", "--type", "table", "--corpus", (s / "corpus.jsonl").string(), "--question-file",
             (s / "question.json").string(), "--scripted", (s / "scripted").string(), "--out", kb_path.string()});
    REQUIRE(r.code == 0);
    auto kb = nlohmann::json::parse(slurp(kb_path));
    CHECK(kb["type"] == "table");
    CHECK(kb["units"].size() == 3);
}

TEST_CASE("model calls without an endpoint are a domain error") {
    auto s = kFixtures / "session";
    auto r = run({"route", "--corpus", (s / "corpus.jsonl").string(), "--question-file", (s / "question.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("backend.endpoint") != std::string::npos);
}

TEST_CASE("eval writes a scorecard") {
    auto out = scratch("scorecard.json");
    auto r = run({"eval", "--dataset", (kFixtures / "eval" / "dataset.jsonl").string(), "--scripted",
                  (kFixtures / "eval" / "scripted").string(), "--out", out.string(), "--judge", "none"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["n"] == 4);
    CHECK(j["em_rate"] == 0.75);
    CHECK(j["records"].size() == 4);
    CHECK(nlohmann::json::parse(r.out)["mode"] == "full");

    r = run({"eval", "--dataset", (kFixtures / "eval" / "dataset.jsonl").string(), "--mode", "fixed:tree"});
    CHECK(r.code == 1);
}

TEST_CASE("synth exports preference pairs") {
    auto out = scratch("pairs.jsonl");
    auto r = run({"synth", "--seeds", (kFixtures / "synth" / "seeds.jsonl").string(), "--n-per-seed", "2",
                  "--scripted", (kFixtures / "synth" / "scripted").string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["pairs"] == 4 * 4);
    auto pairs = import_jsonl(out);
    REQUIRE(pairs.size() == 16);
    CHECK(pairs.front().chosen == StructureType::table);
    CHECK(pairs.back().chosen == StructureType::graph);
    CHECK(pairs.back().language == Language::zh);
}

TEST_CASE("version and dump-config") {
    auto r = run({"version"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("structrag 0.1.0\nprompts sha256:", 0) == 0);
    CHECK(r.out.size() == std::string("structrag 0.1.0\nprompts sha256:\n").size() + 64);

    // flags > env > file
    auto cfg_path = scratch("layer.toml");
    std::ofstream(cfg_path) << "[corpus]\ncore_budget = 150\nchunk_size = 300\n[router]\nseed = 3\n";
    r = run({"dump-config", "--config", cfg_path.string(), "--set", "router.seed=9"},
            {{"STRUCTRAG_CORPUS_CORE_BUDGET", "160"}, {"STRUCTRAG_ROUTER_SEED", "5"}});
    REQUIRE(r.code == 0);
    EngineConfig cfg;
    apply_config_text(cfg, r.out);
    CHECK(cfg.pipeline.core_budget == 160);
    CHECK(cfg.pipeline.structurizer.chunk_size == 300);
    CHECK(cfg.pipeline.router.seed == 9u);

    // dump -> load -> dump is stable
    auto dumped = scratch("dumped.toml");
    std::ofstream(dumped) << r.out;
    auto r2 = run({"dump-config", "--config", dumped.string()});
    CHECK(r2.out == r.out);
}
