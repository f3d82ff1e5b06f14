// Acceptance suite: one PASS/FAIL line per criterion. Runs entirely on
// scripted backends; tolerances are pinned below.

#include "factory_fixture.hpp"
#include "generators.hpp"
#include "route_oracle.hpp"

#include "structrag/cli.hpp"
#include "structrag/eval.hpp"
#include "structrag/log.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace structrag;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::size_t kRoundTripInstances = 1000;
constexpr double kRoundTripBudgetS = 5.0;
constexpr std::size_t kRouterFuzzCases = 10'000;
constexpr double kDeterminismBudgetS = 10.0;
constexpr std::size_t kCardinalityDocs = 5;
constexpr std::size_t kChunkTriples = 200;
constexpr std::size_t kFactorySeeds = 45;
constexpr std::size_t kFactoryTasksPerSeed = 5;
constexpr std::size_t kFactoryPairs = 900;
constexpr double kLatencyTolerance = 1e-9;

const fs::path kFixtures = STRUCTRAG_TEST_FIXTURES;

// Every trace produced by the suite, for the latency identity check.
std::vector<StageLatencies> g_traces;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Scripted {
    std::shared_ptr<VirtualClock> clock = std::make_shared<VirtualClock>();
    std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>(clock);
    ModelGateway gateway{backend, {}, clock};
    PromptLibrary prompts = PromptLibrary::load(STRUCTRAG_PROMPTS);
    PipelineContext ctx() { return {gateway, prompts}; }
};

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "structrag_acceptance";
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

int run_cli(std::vector<std::string> args, std::string* err_out = nullptr) {
    args.insert(args.begin(), "structrag");
    args.push_back("--quiet");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_out) *err_out = err.str();
    return code;
}

StageLatencies latencies_from_json(const json& trace) {
    const auto& l = trace.at("latency_ms");
    return {l.at("route").get<double>(), l.at("structurize").get<double>(), l.at("decompose").get<double>(),
            l.at("extract").get<double>(), l.at("infer").get<double>()};
}

template <typename T>
std::size_t round_trip_failures(std::size_t n, const std::function<T()>& make,
                                const std::function<T(const std::string&)>& parse) {
    std::size_t failures = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto x = make();
        try {
            if (!(parse(serialize(x)) == x)) ++failures;
        } catch (const std::exception&) {
            ++failures;
        }
    }
    return failures;
}

Outcome format_round_trip() {
    testing::Gen gen(20241015);
    auto t0 = std::chrono::steady_clock::now();
    auto tables = round_trip_failures<TableKnowledge>(
        kRoundTripInstances, [&] { return gen.table(); }, [](const std::string& s) { return parse_table(s); });
    auto graphs = round_trip_failures<GraphKnowledge>(
        kRoundTripInstances, [&] { return gen.graph(); }, [](const std::string& s) { return parse_triples(s); });
    auto catalogues = round_trip_failures<CatalogueKnowledge>(
        kRoundTripInstances, [&] { return gen.catalogue(20); },
        [](const std::string& s) { return parse_catalogue(s); });
    double elapsed = seconds_since(t0);
    std::ostringstream d;
    d << kRoundTripInstances << " each; failures table=" << tables << " graph=" << graphs
      << " catalogue=" << catalogues << "; " << elapsed << " s (budget " << kRoundTripBudgetS << " s)";
    return {tables + graphs + catalogues == 0 && elapsed < kRoundTripBudgetS, d.str()};
}

std::string fuzz_output(testing::Gen& gen) {
    static const std::vector<std::string> parts{
        "table",  "Table",  "TABLES", "graph", "Graphs",   "algorithm", "ALGORITHMS", "catalogue", "Catalog",
        "chunk",  "chunks", "tabled", "graphic", "suitable", "catalogued", "subgraph", "the best is", " ", "\n",
        ".",      ":",      "**",     "`",     "收",        "表格",      "\t",         "-",         "\"", "(",
        ")",      "0",      "type",   "none"};
    std::string s;
    switch (gen.range(0, 2)) {
        case 0:  // random bytes, including NUL and invalid UTF-8
            for (std::size_t n = gen.range(0, 64); n > 0; --n) s += static_cast<char>(gen.range(0, 255));
            break;
        case 1:  // token soup
            for (std::size_t n = gen.range(0, 12); n > 0; --n) s += gen.pick(parts);
            break;
        default:  // plausible reply with noise
            s = gen.pick(parts) + " " + gen.pick(parts) + std::string(gen.range(0, 3), ' ') + gen.pick(parts);
    }
    return s;
}

Outcome router_totality() {
    testing::Gen gen(7);
    std::size_t exceptions = 0, outside = 0, fallbacks = 0, oracle_mismatch = 0;
    for (std::size_t i = 0; i < kRouterFuzzCases; ++i) {
        auto s = fuzz_output(gen);
        try {
            auto r = parse_route_output(s);
            bool known = false;
            for (auto t : kAllStructureTypes) known = known || t == r.type;
            outside += !known;
            fallbacks += r.fallback_applied;
            auto want = testing::route_oracle(s);
            oracle_mismatch += (want.first != r.type || want.second != r.fallback_applied);
        } catch (...) {
            ++exceptions;
        }
    }
    std::ostringstream d;
    d << kRouterFuzzCases << " outputs; exceptions=" << exceptions << " outside-types=" << outside
      << " fallback rate=" << static_cast<double>(fallbacks) / kRouterFuzzCases
      << " oracle mismatches=" << oracle_mismatch;
    return {exceptions == 0 && outside == 0 && oracle_mismatch == 0, d.str()};
}

Outcome pipeline_determinism() {
    auto s = kFixtures / "session";
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> outputs;
    for (int i = 0; i < 2; ++i) {
        auto out = scratch("answer" + std::to_string(i) + ".json");
        std::string err;
        int code = run_cli({"answer", "--corpus", (s / "corpus.jsonl").string(), "--question-file",
                            (s / "question.json").string(), "--scripted", (s / "scripted").string(), "--out",
                            out.string()},
                           &err);
        if (code != 0) return {false, "answer exited " + std::to_string(code) + ": " + err};
        outputs.push_back(slurp(out));
    }
    double elapsed = seconds_since(t0);
    auto j = json::parse(outputs[0]);
    g_traces.push_back(latencies_from_json(j.at("trace")));
    std::ostringstream d;
    d << "two runs, " << outputs[0].size() << " bytes, " << (outputs[0] == outputs[1] ? "identical" : "DIFFERENT")
      << "; " << elapsed << " s (budget " << kDeterminismBudgetS << " s)";
    return {outputs[0] == outputs[1] && !outputs[0].empty() && elapsed < kDeterminismBudgetS, d.str()};
}

Outcome cardinality() {
    std::ostringstream d;
    bool ok = true;
    auto dir = kFixtures / "five_docs";
    auto docs = load_corpus(dir / "corpus.jsonl");
    auto q = load_question(dir / "question.json");
    d << "|K_t|:";
    for (auto t : kAllStructureTypes) {
        Scripted f;
        f.backend->load_dir(dir / "scripted");
        PipelineConfig cfg;
        cfg.router = {RouterBackend::fixed, t, std::nullopt, 5};
        auto a = answer(q.question, docs, cfg, f.ctx());
        g_traces.push_back(a.trace.latency);
        auto n = a.trace.knowledge_base.units.size();
        ok = ok && docs.docs.size() == kCardinalityDocs && n == kCardinalityDocs &&
             a.trace.knowledge_base.structure_type == t;
        d << " " << to_string(t) << "=" << n;
    }
    d << "; fan-out:";
    auto session = kFixtures / "session";
    auto sdocs = load_corpus(session / "corpus.jsonl");
    for (std::size_t n : {1u, 3u, 8u}) {
        Scripted f;
        f.backend->load_dir(session / "scripted");
        std::string list;
        for (std::size_t j = 1; j <= n; ++j) list += std::to_string(j) + ". part " + std::to_string(j) + "?\n";
        f.backend->add_regex_rule(Stage::decompose, ".", {list});
        f.backend->add_default(Stage::extract, {"fact\nSOURCES: acme"});
        auto a = answer("Compare the three companies.", sdocs, {}, f.ctx());
        g_traces.push_back(a.trace.latency);
        auto calls = f.backend->call_count(Stage::extract);
        ok = ok && a.trace.sub_questions.size() == n && calls == n && a.trace.evidence.size() == n;
        d << " n=" << n << "->" << calls;
    }
    return {ok, d.str()};
}

Outcome ablation_equivalence() {
    auto dataset_path = kFixtures / "eval" / "dataset.jsonl";
    auto scripted = kFixtures / "eval" / "scripted";
    auto out = scratch("scorecard_fixed_graph.json");
    std::string err;
    int code = run_cli({"eval", "--dataset", dataset_path.string(), "--mode", "fixed:graph", "--scripted",
                        scripted.string(), "--judge", "none", "--out", out.string()},
                       &err);
    if (code != 0) return {false, "eval exited " + std::to_string(code) + ": " + err};
    auto result = json::parse(slurp(out));

    // Direct runs: same dataset, same fixtures, RouterConfig(fixed, graph).
    Scripted f;
    f.backend->load_dir(scripted);
    PipelineConfig cfg;
    cfg.router = {RouterBackend::fixed, StructureType::graph, std::nullopt, 5};
    auto dataset = load_dataset(dataset_path);
    const auto& records = result.at("records");
    if (records.size() != dataset.size()) return {false, "record count mismatch"};
    std::size_t identical = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto a = answer(dataset[i].question, load_corpus(dataset[i].corpus_path), cfg, f.ctx());
        g_traces.push_back(a.trace.latency);
        auto direct = to_json(a);
        const auto& rec = records[i];
        if (rec.contains("trace")) g_traces.push_back(latencies_from_json(rec.at("trace")));
        identical += rec.value("trace", json()) == direct.at("trace") && rec.at("predicted") == direct.at("answer") &&
                     a.trace.knowledge_base.structure_type == StructureType::graph;
    }
    std::ostringstream d;
    d << identical << "/" << dataset.size() << " records identical to direct fixed:graph runs";
    return {identical == dataset.size(), d.str()};
}

Outcome chunk_reconstruction() {
    testing::Gen gen(77);
    std::size_t failures = 0, chunks_total = 0;
    for (std::size_t i = 0; i < kChunkTriples; ++i) {
        Document d{"d", "", gen.prose(gen.range(1, 12'000))};
        std::size_t size = gen.range(1, 600);
        std::size_t overlap = gen.range(0, size - 1);
        try {
            auto chunks = split_chunks(d, size, overlap);
            chunks_total += chunks.size();
            bool bounded = true;
            for (const auto& c : chunks) bounded = bounded && estimate_tokens(c.text) <= size;
            failures += !(bounded && testing::reconstruct(chunks) == d.body);
        } catch (const std::exception&) {
            ++failures;
        }
    }
    std::ostringstream d;
    d << kChunkTriples << " (body, size, overlap) triples, " << chunks_total << " chunks; failures=" << failures;
    return {failures == 0, d.str()};
}

Outcome em_checks() {
    struct Case {
        const char* predicted;
        const char* gold;
        bool expected;
    };
    const Case cases[] = {
        {"$ 1,308,463", "1308463", true},
        {"$ 1,308,463", "138463", false},
        {"Paris.", "paris", true},
        {"", "paris", false},
    };
    std::size_t passed = 0;
    std::ostringstream d;
    for (const auto& c : cases) {
        bool got = exact_match(c.predicted, c.gold);
        passed += got == c.expected;
        if (got != c.expected) d << " wrong: (\"" << c.predicted << "\", \"" << c.gold << "\")";
    }
    d << " " << passed << "/" << std::size(cases) << " cases";
    return {passed == std::size(cases), d.str().substr(1)};
}

Outcome factory_schema() {
    Scripted f;
    auto seeds = testing::make_seeds(kFactorySeeds);
    testing::script_factory(*f.backend, kFactorySeeds, kFactoryTasksPerSeed);
    FactoryConfig cfg;
    cfg.n_per_seed = kFactoryTasksPerSeed;
    auto result = run_factory(seeds, cfg, {f.gateway, f.prompts}, {});
    auto path = scratch("pairs.jsonl");
    auto written = export_jsonl(result.pairs, path, f.prompts);

    std::size_t valid = 0, lines = 0;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        ++lines;
        try {
            auto j = json::parse(line);
            bool ok = j.at("prompt").is_string() && !j.at("prompt").get<std::string>().empty();
            auto chosen = parse_structure_type(j.at("chosen").get<std::string>());
            auto rejected = parse_structure_type(j.at("rejected").get<std::string>());
            auto lang = j.at("language").get<std::string>();
            ok = ok && chosen && rejected && *chosen != *rejected && (lang == "en" || lang == "zh");
            valid += ok;
        } catch (const std::exception&) {
        }
    }
    bool lossless = import_jsonl(path) == result.pairs;
    std::ostringstream d;
    d << kFactorySeeds << " seeds x " << kFactoryTasksPerSeed << " tasks -> " << written << " pairs exported, "
      << valid << "/" << lines << " valid lines, re-import " << (lossless ? "lossless" : "LOSSY");
    return {written == kFactoryPairs && lines == kFactoryPairs && valid == kFactoryPairs && lossless, d.str()};
}

Outcome latency_accounting() {
    std::size_t violations = 0;
    for (const auto& l : g_traces) violations += l.constructing() + l.reading() != l.total();
    // Reference row: 8.2 minutes constructing, 1.5 minutes reading.
    StageLatencies row{8.2, 0, 1.5, 0, 0};
    auto report = latency_report({row});
    bool row_ok = std::abs(report.constructing - 8.2) <= kLatencyTolerance &&
                  std::abs(report.reading - 1.5) <= kLatencyTolerance &&
                  std::abs(report.total - 9.7) <= kLatencyTolerance;
    std::ostringstream d;
    d << g_traces.size() << " traces, " << violations << " identity violations; 8.2 + 1.5 = " << report.total;
    return {violations == 0 && !g_traces.empty() && row_ok, d.str()};
}

}  // namespace

int main() {
    log::set_level(log::Level::off);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"format round-trip", format_round_trip},
        {"router totality", router_totality},
        {"pipeline determinism", pipeline_determinism},
        {"cardinality invariants", cardinality},
        {"ablation equivalence", ablation_equivalence},
        {"chunk reconstruction", chunk_reconstruction},
        {"EM checks", em_checks},
        {"factory schema", factory_schema},
        {"latency accounting", latency_accounting},  // last: checks traces gathered above
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << " — " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
