#include "structrag/cli.hpp"

#include "structrag/data_factory.hpp"
#include "structrag/eval.hpp"
#include "structrag/http_backend.hpp"
#include "structrag/log.hpp"
#include "structrag/scripted_backend.hpp"
#include "structrag/text_util.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>

namespace structrag::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Stands in for the model server when none is configured, so commands that
// never call a model (fixed routing, chunk structurizing) still work.
class UnconfiguredBackend final : public ChatBackend {
public:
    ChatResponse complete(const ChatRequest&) override {
        throw ConfigError("backend.endpoint", "no model endpoint configured (set it, or pass --scripted DIR)");
    }
};

struct Options {
    std::string config_file;
    std::string scripted_dir;
    std::string prompt_dir;
    std::string endpoint;
    std::vector<std::string> sets;
    std::optional<std::size_t> chunk_size, chunk_overlap, core_budget;
    int verbosity = 0;
    bool quiet = false;

    // route
    std::string backend, fixed_type;
    std::optional<std::uint64_t> seed;
    // structurize
    std::string type;
    // shared by subcommands
    std::string corpus, question_file, dataset, mode = "full", judge = "rule", seeds;
    std::string route_out, structurize_out;  // empty -> stdout
    std::string answer_out = "answer.json", eval_out = "scorecard.json", synth_out = "pairs.jsonl";
    std::optional<std::size_t> n_per_seed;
};

struct Engine {
    EngineConfig cfg;
    PromptLibrary prompts;
    std::shared_ptr<ModelGateway> gateway;
    std::shared_ptr<ModelGateway> router_gateway;

    PipelineContext pipeline_ctx() { return {*gateway, prompts, router_gateway.get()}; }
    StageContext stage_ctx() { return {*gateway, prompts}; }
};

EngineConfig resolve_config(const Options& o, const EnvLookup& env) {
    EngineConfig cfg;
    if (!o.config_file.empty()) apply_config_file(cfg, o.config_file);
    apply_env(cfg, env);

    if (!o.endpoint.empty()) cfg.endpoint = o.endpoint;
    if (!o.prompt_dir.empty()) cfg.prompt_dir = o.prompt_dir;
    if (o.chunk_size) cfg.pipeline.structurizer.chunk_size = *o.chunk_size;
    if (o.chunk_overlap) cfg.pipeline.structurizer.chunk_overlap = *o.chunk_overlap;
    if (o.core_budget) cfg.pipeline.core_budget = *o.core_budget;
    if (!o.backend.empty()) set_config_value(cfg, "router.backend", o.backend);
    if (!o.fixed_type.empty()) {
        set_config_value(cfg, "router.fixed_type", o.fixed_type);
        if (o.backend.empty()) cfg.pipeline.router.backend = RouterBackend::fixed;
    }
    if (o.seed) cfg.pipeline.router.seed = *o.seed;
    if (o.n_per_seed) cfg.factory.n_per_seed = *o.n_per_seed;
    for (const auto& s : o.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(s, "--set expects section.key=value");
        set_config_value(cfg, text::trim(std::string_view(s).substr(0, eq)), text::trim(std::string_view(s).substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

Engine make_engine(EngineConfig cfg, const Options& o, const EnvLookup& env) {
    auto prompts = PromptLibrary::load(cfg.prompt_dir.empty() ? default_prompt_dir() : fs::path(cfg.prompt_dir));

    GatewayOptions gw;
    gw.retry.max_attempts = cfg.retry_attempts;
    gw.retry.base_delay = std::chrono::milliseconds(cfg.retry_base_ms);
    gw.max_in_flight = cfg.max_in_flight;

    Engine e{std::move(cfg), std::move(prompts), nullptr, nullptr};
    if (!o.scripted_dir.empty()) {
        auto clock = std::make_shared<VirtualClock>();
        auto backend = std::make_shared<ScriptedBackend>(clock);
        backend->load_dir(o.scripted_dir);
        gw.sleeper = [](std::chrono::milliseconds) {};
        e.gateway = std::make_shared<ModelGateway>(backend, gw, clock);
        return e;
    }

    std::string api_key;
    if (!e.cfg.api_key_env.empty()) api_key = env(e.cfg.api_key_env).value_or("");
    auto http = [&](const std::string& endpoint) -> std::shared_ptr<ChatBackend> {
        if (endpoint.empty()) return std::make_shared<UnconfiguredBackend>();
        return std::make_shared<HttpBackend>(HttpBackendOptions{endpoint, api_key, std::chrono::seconds(e.cfg.timeout_s)});
    };
    auto clock = std::make_shared<SteadyClock>();
    e.gateway = std::make_shared<ModelGateway>(http(e.cfg.endpoint), gw, clock);
    if (!e.cfg.router_endpoint.empty()) {
        e.router_gateway = std::make_shared<ModelGateway>(http(e.cfg.router_endpoint), gw, clock);
    }
    return e;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text) || !f.flush()) throw Error("cannot write " + path);
    log::info("wrote " + path);
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

int cmd_route(Engine& e, const Options& o, std::ostream& out) {
    auto q = load_question(o.question_file);
    auto docs = load_corpus(o.corpus);
    auto core = core_content(docs, e.cfg.pipeline.core_budget);
    ModelGateway& gw = e.router_gateway ? *e.router_gateway : *e.gateway;
    auto d = route(q.question, core, e.cfg.pipeline.router, {gw, e.prompts}, e.cfg.pipeline.model(Stage::router));
    emit(pretty(to_json(d)), o.route_out, out);
    return 0;
}

int cmd_structurize(Engine& e, const Options& o, std::ostream& out) {
    auto t = structure_type_from_string(o.type);
    auto q = load_question(o.question_file);
    auto docs = load_corpus(o.corpus);
    auto kb = structurize_corpus(q.question, t, docs, e.cfg.pipeline.structurizer, e.stage_ctx(),
                                 e.cfg.pipeline.model(Stage::structurize));
    emit(pretty(to_json(kb)), o.structurize_out, out);
    return 0;
}

int cmd_answer(Engine& e, const Options& o, std::ostream& out) {
    auto q = load_question(o.question_file);
    auto docs = load_corpus(o.corpus);
    auto a = answer(q.question, docs, e.cfg.pipeline, e.pipeline_ctx());
    emit(pretty(to_json(a)), o.answer_out, out);
    if (!o.answer_out.empty() && o.answer_out != "-") out << a.text << "\n";
    return 0;
}

int cmd_eval(Engine& e, const Options& o, std::ostream& out) {
    auto mode = EvalMode::parse(o.mode);
    auto dataset = load_dataset(o.dataset);
    std::unique_ptr<Judge> judge;
    if (o.judge == "rule") {
        judge = std::make_unique<RuleJudge>();
    } else if (o.judge == "llm") {
        judge = std::make_unique<LlmJudge>(e.stage_ctx(), e.cfg.pipeline.model(Stage::judge));
    }
    auto result = run_eval(dataset, mode, e.cfg.pipeline, e.pipeline_ctx(), judge.get());
    emit(pretty(to_json(result)), o.eval_out, out);
    if (!o.eval_out.empty() && o.eval_out != "-") out << pretty(to_json(result.scorecard));
    return 0;
}

int cmd_synth(Engine& e, const Options& o, std::ostream& out) {
    auto seeds = load_seeds(o.seeds);
    auto result = run_factory(seeds, e.cfg.factory, e.stage_ctx(), e.cfg.pipeline);
    auto written = export_jsonl(result.pairs, o.synth_out, e.prompts);
    out << pretty(json{{"seeds", seeds.size()},
                       {"tasks", result.tasks.size()},
                       {"pairs", written},
                       {"skipped_tasks", result.skipped_tasks},
                       {"out", o.synth_out}});
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    Options o;
    CLI::App app{"Structure-aware retrieval-augmented question answering", "structrag"};
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--config", o.config_file, "Engine config file (TOML)");
    app.add_option("--scripted", o.scripted_dir, "Serve model calls from scripted fixtures in DIR (no network)");
    app.add_option("--prompts", o.prompt_dir, "Prompt template directory");
    app.add_option("--endpoint", o.endpoint, "OpenAI-compatible model endpoint");
    app.add_option("--set", o.sets, "Override a config key: section.key=value")->take_all();
    app.add_option("--chunk-size", o.chunk_size, "Chunk size in tokens");
    app.add_option("--chunk-overlap", o.chunk_overlap, "Chunk overlap in tokens");
    app.add_option("--core-budget", o.core_budget, "Per-document core content budget in tokens");
    app.add_flag("-v,--verbose", o.verbosity, "More logging (repeatable)");
    app.add_flag("-q,--quiet", o.quiet, "Only log errors");

    auto* route_cmd = app.add_subcommand("route", "Choose a structure type for a question");
    route_cmd->add_option("--question-file", o.question_file)->required();
    route_cmd->add_option("--corpus", o.corpus)->required();
    route_cmd->add_option("--backend", o.backend)->check(CLI::IsMember({"prompt", "endpoint", "random", "fixed"}));
    route_cmd->add_option("--fixed-type", o.fixed_type);
    route_cmd->add_option("--seed", o.seed);
    route_cmd->add_option("--out", o.route_out, "Output file (default stdout)");

    auto* structurize_cmd = app.add_subcommand("structurize", "Build a knowledge base of one structure type");
    structurize_cmd->add_option("--type", o.type)->required();
    structurize_cmd->add_option("--corpus", o.corpus)->required();
    structurize_cmd->add_option("--question-file", o.question_file)->required();
    structurize_cmd->add_option("--out", o.structurize_out, "Output file (default stdout)");

    auto* answer_cmd = app.add_subcommand("answer", "Answer a question over a corpus");
    answer_cmd->add_option("--corpus", o.corpus)->required();
    answer_cmd->add_option("--question-file", o.question_file)->required();
    answer_cmd->add_option("--out", o.answer_out, "Output file")->capture_default_str();

    auto* eval_cmd = app.add_subcommand("eval", "Score the pipeline on a dataset");
    eval_cmd->add_option("--dataset", o.dataset)->required();
    eval_cmd->add_option("--mode", o.mode, "full | random-router | fixed:<type> | no-utilizer")->capture_default_str();
    eval_cmd->add_option("--judge", o.judge, "none | rule | llm")
        ->check(CLI::IsMember({"none", "rule", "llm"}))
        ->capture_default_str();
    eval_cmd->add_option("--out", o.eval_out, "Output file")->capture_default_str();

    auto* synth_cmd = app.add_subcommand("synth", "Generate router preference pairs from seed tasks");
    synth_cmd->add_option("--seeds", o.seeds)->required();
    synth_cmd->add_option("--n-per-seed", o.n_per_seed);
    synth_cmd->add_option("--out", o.synth_out, "Output JSONL")->capture_default_str();

    auto* version_cmd = app.add_subcommand("version", "Print version and prompt checksum");
    auto* dump_cmd = app.add_subcommand("dump-config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return 0;
    } catch (const CLI::ParseError& e) {
        // Usage errors print the help of the subcommand being parsed.
        err << "error: " << e.what() << "\n";
        auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    log::set_level(o.quiet ? log::Level::error
                   : o.verbosity >= 2 ? log::Level::debug
                   : o.verbosity == 1 ? log::Level::info
                                      : log::Level::warn);

    try {
        auto cfg = resolve_config(o, env);
        if (dump_cmd->parsed()) {
            out << dump_config(cfg);
            return 0;
        }
        auto engine = make_engine(std::move(cfg), o, env);
        if (version_cmd->parsed()) {
            out << "structrag " << kVersion << "\n" << "prompts sha256:" << engine.prompts.checksum() << "\n";
            return 0;
        }
        if (route_cmd->parsed()) return cmd_route(engine, o, out);
        if (structurize_cmd->parsed()) return cmd_structurize(engine, o, out);
        if (answer_cmd->parsed()) return cmd_answer(engine, o, out);
        if (eval_cmd->parsed()) return cmd_eval(engine, o, out);
        if (synth_cmd->parsed()) return cmd_synth(engine, o, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace structrag::cli
