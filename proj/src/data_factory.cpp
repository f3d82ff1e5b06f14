#include "structrag/data_factory.hpp"

#include "structrag/log.hpp"
#include "structrag/parallel.hpp"
#include "structrag/text_util.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace structrag {

namespace {

using json = nlohmann::json;

std::string fingerprint(std::string_view question, std::string_view core) {
    return text::collapse_whitespace(question) + "\n" + text::collapse_whitespace(core);
}

std::string render_solutions(const std::vector<SimulatedSolution>& solutions) {
    std::string out;
    for (const auto& s : solutions) {
        if (!out.empty()) out += "\n\n";
        out += "Solution using " + std::string(to_string(s.structure_type)) + ":\n" + s.solution_sketch;
    }
    return out;
}

}  // namespace

std::string_view to_string(Language l) noexcept { return l == Language::en ? "en" : "zh"; }

std::optional<Language> parse_language(std::string_view s) noexcept {
    if (s == "en") return Language::en;
    if (s == "zh") return Language::zh;
    return std::nullopt;
}

SynthesisExhausted::SynthesisExhausted(std::string seed_id)
    : Error("could not synthesize a novel task from seed '" + seed_id + "'"), seed_id_(std::move(seed_id)) {}

SimulationFailed::SimulationFailed(std::string task_id, StructureType type, std::exception_ptr cause,
                                   const std::string& detail)
    : Error("simulation failed for task '" + task_id + "', type " + std::string(to_string(type)) + ": " + detail),
      task_id_(std::move(task_id)),
      type_(type),
      cause_(std::move(cause)) {}

void FactoryConfig::validate() const {
    if (n_per_seed == 0) throw ConfigError("factory.n_per_seed", "must be positive");
}

std::vector<SeedTask> load_seeds(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError(CorpusErrorKind::Io, "cannot open seeds file " + path.string());
    std::vector<SeedTask> seeds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        auto where = path.string() + ":" + std::to_string(lineno);
        try {
            auto j = json::parse(line);
            SeedTask s;
            s.id = j.value("id", "seed-" + std::to_string(lineno));
            s.question = j.at("question").get<std::string>();
            s.core_content = j.at("core_content").get<std::string>();
            auto lang = parse_language(j.value("language", "en"));
            if (!lang) throw CorpusError(CorpusErrorKind::MalformedRecord, where + ": language must be en or zh");
            s.language = *lang;
            if (j.contains("type")) s.type = structure_type_from_string(j.at("type").get<std::string>());
            if (text::trim(s.question).empty() || text::trim(s.core_content).empty()) {
                throw CorpusError(CorpusErrorKind::MalformedRecord, where + ": question and core_content are required");
            }
            seeds.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw CorpusError(CorpusErrorKind::MalformedRecord, where + ": " + e.what());
        }
    }
    if (seeds.empty()) throw CorpusError(CorpusErrorKind::EmptyCorpus, "no seeds in " + path.string());
    return seeds;
}

std::optional<std::pair<std::string, std::string>> parse_synthesized(std::string_view reply) {
    std::string s = text::strip_code_fence(reply);
    std::string lower = text::to_lower(s);
    auto q = lower.find("question:");
    auto c = lower.find("core content:");
    if (q == std::string::npos || c == std::string::npos || c < q) return std::nullopt;
    auto question = text::trim(std::string_view(s).substr(q + 9, c - q - 9));
    auto core = text::trim(std::string_view(s).substr(c + 13));
    if (question.empty() || core.empty()) return std::nullopt;
    return std::make_pair(std::string(question), std::string(core));
}

std::vector<SyntheticTask> synthesize_tasks(const std::vector<SeedTask>& seeds, const FactoryConfig& cfg,
                                            StageContext ctx, const ModelSettings& model) {
    cfg.validate();
    std::set<StructureType> covered;
    for (const auto& s : seeds) {
        if (s.type) covered.insert(*s.type);
    }
    if (!covered.empty() && covered.size() < kAllStructureTypes.size()) {
        log::warn("seed tasks do not cover every structure type");
    }
    std::vector<std::vector<SyntheticTask>> per_seed(seeds.size());
    parallel_for(seeds.size(), ctx.gateway.max_in_flight(), [&](std::size_t i) {
        const auto& seed = seeds[i];
        auto prompt = ctx.prompts.get("synthesize").render({{"seed_question", seed.question},
                                                            {"seed_core_content", seed.core_content},
                                                            {"language", std::string(to_string(seed.language))}});
        std::set<std::string> seen{fingerprint(seed.question, seed.core_content)};
        for (std::size_t k = 0; k < cfg.n_per_seed; ++k) {
            bool accepted = false;
            for (std::size_t attempt = 0; attempt <= cfg.max_retries && !accepted; ++attempt) {
                auto reply = ctx.gateway.complete(model.request(Stage::synthesize, i, prompt));
                auto parsed = parse_synthesized(reply.text);
                if (!parsed || !seen.insert(fingerprint(parsed->first, parsed->second)).second) continue;
                per_seed[i].push_back({seed.id + "/" + std::to_string(k + 1), parsed->first, parsed->second,
                                       seed.language, seed.id});
                accepted = true;
            }
            if (!accepted) throw SynthesisExhausted(seed.id);
        }
    });
    std::vector<SyntheticTask> out;
    for (auto& v : per_seed) {
        for (auto& t : v) out.push_back(std::move(t));
    }
    return out;
}

std::vector<SimulatedSolution> simulate_solutions(const SyntheticTask& task, std::size_t task_index, StageContext ctx,
                                                  const ModelSettings& model) {
    std::vector<SimulatedSolution> out;
    for (std::size_t ti = 0; ti < kAllStructureTypes.size(); ++ti) {
        auto type = kAllStructureTypes[ti];
        try {
            auto prompt = ctx.prompts.get("simulate").render({{"question", task.question},
                                                              {"core_content", task.core_content},
                                                              {"structure_type", std::string(to_string(type))}});
            auto reply = ctx.gateway.complete(model.request(Stage::simulate, task_index * 5 + ti, std::move(prompt)));
            out.push_back({task.id, type, std::string(text::trim(reply.text))});
        } catch (const std::exception& e) {
            throw SimulationFailed(task.id, type, std::current_exception(), e.what());
        }
    }
    return out;
}

std::vector<PreferencePair> judge(const SyntheticTask& task, const std::vector<SimulatedSolution>& solutions,
                                  std::size_t task_index, StageContext ctx, const ModelSettings& model) {
    if (solutions.size() != kAllStructureTypes.size()) {
        throw ConfigError("solutions", "expected 5 solutions for task '" + task.id + "', got " +
                                           std::to_string(solutions.size()));
    }
    auto prompt = ctx.prompts.get("judge").render({{"question", task.question},
                                                   {"core_content", task.core_content},
                                                   {"solutions", render_solutions(solutions)}});
    auto reply = ctx.gateway.complete(model.request(Stage::judge, task_index, std::move(prompt)));
    auto verdict = parse_route_output(reply.text);
    if (verdict.fallback_applied) {
        log::warn("skipping task " + task.id + ": judge verdict names no structure type");
        return {};
    }
    std::vector<PreferencePair> pairs;
    for (auto other : kAllStructureTypes) {
        if (other != verdict.type) pairs.push_back({task.question, task.core_content, verdict.type, other, task.language});
    }
    return pairs;
}

FactoryResult run_factory(const std::vector<SeedTask>& seeds, const FactoryConfig& cfg, StageContext ctx,
                          const PipelineConfig& models) {
    FactoryResult result;
    result.tasks = synthesize_tasks(seeds, cfg, ctx, models.model(Stage::synthesize));
    std::vector<std::vector<PreferencePair>> per_task(result.tasks.size());
    parallel_for(result.tasks.size(), ctx.gateway.max_in_flight(), [&](std::size_t i) {
        auto solutions = simulate_solutions(result.tasks[i], i, ctx, models.model(Stage::simulate));
        per_task[i] = judge(result.tasks[i], solutions, i, ctx, models.model(Stage::judge));
    });
    for (auto& p : per_task) {
        if (p.empty()) ++result.skipped_tasks;
        result.pairs.insert(result.pairs.end(), p.begin(), p.end());
    }
    return result;
}

std::size_t export_jsonl(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path,
                         const PromptLibrary& prompts) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ExportIoError("cannot open " + path.string() + " for writing");
    for (const auto& p : pairs) {
        if (p.chosen == p.rejected) throw ConfigError("pairs", "chosen equals rejected for '" + p.question + "'");
        json j{{"prompt", render_router_prompt(prompts, p.question, p.core_content)},
               {"chosen", to_string(p.chosen)},
               {"rejected", to_string(p.rejected)},
               {"language", to_string(p.language)},
               {"question", p.question},
               {"core_content", p.core_content}};
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) throw ExportIoError("write failed for " + path.string());
    return pairs.size();
}

std::vector<PreferencePair> import_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ExportIoError("cannot open " + path.string());
    std::vector<PreferencePair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            PreferencePair p;
            p.question = j.at("question").get<std::string>();
            p.core_content = j.at("core_content").get<std::string>();
            p.chosen = structure_type_from_string(j.at("chosen").get<std::string>());
            p.rejected = structure_type_from_string(j.at("rejected").get<std::string>());
            auto lang = parse_language(j.at("language").get<std::string>());
            if (!lang || p.chosen == p.rejected) throw ExportIoError("invalid pair");
            p.language = *lang;
            pairs.push_back(std::move(p));
        } catch (const std::exception& e) {
            throw ExportIoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return pairs;
}

}  // namespace structrag
