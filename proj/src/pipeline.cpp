#include "structrag/pipeline.hpp"

#include "structrag/text_util.hpp"

namespace structrag {

namespace {

// Runs one stage, adding its clock time to `slot` and tagging failures.
template <typename Fn>
auto timed(const char* stage, const Clock& clock, double& slot, Fn&& fn) {
    double start = clock.now_ms();
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            slot += clock.now_ms() - start;
        } else {
            auto out = fn();
            slot += clock.now_ms() - start;
            return out;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, std::current_exception(), e.what());
    }
}

}  // namespace

std::array<ModelSettings, kStageCount> default_stage_models() {
    std::array<ModelSettings, kStageCount> m{};
    m[static_cast<std::size_t>(Stage::router)].max_output_tokens = 16;
    m[static_cast<std::size_t>(Stage::structurize)].max_output_tokens = 4096;
    m[static_cast<std::size_t>(Stage::synthesize)].temperature = 0.7;
    return m;
}

void PipelineConfig::validate() const {
    router.validate();
    structurizer.validate();
    utilizer.validate();
    if (core_budget < kMinCoreBudget) {
        throw ConfigError("corpus.core_budget", "must be at least " + std::to_string(kMinCoreBudget));
    }
    for (std::size_t i = 0; i < kStageCount; ++i) {
        const auto& m = models[i];
        std::string stage(to_string(static_cast<Stage>(i)));
        if (m.model.empty()) throw ConfigError("models." + stage, "model name is empty");
        if (m.temperature < 0.0 || m.temperature > 2.0) throw ConfigError("temperature." + stage, "must be within [0, 2]");
        if (m.max_output_tokens <= 0) throw ConfigError("max_tokens." + stage, "must be positive");
    }
}

StageError::StageError(std::string stage, std::exception_ptr cause, const std::string& detail)
    : Error(stage + " stage failed: " + detail), stage_(std::move(stage)), cause_(std::move(cause)) {}

Answer answer(const std::string& question, const DocumentSet& docs, const PipelineConfig& cfg, PipelineContext ctx) {
    cfg.validate();
    if (text::trim(question).empty()) throw ConfigError("question", "question is empty");

    const Clock& clock = ctx.gateway.clock();
    StageContext stage_ctx{ctx.gateway, ctx.prompts};
    StageContext router_ctx{ctx.router_gateway ? *ctx.router_gateway : ctx.gateway, ctx.prompts};

    Answer out;
    out.question = question;
    auto& trace = out.trace;
    auto& lat = trace.latency;
    trace.used_utilizer = cfg.use_utilizer;

    trace.route = timed("route", clock, lat.route, [&] {
        auto core = core_content(docs, cfg.core_budget);
        return route(question, core, cfg.router, router_ctx, cfg.model(Stage::router));
    });
    trace.knowledge_base = timed("structurize", clock, lat.structurize, [&] {
        return structurize_corpus(question, trace.route.chosen, docs, cfg.structurizer, stage_ctx,
                                  cfg.model(Stage::structurize));
    });

    if (!cfg.use_utilizer) {
        out.text = timed("infer", clock, lat.infer,
                         [&] { return infer_direct(question, trace.knowledge_base, stage_ctx, cfg.model(Stage::infer)); });
        return out;
    }

    trace.sub_questions = timed("decompose", clock, lat.decompose, [&] {
        return decompose(question, trace.knowledge_base.overall_description, cfg.utilizer, stage_ctx,
                         cfg.model(Stage::decompose));
    });
    trace.evidence = timed("extract", clock, lat.extract, [&] {
        return extract_all(trace.sub_questions, trace.knowledge_base, cfg.utilizer, stage_ctx, cfg.model(Stage::extract));
    });
    out.text = timed("infer", clock, lat.infer, [&] {
        return infer(question, trace.sub_questions, trace.evidence, stage_ctx, cfg.model(Stage::infer));
    });
    return out;
}

nlohmann::json to_json(const RouteDecision& d) {
    return {{"chosen", to_string(d.chosen)},
            {"backend", to_string(d.backend)},
            {"raw_output", d.raw_output},
            {"fallback_applied", d.fallback_applied}};
}

nlohmann::json to_json(const Answer& a) {
    const auto& t = a.trace;
    auto subs = nlohmann::json::array();
    for (const auto& s : t.sub_questions) subs.push_back({{"index", s.index}, {"text", s.text}});
    auto evidence = nlohmann::json::array();
    for (const auto& e : t.evidence) {
        evidence.push_back({{"sub_index", e.sub_index}, {"text", e.text}, {"sources", e.source_doc_ids}});
    }
    const auto& l = t.latency;
    return {{"question", a.question},
            {"answer", a.text},
            {"trace",
             {{"route", to_json(t.route)},
              {"knowledge_base", to_json(t.knowledge_base)},
              {"used_utilizer", t.used_utilizer},
              {"sub_questions", std::move(subs)},
              {"evidence", std::move(evidence)},
              {"latency_ms",
               {{"route", l.route},
                {"structurize", l.structurize},
                {"decompose", l.decompose},
                {"extract", l.extract},
                {"infer", l.infer},
                {"constructing", l.constructing()},
                {"reading", l.reading()},
                {"total", l.total()}}}}}};
}

}  // namespace structrag
