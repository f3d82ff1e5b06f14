#pragma once

#include "structrag/utilizer.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <exception>
#include <string>

namespace structrag {

// Per-stage defaults: deterministic decoding everywhere except task
// synthesis, which samples for diversity.
std::array<ModelSettings, kStageCount> default_stage_models();

struct PipelineConfig {
    RouterConfig router;
    StructurizerConfig structurizer;
    UtilizerConfig utilizer;
    std::size_t core_budget = kDefaultCoreBudget;
    // false: answer directly over the serialized knowledge base.
    bool use_utilizer = true;
    std::array<ModelSettings, kStageCount> models = default_stage_models();  // indexed by Stage

    const ModelSettings& model(Stage s) const { return models[static_cast<std::size_t>(s)]; }
    ModelSettings& model(Stage s) { return models[static_cast<std::size_t>(s)]; }

    void validate() const;
    bool operator==(const PipelineConfig&) const = default;
};

// Stage timings in milliseconds.
struct StageLatencies {
    double route = 0;
    double structurize = 0;
    double decompose = 0;
    double extract = 0;
    double infer = 0;

    double constructing() const { return route + structurize; }
    double reading() const { return decompose + extract + infer; }
    double total() const { return constructing() + reading(); }

    bool operator==(const StageLatencies&) const = default;
};

struct AnswerTrace {
    RouteDecision route;
    KnowledgeBase knowledge_base;
    std::vector<SubQuestion> sub_questions;  // empty without the utilizer
    std::vector<Evidence> evidence;
    StageLatencies latency;
    bool used_utilizer = true;

    bool operator==(const AnswerTrace&) const = default;
};

struct Answer {
    std::string question;
    std::string text;
    AnswerTrace trace;

    bool operator==(const Answer&) const = default;
};

// Failure of one pipeline stage; wraps the original exception.
class StageError : public Error {
public:
    StageError(std::string stage, std::exception_ptr cause, const std::string& detail);

    const std::string& stage() const noexcept { return stage_; }
    std::exception_ptr cause() const noexcept { return cause_; }

private:
    std::string stage_;
    std::exception_ptr cause_;
};

struct PipelineContext {
    ModelGateway& gateway;
    const PromptLibrary& prompts;
    // Serves the endpoint router backend; defaults to `gateway`.
    ModelGateway* router_gateway = nullptr;
};

// route -> structurize -> decompose -> extract -> infer over `docs`.
// Stage times are read from the gateway's clock.
Answer answer(const std::string& question, const DocumentSet& docs, const PipelineConfig& cfg, PipelineContext ctx);

nlohmann::json to_json(const RouteDecision& d);
nlohmann::json to_json(const Answer& a);

}  // namespace structrag
