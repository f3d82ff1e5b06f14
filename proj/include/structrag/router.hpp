#pragma once

#include "structrag/corpus.hpp"
#include "structrag/gateway.hpp"
#include "structrag/knowledge_formats.hpp"
#include "structrag/prompt_template.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace structrag {

enum class RouterBackend { endpoint, prompt, random, fixed };

std::string_view to_string(RouterBackend b) noexcept;
std::optional<RouterBackend> parse_router_backend(std::string_view name) noexcept;

struct RouterConfig {
    RouterBackend backend = RouterBackend::prompt;
    std::optional<StructureType> fixed_type;  // required iff backend == fixed
    std::optional<std::uint64_t> seed;        // random backend
    std::size_t few_shot_k = 5;

    void validate() const;
    bool operator==(const RouterConfig&) const = default;
};

struct RouteDecision {
    StructureType chosen = StructureType::chunk;
    RouterBackend backend = RouterBackend::prompt;
    std::string raw_output;
    bool fallback_applied = false;

    bool operator==(const RouteDecision&) const = default;
};

struct RouteParse {
    StructureType type;
    bool fallback_applied;
};

// Recovers a structure type from free-form model output. Names match
// case-insensitively as whole words (a plural "s" and the spelling
// "catalog" are accepted); the earliest match wins. No match yields chunk
// with fallback_applied set. Never throws.
RouteParse parse_route_output(std::string_view text) noexcept;

// Router prompt for (question, core content). The endpoint backend sends
// exactly this text, and exported preference pairs use it as their prompt.
std::string render_router_prompt(const PromptLibrary& prompts, std::string_view question,
                                 std::string_view core_content);

// Everything a model-backed stage needs to issue calls.
struct StageContext {
    ModelGateway& gateway;
    const PromptLibrary& prompts;
};

// `model` is used by the endpoint and prompt backends only; `gateway` may
// point at a dedicated router endpoint.
RouteDecision route(const std::string& question, const CoreContent& core, const RouterConfig& cfg,
                    StageContext ctx, const ModelSettings& model);

}  // namespace structrag
