#include "structrag/router.hpp"

#include "structrag/text_util.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cctype>
#include <random>

namespace structrag {

namespace {

constexpr std::array<std::string_view, 4> kBackendNames{"endpoint", "prompt", "random", "fixed"};

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// True if `name` (plus an accepted suffix) occurs at `pos` as a whole word.
bool match_at(std::string_view lower, std::size_t pos, std::string_view name) {
    if (lower.compare(pos, name.size(), name) != 0) return false;
    static constexpr std::array<std::string_view, 4> catalog_suffixes{"ues", "ue", "s", ""};
    static constexpr std::array<std::string_view, 2> plain_suffixes{"s", ""};
    auto check = [&](const auto& suffixes) {
        std::size_t end = pos + name.size();
        for (std::string_view suffix : suffixes) {
            if (lower.compare(end, suffix.size(), suffix) != 0) continue;
            std::size_t stop = end + suffix.size();
            if (stop >= lower.size() || !is_letter(lower[stop])) return true;
        }
        return false;
    };
    return name == "catalog" ? check(catalog_suffixes) : check(plain_suffixes);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string few_shot_examples(const PromptLibrary& prompts, std::size_t k) {
    if (k == 0) return "(none)";
    auto examples = nlohmann::json::parse(prompts.asset("router_examples.json"));
    if (!examples.is_array() || examples.empty()) {
        throw TemplateError(TemplateErrorKind::MissingAsset, "router_examples.json", "expected a non-empty array");
    }
    std::string out;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& e = examples[i % examples.size()];
        if (i) out += "\n";
        out += "Question: " + e.at("question").get<std::string>() + "\n";
        out += "Core content:\n" + e.at("core_content").get<std::string>() + "\n";
        out += "Structure type: " + e.at("type").get<std::string>() + "\n";
    }
    return out;
}

}  // namespace

std::string_view to_string(RouterBackend b) noexcept { return kBackendNames[static_cast<std::size_t>(b)]; }

std::optional<RouterBackend> parse_router_backend(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kBackendNames.size(); ++i) {
        if (kBackendNames[i] == name) return static_cast<RouterBackend>(i);
    }
    return std::nullopt;
}

void RouterConfig::validate() const {
    if (backend == RouterBackend::fixed && !fixed_type) {
        throw ConfigError("router.fixed_type", "required when router.backend = fixed");
    }
    if (backend != RouterBackend::fixed && fixed_type) {
        throw ConfigError("router.fixed_type", "only allowed when router.backend = fixed");
    }
}

RouteParse parse_route_output(std::string_view text) noexcept {
    static constexpr std::array<std::pair<std::string_view, StructureType>, 5> names{{
        {"table", StructureType::table},
        {"graph", StructureType::graph},
        {"algorithm", StructureType::algorithm},
        {"catalog", StructureType::catalogue},
        {"chunk", StructureType::chunk},
    }};
    std::string lower;
    try {
        lower = text::to_lower(text);
    } catch (...) {
        return {StructureType::chunk, true};
    }
    for (std::size_t pos = 0; pos < lower.size(); ++pos) {
        if (pos > 0 && is_letter(lower[pos - 1])) continue;
        for (const auto& [name, type] : names) {
            if (match_at(lower, pos, name)) return {type, false};
        }
    }
    return {StructureType::chunk, true};
}

std::string render_router_prompt(const PromptLibrary& prompts, std::string_view question,
                                 std::string_view core_content) {
    return prompts.get("router").render({{"question", std::string(question)}, {"core_content", std::string(core_content)}});
}

RouteDecision route(const std::string& question, const CoreContent& core, const RouterConfig& cfg,
                    StageContext ctx, const ModelSettings& model) {
    cfg.validate();
    if (text::trim(question).empty()) throw ConfigError("question", "question is empty");
    if (core.per_doc.empty()) throw ConfigError("corpus", "core content has no entries");

    RouteDecision d;
    d.backend = cfg.backend;
    switch (cfg.backend) {
        case RouterBackend::fixed:
            d.chosen = *cfg.fixed_type;
            d.raw_output = std::string(to_string(d.chosen));
            return d;
        case RouterBackend::random: {
            // Seeded runs mix the question in so a dataset gets varied but
            // replayable draws; unseeded runs draw fresh entropy.
            std::mt19937_64 rng;
            if (cfg.seed) {
                std::seed_seq seq{static_cast<std::uint32_t>(*cfg.seed), static_cast<std::uint32_t>(*cfg.seed >> 32),
                                  static_cast<std::uint32_t>(fnv1a(question)),
                                  static_cast<std::uint32_t>(fnv1a(question) >> 32)};
                rng.seed(seq);
            } else {
                std::random_device rd;
                std::seed_seq seq{rd(), rd(), rd(), rd()};
                rng.seed(seq);
            }
            d.chosen = kAllStructureTypes[std::uniform_int_distribution<std::size_t>(0, 4)(rng)];
            d.raw_output = std::string(to_string(d.chosen));
            return d;
        }
        case RouterBackend::endpoint:
        case RouterBackend::prompt: {
            std::string prompt;
            if (cfg.backend == RouterBackend::endpoint) {
                prompt = render_router_prompt(ctx.prompts, question, core.render());
            } else {
                prompt = ctx.prompts.get("router_fewshot")
                             .render({{"examples", few_shot_examples(ctx.prompts, cfg.few_shot_k)},
                                      {"question", question},
                                      {"core_content", core.render()}});
            }
            auto resp = ctx.gateway.complete(model.request(Stage::router, 0, std::move(prompt)));
            auto parsed = parse_route_output(resp.text);
            d.chosen = parsed.type;
            d.fallback_applied = parsed.fallback_applied;
            d.raw_output = std::move(resp.text);
            return d;
        }
    }
    return d;
}

}  // namespace structrag
