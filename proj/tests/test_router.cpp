#include "route_oracle.hpp"

#include "structrag/router.hpp"
#include "structrag/scripted_backend.hpp"

#include <doctest.h>

#include <map>
#include <random>

using namespace structrag;

namespace {

CoreContent sample_core() {
    return {{{"r1", "Alpha Corp Annual Report. Revenue 10."}, {"r2", "Beta Ltd Annual Report. Revenue 12."}}, 100};
}

struct Fixture {
    std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>();
    ModelGateway gateway{backend};
    PromptLibrary prompts = PromptLibrary::load(STRUCTRAG_PROMPTS);
    StageContext ctx{gateway, prompts};
};

}  // namespace

TEST_CASE("parse_route_output examples") {
    auto a = parse_route_output("The best choice is TABLE.");
    CHECK(a.type == StructureType::table);
    CHECK_FALSE(a.fallback_applied);
    CHECK(parse_route_output("graph or table both work").type == StructureType::graph);
    auto c = parse_route_output("no idea");
    CHECK(c.type == StructureType::chunk);
    CHECK(c.fallback_applied);
}

TEST_CASE("parse_route_output word boundaries") {
    CHECK(parse_route_output("the most suitable is graph").type == StructureType::graph);
    CHECK(parse_route_output("Tables.").type == StructureType::table);
    CHECK(parse_route_output("a catalog").type == StructureType::catalogue);
    CHECK(parse_route_output("catalogues!").type == StructureType::catalogue);
    CHECK(parse_route_output("**algorithm**").type == StructureType::algorithm);
    CHECK(parse_route_output("graphical tablet").fallback_applied);
    CHECK(parse_route_output("").fallback_applied);
}

TEST_CASE("parse_route_output agrees with the regex oracle and ignores case and trailing whitespace") {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> parts{"table", "Graph", "ALGORITHM", "catalogue", "catalog", "chunk", "chunks",
                                         "suitable", "graphic", "x", " ", "\n", ".", "-", "is", "best", "收",
                                         "tabled", "algorithms", "(", ")", "**", "\t"};
    std::uniform_int_distribution<std::size_t> pick(0, parts.size() - 1), len(0, 8);
    for (int i = 0; i < 3000; ++i) {
        std::string s;
        for (std::size_t n = len(rng); n > 0; --n) s += parts[pick(rng)];
        INFO(s);
        auto got = parse_route_output(s);
        auto want = testing::route_oracle(s);
        REQUIRE(got.type == want.first);
        REQUIRE(got.fallback_applied == want.second);
        auto upper = s;
        for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        CHECK(parse_route_output(upper + "  \n").type == got.type);
    }
}

TEST_CASE("router config validation") {
    RouterConfig fixed{RouterBackend::fixed, std::nullopt, std::nullopt, 5};
    CHECK_THROWS_AS(fixed.validate(), ConfigError);
    RouterConfig stray{RouterBackend::prompt, StructureType::graph, std::nullopt, 5};
    CHECK_THROWS_AS(stray.validate(), ConfigError);
    CHECK(parse_router_backend("endpoint") == RouterBackend::endpoint);
    CHECK_FALSE(parse_router_backend("oracle").has_value());
}

TEST_CASE("fixed backend") {
    Fixture f;
    RouterConfig cfg{RouterBackend::fixed, StructureType::graph, std::nullopt, 5};
    auto d = route("anything", sample_core(), cfg, f.ctx, {});
    CHECK(d.chosen == StructureType::graph);
    CHECK_FALSE(d.fallback_applied);
    CHECK(route("other question", {{{"z", "zzz"}}, 16}, cfg, f.ctx, {}).chosen == StructureType::graph);
    CHECK(f.backend->calls().empty());
}

TEST_CASE("random backend") {
    Fixture f;
    SUBCASE("seeded runs repeat") {
        RouterConfig cfg{RouterBackend::random, std::nullopt, 7, 5};
        auto a = route("q", sample_core(), cfg, f.ctx, {});
        auto b = route("q", sample_core(), cfg, f.ctx, {});
        CHECK(a == b);
    }
    SUBCASE("unseeded draws are uniform") {
        RouterConfig cfg{RouterBackend::random, std::nullopt, std::nullopt, 5};
        std::map<StructureType, int> counts;
        for (int i = 0; i < 10'000; ++i) ++counts[route("q", sample_core(), cfg, f.ctx, {}).chosen];
        REQUIRE(counts.size() == 5);
        for (auto [t, n] : counts) {
            CAPTURE(to_string(t));
            CHECK(std::abs(n / 10'000.0 - 0.2) <= 0.02);
        }
    }
}

TEST_CASE("model-backed backends") {
    Fixture f;
    SUBCASE("financial comparison routes to table") {
        f.backend->add(Stage::router, 0, {"table"});
        RouterConfig cfg;
        auto d = route("Compare the revenue and net profit of Alpha Corp and Beta Ltd in 2023.", sample_core(), cfg,
                       f.ctx, {});
        CHECK(d.chosen == StructureType::table);
        CHECK(d.raw_output == "table");
        auto call = f.backend->calls().at(0);
        CHECK(call.user.find("Structure type: catalogue") != std::string::npos);  // few-shot exemplars
        CHECK(call.user.find("[r2] Beta Ltd Annual Report.") != std::string::npos);
    }
    SUBCASE("endpoint sends the plain router prompt") {
        f.backend->add(Stage::router, 0, {"I am not sure"});
        RouterConfig cfg{RouterBackend::endpoint, std::nullopt, std::nullopt, 5};
        auto d = route("Who founded Acme?", sample_core(), cfg, f.ctx, {});
        CHECK(d.chosen == StructureType::chunk);
        CHECK(d.fallback_applied);
        CHECK(f.backend->calls().at(0).user == render_router_prompt(f.prompts, "Who founded Acme?", sample_core().render()));
    }
    SUBCASE("k = 0 drops exemplars") {
        f.backend->add(Stage::router, 0, {"graph"});
        RouterConfig cfg{RouterBackend::prompt, std::nullopt, std::nullopt, 0};
        route("q", sample_core(), cfg, f.ctx, {});
        CHECK(f.backend->calls().at(0).user.find("Structure type: table") == std::string::npos);
    }
    SUBCASE("gateway errors propagate") {
        RouterConfig cfg;
        CHECK_THROWS_AS(route("q", sample_core(), cfg, f.ctx, {}), MalformedResponse);
    }
    SUBCASE("preconditions") {
        RouterConfig cfg;
        CHECK_THROWS_AS(route(" ", sample_core(), cfg, f.ctx, {}), ConfigError);
        CHECK_THROWS_AS(route("q", {}, cfg, f.ctx, {}), ConfigError);
    }
}
