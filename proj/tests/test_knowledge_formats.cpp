#include "generators.hpp"

#include "structrag/knowledge_formats.hpp"

#include <doctest.h>

using namespace structrag;

namespace {

template <typename F>
FormatError capture(F&& f) {
    try {
        f();
    } catch (const FormatError& e) {
        return e;
    }
    FAIL("expected FormatError");
    return FormatError(FormatErrorKind::MalformedTable, 0, "unreachable");
}

}  // namespace

TEST_CASE("structure type names are canonical and parse case-insensitively") {
    CHECK(to_string(StructureType::catalogue) == "catalogue");
    CHECK(parse_structure_type("TABLE") == StructureType::table);
    CHECK(parse_structure_type("  Graph\n") == StructureType::graph);
    CHECK(parse_structure_type("catalog") == StructureType::catalogue);
    CHECK_FALSE(parse_structure_type("tree").has_value());
    for (auto t : kAllStructureTypes) CHECK(parse_structure_type(to_string(t)) == t);
    CHECK_THROWS_AS(structure_type_from_string("list"), ConfigError);
}

TEST_CASE("parse_table") {
    SUBCASE("minimal table") {
        auto t = parse_table("| A | B |\n|---|---|\n| 1 | 2 |");
        CHECK(t.header == std::vector<std::string>{"A", "B"});
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0] == std::vector<std::string>{"1", "2"});
        CHECK(t.caption.empty());
    }
    SUBCASE("short row names its line") {
        auto e = capture([] { parse_table("| A | B |\n|---|---|\n| 1 |"); });
        CHECK(e.kind() == FormatErrorKind::MalformedTable);
        CHECK(e.line() == 2);
    }
    SUBCASE("missing separator") {
        auto e = capture([] { parse_table("| A | B |\n| 1 | 2 |"); });
        CHECK(e.kind() == FormatErrorKind::MalformedTable);
        CHECK(e.line() == 1);
        CHECK(capture([] { parse_table("| A | B |"); }).kind() == FormatErrorKind::MalformedTable);
        CHECK(capture([] { parse_table("no table here"); }).kind() == FormatErrorKind::MalformedTable);
    }
    SUBCASE("caption, alignment markers, padding and blank lines") {
        auto t = parse_table("Revenue by year\n\n|  Year |Revenue  |\n|:---|---:|\n|2023|  10 |\n\n| 2024 | 12|\n   ");
        CHECK(t.caption == "Revenue by year");
        CHECK(t.header == std::vector<std::string>{"Year", "Revenue"});
        CHECK(t.rows.size() == 2);
        CHECK(t.rows[1] == std::vector<std::string>{"2024", "12"});
    }
    SUBCASE("escaped pipes stay inside cells") {
        auto t = parse_table("| k | v |\n|---|---|\n| a\\|b | c |");
        CHECK(t.rows[0][0] == "a|b");
    }
    SUBCASE("empty header cell rejected") {
        CHECK(capture([] { parse_table("| A |  |\n|---|---|"); }).line() == 0);
    }
    SUBCASE("trailing prose is a structural error") {
        auto e = capture([] { parse_table("| A |\n|---|\n| 1 |\nthat is all"); });
        CHECK(e.line() == 3);
    }
}

TEST_CASE("parse_triples") {
    auto g = parse_triples("(Alice; founded; AcmeCo)");
    REQUIRE(g.triples.size() == 1);
    CHECK(g.triples[0] == Triple{"Alice", "founded", "AcmeCo"});

    auto e = capture([] { parse_triples("(Alice; founded)"); });
    CHECK(e.kind() == FormatErrorKind::MalformedTriple);
    CHECK(e.line() == 0);

    CHECK(capture([] { parse_triples("(a; r; b)\n\n(a; ; b)"); }).line() == 2);
    CHECK(capture([] { parse_triples("(a; r; b"); }).kind() == FormatErrorKind::MalformedTriple);
    CHECK(capture([] { parse_triples("(a; b; c; d)"); }).kind() == FormatErrorKind::MalformedTriple);

    auto lenient = parse_triples("- (x; is part of; y)\n  p ; q ; r  \n(semi\\;colon; r; f(x))");
    REQUIRE(lenient.triples.size() == 3);
    CHECK(lenient.triples[1] == Triple{"p", "q", "r"});
    CHECK(lenient.triples[2] == Triple{"semi;colon", "r", "f(x)"});
}

TEST_CASE("parse_catalogue") {
    auto c = parse_catalogue("1 A\n1.1 B\n2 C");
    REQUIRE(c.entries.size() == 3);
    CHECK(c.entries[0].depth() == 1);
    CHECK(c.entries[1].depth() == 2);
    CHECK(c.entries[2].depth() == 1);
    CHECK(c.entries[1].title == "B");

    // "1.1" exists, so "1.1.2" has its parent.
    auto deep = parse_catalogue("1 Intro\n1.1 Scope\n1.1.2 Detail");
    CHECK(deep.entries.size() == 3);

    auto orphan = capture([] { parse_catalogue("1 Intro\n1.2.1 X"); });
    CHECK(orphan.kind() == FormatErrorKind::OrphanSection);
    CHECK(orphan.section() == "1.2.1");
    CHECK(orphan.line() == 1);

    auto dup = capture([] { parse_catalogue("1 A\n1.1 B\n1.1 C"); });
    CHECK(dup.kind() == FormatErrorKind::DuplicateSection);
    CHECK(dup.section() == "1.1");

    CHECK(capture([] { parse_catalogue("preamble\n1 A"); }).kind() == FormatErrorKind::MalformedCatalogue);

    auto bodies = parse_catalogue("\n1. Overview\nfirst line\n\nsecond line   \n\n2 Next\n");
    REQUIRE(bodies.entries.size() == 2);
    CHECK(bodies.entries[0].number == "1");
    CHECK(bodies.entries[0].title == "Overview");
    CHECK(bodies.entries[0].body == "first line\n\nsecond line");
    CHECK(bodies.entries[1].body.empty());
}

TEST_CASE("validate_algorithm") {
    auto a = validate_algorithm("for each doc:\n  score(doc)");
    REQUIRE(a.steps.size() == 2);
    CHECK(a.steps[0] == AlgorithmStep{0, "for each doc:"});
    CHECK(a.steps[1] == AlgorithmStep{1, "score(doc)"});

    auto jump = capture([] { validate_algorithm("a\n      b", 2); });
    CHECK(jump.kind() == FormatErrorKind::IndentJump);
    CHECK(jump.line() == 1);

    CHECK(capture([] { validate_algorithm(""); }).kind() == FormatErrorKind::EmptyAlgorithm);
    CHECK(capture([] { validate_algorithm(" \n\t\n"); }).kind() == FormatErrorKind::EmptyAlgorithm);

    auto tabs = validate_algorithm("loop:\n\tbody\n\t\tinner\nend");
    CHECK(tabs.steps[2].level == 2);
    CHECK(tabs.steps[3].level == 0);
    CHECK(serialize(tabs) == "loop:\n\tbody\n\t\tinner\nend");

    CHECK_THROWS_AS(validate_algorithm("x", 0), ConfigError);
}

TEST_CASE("canonical serialization forms") {
    CHECK(serialize(GraphKnowledge{{{"a", "r", "b"}}}) == "(a; r; b)\n");
    CHECK(serialize(GraphKnowledge{{{"a;b", "r", "c\\d"}}}) == "(a\\;b; r; c\\\\d)\n");

    CatalogueKnowledge c{{{"1", "Intro", "Body one"}, {"1.1", "Scope", "Body two"}}};
    CHECK(serialize(c) == "1 Intro\nBody one\n1.1 Scope\nBody two\n");

    TableKnowledge t{"", {"A", "B"}, {{"1", "2"}}};
    CHECK(serialize(t) == "| A | B |\n| --- | --- |\n| 1 | 2 |\n");

    ChunkKnowledge ck{{{"d1", 0, "one"}, {"d1", 10, "two"}}};
    CHECK(serialize(ck) == "one\n\ntwo");
    CHECK(serialize(Knowledge{AlgorithmKnowledge{"x\n  y", {}}}) == "x\n  y");
}

TEST_CASE("round trip: 3x4 random table") {
    testing::Gen gen(20241015);
    auto t = gen.table(4, 3);
    CHECK(parse_table(serialize(t)) == t);
}

TEST_CASE("round trip: 50 random triples") {
    testing::Gen gen(7);
    auto g = gen.graph(50);
    CHECK(parse_triples(serialize(g)) == g);
}

TEST_CASE("round trip: random catalogue trees of up to 20 sections") {
    testing::Gen gen(99);
    for (int i = 0; i < 200; ++i) {
        auto c = gen.catalogue(20);
        INFO(serialize(c));
        REQUIRE(parse_catalogue(serialize(c)) == c);
    }
}

TEST_CASE("parsing is deterministic") {
    const std::string text = "cap\n| a | b |\n|---|---|\n| 1 | 2 |\n";
    CHECK(parse_table(text) == parse_table(text));
}

TEST_CASE("json embedding") {
    Knowledge k = GraphKnowledge{{{"a", "r", "b"}}};
    auto j = knowledge_to_json(k, "people and companies");
    CHECK(j["type"] == "graph");
    CHECK(j["text"] == "(a; r; b)\n");
    CHECK(j["description"] == "people and companies");
    auto back = knowledge_from_json(j);
    CHECK(back.knowledge == k);
    CHECK(back.description == "people and companies");

    Knowledge chunks = ChunkKnowledge{{{"d2", 40, "alpha"}, {"d2", 90, "beta"}}};
    CHECK(knowledge_from_json(knowledge_to_json(chunks, "c")).knowledge == chunks);
}
