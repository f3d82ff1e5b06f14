#pragma once

#include "structrag/errors.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace structrag {

// The five knowledge formats a task can be restructured into.
enum class StructureType { table, graph, algorithm, catalogue, chunk };

inline constexpr std::array<StructureType, 5> kAllStructureTypes{
    StructureType::table, StructureType::graph, StructureType::algorithm,
    StructureType::catalogue, StructureType::chunk};

std::string_view to_string(StructureType t) noexcept;

// Case-insensitive, surrounding whitespace ignored. "catalog" is accepted as
// an alias for catalogue.
std::optional<StructureType> parse_structure_type(std::string_view name) noexcept;

// Throwing variant for config/CLI input.
StructureType structure_type_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Knowledge values

struct TableKnowledge {
    std::string caption;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const TableKnowledge&) const = default;
};

struct Triple {
    std::string head;
    std::string relation;
    std::string tail;

    bool operator==(const Triple&) const = default;
};

struct GraphKnowledge {
    std::vector<Triple> triples;

    bool operator==(const GraphKnowledge&) const = default;
};

struct AlgorithmStep {
    std::size_t level = 0;
    std::string line;

    bool operator==(const AlgorithmStep&) const = default;
};

struct AlgorithmKnowledge {
    std::string body;
    std::vector<AlgorithmStep> steps;

    bool operator==(const AlgorithmKnowledge&) const = default;
};

struct CatalogueEntry {
    std::string number;  // dotted numeric path, e.g. "1.1.2"
    std::string title;
    std::string body;

    std::size_t depth() const noexcept;
    bool operator==(const CatalogueEntry&) const = default;
};

struct CatalogueKnowledge {
    std::vector<CatalogueEntry> entries;

    bool operator==(const CatalogueKnowledge&) const = default;
};

struct Chunk {
    std::string source_doc_id;
    std::size_t offset = 0;  // byte offset into the source body
    std::string text;

    bool operator==(const Chunk&) const = default;
};

struct ChunkKnowledge {
    std::vector<Chunk> chunks;

    bool operator==(const ChunkKnowledge&) const = default;
};

using Knowledge =
    std::variant<TableKnowledge, GraphKnowledge, AlgorithmKnowledge, CatalogueKnowledge, ChunkKnowledge>;

StructureType type_of(const Knowledge& k) noexcept;

// ---------------------------------------------------------------------------
// Errors

enum class FormatErrorKind {
    MalformedTable,
    MalformedTriple,
    MalformedCatalogue,
    OrphanSection,
    DuplicateSection,
    EmptyAlgorithm,
    IndentJump,
};

std::string_view to_string(FormatErrorKind k) noexcept;

// Raised by every parser on structurally invalid input. `line()` is the
// 0-based line index into the parsed text (the message counts from 1);
// `section()` carries the offending catalogue number for the two section
// errors.
class FormatError : public Error {
public:
    FormatError(FormatErrorKind kind, std::size_t line, std::string detail, std::string section = {});

    FormatErrorKind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& section() const noexcept { return section_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    FormatErrorKind kind_;
    std::size_t line_;
    std::string detail_;
    std::string section_;
};

// ---------------------------------------------------------------------------
// Parsers

// Markdown pipe table, optionally preceded by caption lines. Cells escape
// '|' as "\|" and '\' as "\\".
TableKnowledge parse_table(std::string_view text);

// One "(head; relation; tail)" per non-blank line. ';' inside a segment is
// written "\;". Outer parentheses and a leading "- " bullet are optional.
GraphKnowledge parse_triples(std::string_view text);

// Lines starting with a dotted number open a new entry; other lines belong
// to the current entry's body. A body line beginning with '\' has the
// backslash removed and is never treated as a heading.
CatalogueKnowledge parse_catalogue(std::string_view text);

inline constexpr std::size_t kDefaultIndentWidth = 2;

AlgorithmKnowledge validate_algorithm(std::string_view text, std::size_t indent_width = kDefaultIndentWidth);

// Dispatches to the parser for `type`. Chunk text becomes a single chunk at
// offset 0 attributed to `doc_id`.
Knowledge parse_knowledge(StructureType type, std::string_view text, std::string_view doc_id = {});

// ---------------------------------------------------------------------------
// Canonical text forms

std::string serialize(const TableKnowledge& k);
std::string serialize(const GraphKnowledge& k);
std::string serialize(const AlgorithmKnowledge& k);
std::string serialize(const CatalogueKnowledge& k);
std::string serialize(const ChunkKnowledge& k);
std::string serialize(const Knowledge& k);

// {"type", "text", "description"}; chunk values additionally carry a
// "chunks" array so offsets survive persistence.
nlohmann::json knowledge_to_json(const Knowledge& k, const std::string& description);

struct DescribedKnowledge {
    Knowledge knowledge;
    std::string description;
};

DescribedKnowledge knowledge_from_json(const nlohmann::json& j, std::string_view doc_id = {});

}  // namespace structrag
