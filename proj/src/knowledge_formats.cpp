#include "structrag/knowledge_formats.hpp"

#include "structrag/text_util.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace structrag {

namespace {

constexpr std::array<std::string_view, 5> kTypeNames{"table", "graph", "algorithm", "catalogue", "chunk"};

std::string escape(std::string_view s, char delimiter) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\' || c == delimiter) out += '\\';
        out += c;
    }
    return out;
}

// Reverses escape(). Unknown escape sequences are kept verbatim.
std::string unescape(std::string_view s, char delimiter) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '\\' || s[i + 1] == delimiter)) {
            out += s[++i];
        } else {
            out += s[i];
        }
    }
    return out;
}

// Splits on unescaped delimiters, leaving escapes in place.
std::vector<std::string_view> split_unescaped(std::string_view s, char delimiter) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\') {
            ++i;
        } else if (s[i] == delimiter) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    parts.push_back(s.substr(start));
    return parts;
}

bool ends_with_unescaped(std::string_view s, char c) {
    if (s.empty() || s.back() != c) return false;
    std::size_t backslashes = 0;
    for (std::size_t i = s.size() - 1; i-- > 0 && s[i] == '\\';) ++backslashes;
    return backslashes % 2 == 0;
}

// ----- tables

bool is_table_row(std::string_view line) { return !line.empty() && line.front() == '|'; }

std::vector<std::string> split_row(std::string_view line) {
    std::string_view body = text::trim(line);
    body.remove_prefix(1);
    if (ends_with_unescaped(body, '|')) body.remove_suffix(1);
    std::vector<std::string> cells;
    for (auto raw : split_unescaped(body, '|')) cells.push_back(unescape(text::trim(raw), '|'));
    return cells;
}

bool is_separator_cell(std::string_view cell) {
    cell = text::trim(cell);
    if (!cell.empty() && cell.front() == ':') cell.remove_prefix(1);
    if (!cell.empty() && cell.back() == ':') cell.remove_suffix(1);
    return !cell.empty() && std::all_of(cell.begin(), cell.end(), [](char c) { return c == '-'; });
}

// ----- catalogue

struct Heading {
    std::string number;
    std::string title;
};

// Matches "1", "1.2.3", optionally with a trailing '.', followed by
// whitespace + title or end of line.
std::optional<Heading> parse_heading(std::string_view line) {
    std::size_t i = 0;
    std::string number;
    while (true) {
        std::size_t start = i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == start) return std::nullopt;
        number.append(line.substr(start, i - start));
        if (i < line.size() && line[i] == '.' && i + 1 < line.size() &&
            std::isdigit(static_cast<unsigned char>(line[i + 1]))) {
            number += '.';
            ++i;
            continue;
        }
        break;
    }
    if (i < line.size() && line[i] == '.') ++i;
    if (i < line.size() && !text::is_space(line[i])) return std::nullopt;
    return Heading{std::move(number), std::string(text::trim(line.substr(i)))};
}

std::string parent_of(const std::string& number) {
    auto dot = number.rfind('.');
    return dot == std::string::npos ? std::string{} : number.substr(0, dot);
}

bool needs_body_escape(std::string_view line) {
    return (!line.empty() && line.front() == '\\') || parse_heading(text::trim_left(line)).has_value();
}

std::string normalize_body(const std::vector<std::string>& lines) {
    std::size_t first = 0;
    std::size_t last = lines.size();
    while (first < last && text::trim(lines[first]).empty()) ++first;
    while (last > first && text::trim(lines[last - 1]).empty()) --last;
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        if (i > first) out += '\n';
        out += text::trim_right(lines[i]);
    }
    return out;
}

std::size_t leading_columns(std::string_view line, std::size_t indent_width) {
    std::size_t cols = 0;
    for (char c : line) {
        if (c == ' ') {
            ++cols;
        } else if (c == '\t') {
            cols += indent_width;
        } else {
            break;
        }
    }
    return cols;
}

}  // namespace

std::string_view to_string(StructureType t) noexcept { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<StructureType> parse_structure_type(std::string_view name) noexcept {
    std::string lowered = text::to_lower(text::trim(name));
    for (auto t : kAllStructureTypes) {
        if (lowered == to_string(t)) return t;
    }
    if (lowered == "catalog") return StructureType::catalogue;
    return std::nullopt;
}

StructureType structure_type_from_string(std::string_view name) {
    if (auto t = parse_structure_type(name)) return *t;
    throw ConfigError("structure_type", "unknown structure type '" + std::string(name) + "'");
}

StructureType type_of(const Knowledge& k) noexcept { return static_cast<StructureType>(k.index()); }

std::size_t CatalogueEntry::depth() const noexcept {
    return static_cast<std::size_t>(std::count(number.begin(), number.end(), '.')) + 1;
}

std::string_view to_string(FormatErrorKind k) noexcept {
    switch (k) {
        case FormatErrorKind::MalformedTable: return "MalformedTable";
        case FormatErrorKind::MalformedTriple: return "MalformedTriple";
        case FormatErrorKind::MalformedCatalogue: return "MalformedCatalogue";
        case FormatErrorKind::OrphanSection: return "OrphanSection";
        case FormatErrorKind::DuplicateSection: return "DuplicateSection";
        case FormatErrorKind::EmptyAlgorithm: return "EmptyAlgorithm";
        case FormatErrorKind::IndentJump: return "IndentJump";
    }
    return "FormatError";
}

FormatError::FormatError(FormatErrorKind kind, std::size_t line, std::string detail, std::string section)
    : Error(std::string(to_string(kind)) + (section.empty() ? "" : "(" + section + ")") + " at line " +
            std::to_string(line + 1) + ": " + detail),
      kind_(kind),
      line_(line),
      detail_(std::move(detail)),
      section_(std::move(section)) {}

// ---------------------------------------------------------------------------

TableKnowledge parse_table(std::string_view input) {
    auto lines = text::split_lines(input);
    TableKnowledge table;
    std::vector<std::string> caption_lines;

    std::size_t i = 0;
    for (; i < lines.size(); ++i) {
        auto t = text::trim(lines[i]);
        if (t.empty()) continue;
        if (is_table_row(t)) break;
        caption_lines.push_back(unescape(t, '|'));
    }
    if (i == lines.size()) {
        throw FormatError(FormatErrorKind::MalformedTable, 0, "no table rows found");
    }
    const std::size_t header_line = i;
    table.header = split_row(lines[i]);
    for (const auto& name : table.header) {
        if (name.empty()) throw FormatError(FormatErrorKind::MalformedTable, header_line, "empty header cell");
    }
    table.caption = text::join(caption_lines, "\n");

    ++i;
    while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
    if (i == lines.size()) {
        throw FormatError(FormatErrorKind::MalformedTable, header_line, "no separator row after header");
    }
    {
        auto t = text::trim(lines[i]);
        if (!is_table_row(t)) {
            throw FormatError(FormatErrorKind::MalformedTable, i, "expected separator row");
        }
        auto cells = split_row(t);
        if (cells.size() != table.header.size() ||
            !std::all_of(cells.begin(), cells.end(), [](const std::string& c) { return is_separator_cell(c); })) {
            throw FormatError(FormatErrorKind::MalformedTable, i, "expected separator row");
        }
    }

    for (++i; i < lines.size(); ++i) {
        auto t = text::trim(lines[i]);
        if (t.empty()) continue;
        if (!is_table_row(t)) throw FormatError(FormatErrorKind::MalformedTable, i, "text after table");
        auto cells = split_row(t);
        if (cells.size() != table.header.size()) {
            throw FormatError(FormatErrorKind::MalformedTable, i,
                              "row has " + std::to_string(cells.size()) + " cells, header has " +
                                  std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

GraphKnowledge parse_triples(std::string_view input) {
    auto lines = text::split_lines(input);
    GraphKnowledge graph;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto t = text::trim(lines[i]);
        if (t.empty()) continue;
        if ((t.substr(0, 2) == "- " || t.substr(0, 2) == "* ") && text::trim(t.substr(2)).substr(0, 1) == "(") {
            t = text::trim(t.substr(2));
        }
        const bool open = t.front() == '(';
        const bool close = t.back() == ')';
        if (open != close) throw FormatError(FormatErrorKind::MalformedTriple, i, "unbalanced parentheses");
        if (open) t = t.substr(1, t.size() - 2);

        auto parts = split_unescaped(t, ';');
        if (parts.size() != 3) {
            throw FormatError(FormatErrorKind::MalformedTriple, i,
                              "expected 3 segments, found " + std::to_string(parts.size()));
        }
        Triple triple{unescape(text::trim(parts[0]), ';'), unescape(text::trim(parts[1]), ';'),
                      unescape(text::trim(parts[2]), ';')};
        if (text::trim(triple.head).empty() || text::trim(triple.relation).empty() ||
            text::trim(triple.tail).empty()) {
            throw FormatError(FormatErrorKind::MalformedTriple, i, "empty segment");
        }
        graph.triples.push_back(std::move(triple));
    }
    return graph;
}

CatalogueKnowledge parse_catalogue(std::string_view input) {
    auto lines = text::split_lines(input);
    CatalogueKnowledge catalogue;
    std::unordered_set<std::string> seen;
    std::vector<std::string> body_lines;

    auto flush = [&] {
        if (!catalogue.entries.empty()) catalogue.entries.back().body = normalize_body(body_lines);
        body_lines.clear();
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view raw = lines[i];
        if (!raw.empty() && raw.front() == '\\') {
            if (catalogue.entries.empty()) {
                throw FormatError(FormatErrorKind::MalformedCatalogue, i, "text before first numbered section");
            }
            body_lines.emplace_back(raw.substr(1));
            continue;
        }
        if (auto heading = parse_heading(text::trim(raw))) {
            flush();
            if (seen.count(heading->number)) {
                throw FormatError(FormatErrorKind::DuplicateSection, i, "section number repeated", heading->number);
            }
            auto parent = parent_of(heading->number);
            if (!parent.empty() && !seen.count(parent)) {
                throw FormatError(FormatErrorKind::OrphanSection, i, "parent section " + parent + " missing",
                                  heading->number);
            }
            seen.insert(heading->number);
            catalogue.entries.push_back({std::move(heading->number), std::move(heading->title), {}});
            continue;
        }
        if (catalogue.entries.empty()) {
            if (text::trim(raw).empty()) continue;
            throw FormatError(FormatErrorKind::MalformedCatalogue, i, "text before first numbered section");
        }
        body_lines.emplace_back(raw);
    }
    flush();
    return catalogue;
}

AlgorithmKnowledge validate_algorithm(std::string_view input, std::size_t indent_width) {
    if (indent_width == 0) throw ConfigError("indent_width", "must be positive");
    if (text::trim(input).empty()) throw FormatError(FormatErrorKind::EmptyAlgorithm, 0, "algorithm body is empty");

    AlgorithmKnowledge algo;
    algo.body = std::string(input);
    auto lines = text::split_lines(input);
    std::size_t previous = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto t = text::trim(lines[i]);
        if (t.empty()) continue;
        std::size_t level = leading_columns(lines[i], indent_width) / indent_width;
        if (level > previous + 1) {
            throw FormatError(FormatErrorKind::IndentJump, i,
                              "indent level " + std::to_string(level) + " follows level " + std::to_string(previous));
        }
        algo.steps.push_back({level, std::string(t)});
        previous = level;
    }
    return algo;
}

Knowledge parse_knowledge(StructureType type, std::string_view text, std::string_view doc_id) {
    switch (type) {
        case StructureType::table: return parse_table(text);
        case StructureType::graph: return parse_triples(text);
        case StructureType::algorithm: return validate_algorithm(text);
        case StructureType::catalogue: return parse_catalogue(text);
        case StructureType::chunk: return ChunkKnowledge{{Chunk{std::string(doc_id), 0, std::string(text)}}};
    }
    return ChunkKnowledge{};
}

// ---------------------------------------------------------------------------

std::string serialize(const TableKnowledge& k) {
    auto row = [](const std::vector<std::string>& cells) {
        std::string line = "|";
        for (const auto& c : cells) {
            std::string flat = c;
            std::replace(flat.begin(), flat.end(), '\n', ' ');
            line += ' ' + escape(flat, '|') + " |";
        }
        return line + '\n';
    };
    std::string out;
    if (!k.caption.empty()) {
        for (auto line : text::split_lines(k.caption)) out += escape(line, '|') + '\n';
    }
    out += row(k.header);
    out += "|";
    for (std::size_t i = 0; i < k.header.size(); ++i) out += " --- |";
    out += '\n';
    for (const auto& r : k.rows) out += row(r);
    return out;
}

std::string serialize(const GraphKnowledge& k) {
    std::string out;
    for (const auto& t : k.triples) {
        out += '(' + escape(t.head, ';') + "; " + escape(t.relation, ';') + "; " + escape(t.tail, ';') + ")\n";
    }
    return out;
}

std::string serialize(const AlgorithmKnowledge& k) { return k.body; }

std::string serialize(const CatalogueKnowledge& k) {
    std::string out;
    for (const auto& e : k.entries) {
        out += e.number;
        if (!e.title.empty()) out += ' ' + e.title;
        out += '\n';
        if (e.body.empty()) continue;
        for (auto line : text::split_lines(e.body)) {
            if (needs_body_escape(line)) out += '\\';
            out.append(line);
            out += '\n';
        }
    }
    return out;
}

std::string serialize(const ChunkKnowledge& k) {
    std::string out;
    for (std::size_t i = 0; i < k.chunks.size(); ++i) {
        if (i) out += "\n\n";
        out += k.chunks[i].text;
    }
    return out;
}

std::string serialize(const Knowledge& k) {
    return std::visit([](const auto& v) { return serialize(v); }, k);
}

nlohmann::json knowledge_to_json(const Knowledge& k, const std::string& description) {
    nlohmann::json j{{"type", to_string(type_of(k))}, {"text", serialize(k)}, {"description", description}};
    if (const auto* chunks = std::get_if<ChunkKnowledge>(&k)) {
        auto arr = nlohmann::json::array();
        for (const auto& c : chunks->chunks) {
            arr.push_back({{"doc_id", c.source_doc_id}, {"offset", c.offset}, {"text", c.text}});
        }
        j["chunks"] = std::move(arr);
    }
    return j;
}

DescribedKnowledge knowledge_from_json(const nlohmann::json& j, std::string_view doc_id) {
    auto type = structure_type_from_string(j.at("type").get<std::string>());
    std::string description = j.value("description", "");
    if (type == StructureType::chunk && j.contains("chunks")) {
        ChunkKnowledge ck;
        for (const auto& c : j.at("chunks")) {
            ck.chunks.push_back({c.at("doc_id").get<std::string>(), c.at("offset").get<std::size_t>(),
                                 c.at("text").get<std::string>()});
        }
        return {std::move(ck), std::move(description)};
    }
    return {parse_knowledge(type, j.at("text").get<std::string>(), doc_id), std::move(description)};
}

}  // namespace structrag
