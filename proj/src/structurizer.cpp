#include "structrag/structurizer.hpp"

#include "structrag/lexical.hpp"
#include "structrag/parallel.hpp"
#include "structrag/text_util.hpp"

#include <algorithm>
#include <set>
#include <variant>

namespace structrag {

namespace {

std::string doc_label(const Document& doc) { return doc.title.empty() ? doc.id : doc.title; }

std::string drop_leading_blank_lines(std::string_view s) {
    auto lines = text::split_lines(s);
    std::size_t i = 0;
    while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
    std::vector<std::string> kept(lines.begin() + static_cast<std::ptrdiff_t>(i), lines.end());
    return std::string(text::trim_right(text::join(kept, "\n")));
}

// Parses one model reply; returns the FormatError message on failure.
std::variant<std::pair<Knowledge, std::string>, std::string> try_parse(StructureType t, std::string_view reply,
                                                                         const Document& doc) {
    auto [body, description] = split_description(reply);
    try {
        Knowledge k = parse_knowledge(t, body, doc.id);
        if (description.empty()) description = std::string(to_string(t)) + " extracted from " + doc_label(doc);
        return std::make_pair(std::move(k), std::move(description));
    } catch (const FormatError& e) {
        return std::string(e.what());
    }
}

std::pair<Knowledge, std::string> structurize_piece(const std::string& question, StructureType t, const Document& doc,
                                                    std::string_view piece, StageContext ctx,
                                                    const ModelSettings& model, std::size_t ordinal) {
    std::string prompt = ctx.prompts.get("structurize_" + std::string(to_string(t)))
                             .render({{"question", question}, {"title", doc_label(doc)}, {"document", std::string(piece)}});
    auto reply = ctx.gateway.complete(model.request(Stage::structurize, ordinal, prompt)).text;
    auto first = try_parse(t, reply, doc);
    if (auto* ok = std::get_if<0>(&first)) return std::move(*ok);

    std::string repair = ctx.prompts.get("structurize_repair")
                             .render({{"original_prompt", prompt},
                                      {"structure_type", std::string(to_string(t))},
                                      {"error", std::get<1>(first)},
                                      {"previous", reply}});
    reply = ctx.gateway.complete(model.request(Stage::structurize, ordinal, repair)).text;
    auto second = try_parse(t, reply, doc);
    if (auto* ok = std::get_if<0>(&second)) return std::move(*ok);
    throw StructurizeParseFailure(doc.id, std::get<1>(second));
}

std::string shift_top_level(const std::string& number, std::size_t offset) {
    auto dot = number.find('.');
    std::size_t top = std::stoul(number.substr(0, dot));
    return std::to_string(top + offset) + (dot == std::string::npos ? "" : number.substr(dot));
}

// Combines the partial structures of an oversized document.
Knowledge merge_pieces(StructureType t, std::vector<Knowledge> parts, const std::string& doc_id) {
    switch (t) {
        case StructureType::table: {
            auto merged = std::get<TableKnowledge>(parts.front());
            for (std::size_t i = 1; i < parts.size(); ++i) {
                const auto& p = std::get<TableKnowledge>(parts[i]);
                if (p.header.size() != merged.header.size()) {
                    throw StructurizeParseFailure(doc_id, "partial tables have different column counts");
                }
                merged.rows.insert(merged.rows.end(), p.rows.begin(), p.rows.end());
            }
            return merged;
        }
        case StructureType::graph: {
            GraphKnowledge merged;
            for (const auto& p : parts) {
                const auto& g = std::get<GraphKnowledge>(p);
                merged.triples.insert(merged.triples.end(), g.triples.begin(), g.triples.end());
            }
            return merged;
        }
        case StructureType::catalogue: {
            // Later pieces usually restart at "1"; shift their top-level
            // numbers past what has been seen so far, then re-validate.
            CatalogueKnowledge merged;
            std::size_t top_seen = 0;
            for (const auto& p : parts) {
                std::size_t offset = top_seen;
                for (auto e : std::get<CatalogueKnowledge>(p).entries) {
                    e.number = shift_top_level(e.number, offset);
                    top_seen = std::max<std::size_t>(top_seen, std::stoul(e.number.substr(0, e.number.find('.'))));
                    merged.entries.push_back(std::move(e));
                }
            }
            try {
                return parse_catalogue(serialize(merged));
            } catch (const FormatError& e) {
                throw StructurizeParseFailure(doc_id, e.what());
            }
        }
        case StructureType::algorithm: {
            std::vector<std::string> bodies;
            for (const auto& p : parts) bodies.push_back(std::get<AlgorithmKnowledge>(p).body);
            try {
                return validate_algorithm(text::join(bodies, "\n"));
            } catch (const FormatError& e) {
                throw StructurizeParseFailure(doc_id, e.what());
            }
        }
        case StructureType::chunk: break;
    }
    return parts.front();
}

}  // namespace

void StructurizerConfig::validate() const {
    if (chunk_size == 0) throw ConfigError("corpus.chunk_size", "must be positive");
    if (chunk_overlap >= chunk_size) throw ConfigError("corpus.chunk_overlap", "must be smaller than corpus.chunk_size");
    if (chunk_top_k == 0) throw ConfigError("structurizer.chunk_top_k", "must be positive");
    if (doc_context_budget < 64) throw ConfigError("structurizer.doc_context_budget", "must be at least 64");
}

StructurizeParseFailure::StructurizeParseFailure(std::string doc_id, std::string parser_error)
    : Error("could not parse structured knowledge for document '" + doc_id + "': " + parser_error),
      doc_id_(std::move(doc_id)),
      parser_error_(std::move(parser_error)) {}

std::pair<std::string, std::string> split_description(std::string_view reply) {
    std::string whole = text::strip_code_fence(reply);
    auto lines = text::split_lines(whole);
    std::size_t marker = lines.size();
    for (std::size_t i = lines.size(); i-- > 0;) {
        if (text::starts_with_icase(text::trim_left(lines[i]), "description:")) {
            marker = i;
            break;
        }
    }
    std::vector<std::string> body(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(marker));
    std::string description;
    if (marker < lines.size()) {
        std::vector<std::string> rest;
        rest.emplace_back(text::trim_left(lines[marker]).substr(std::string_view("description:").size()));
        for (std::size_t i = marker + 1; i < lines.size(); ++i) rest.emplace_back(lines[i]);
        description = text::collapse_whitespace(text::join(rest, " "));
    }
    return {drop_leading_blank_lines(text::strip_code_fence(text::join(body, "\n"))), description};
}

KnowledgeUnit chunk_unit(const std::string& question, const Document& doc, const StructurizerConfig& cfg) {
    auto chunks = split_chunks(doc, cfg.chunk_size, cfg.chunk_overlap);
    auto query = lexical::tokens(question);
    std::vector<std::size_t> scores;
    scores.reserve(chunks.size());
    for (const auto& c : chunks) scores.push_back(lexical::overlap(query, c.text));
    auto keep = lexical::top_k(scores, cfg.chunk_top_k);

    ChunkKnowledge ck;
    for (auto i : keep) ck.chunks.push_back(chunks[i]);
    std::string desc = "chunks " + std::to_string(keep.front() + 1) + ".." + std::to_string(keep.back() + 1) + " of " +
                       doc_label(doc);
    return {doc.id, StructureType::chunk, std::move(ck), std::move(desc)};
}

KnowledgeUnit structurize_document(const std::string& question, StructureType t, const Document& doc,
                                   const StructurizerConfig& cfg, StageContext ctx, const ModelSettings& model,
                                   std::size_t ordinal) {
    cfg.validate();
    if (t == StructureType::chunk) return chunk_unit(question, doc, cfg);

    if (estimate_tokens(doc.body) <= cfg.doc_context_budget) {
        auto [k, desc] = structurize_piece(question, t, doc, doc.body, ctx, model, ordinal);
        return {doc.id, t, std::move(k), std::move(desc)};
    }

    // Oversized: structurize consecutive pieces in order, then merge.
    std::vector<Knowledge> parts;
    std::vector<std::string> descriptions;
    for (const auto& piece : split_chunks(doc, cfg.doc_context_budget, 0)) {
        auto [k, desc] = structurize_piece(question, t, doc, piece.text, ctx, model, ordinal);
        parts.push_back(std::move(k));
        if (std::find(descriptions.begin(), descriptions.end(), desc) == descriptions.end()) {
            descriptions.push_back(std::move(desc));
        }
    }
    return {doc.id, t, merge_pieces(t, std::move(parts), doc.id), text::join(descriptions, " ")};
}

KnowledgeBase build_knowledge_base(std::vector<KnowledgeUnit> units) {
    if (units.empty()) throw EmptyKnowledgeBase("knowledge base has no units");
    KnowledgeBase kb;
    kb.structure_type = units.front().structure_type;
    std::set<std::string> ids;
    std::vector<std::string> lines;
    for (const auto& u : units) {
        if (u.structure_type != kb.structure_type || type_of(u.knowledge) != kb.structure_type) {
            throw MixedStructureTypes("knowledge units mix " + std::string(to_string(kb.structure_type)) + " and " +
                                      std::string(to_string(u.structure_type)));
        }
        if (!ids.insert(u.source_doc_id).second) {
            throw ConfigError("units", "duplicate document id '" + u.source_doc_id + "'");
        }
        lines.push_back("[doc " + u.source_doc_id + "] " + u.description);
    }
    kb.overall_description = text::join(lines, "\n");
    kb.units = std::move(units);
    return kb;
}

KnowledgeBase structurize_corpus(const std::string& question, StructureType t, const DocumentSet& docs,
                                 const StructurizerConfig& cfg, StageContext ctx, const ModelSettings& model) {
    if (docs.docs.empty()) throw EmptyKnowledgeBase("no documents to structurize");
    std::vector<KnowledgeUnit> units(docs.docs.size());
    parallel_for(docs.docs.size(), ctx.gateway.max_in_flight(), [&](std::size_t i) {
        units[i] = structurize_document(question, t, docs.docs[i], cfg, ctx, model, i);
    });
    return build_knowledge_base(std::move(units));
}

std::string render_unit(const KnowledgeUnit& unit) {
    return "[doc " + unit.source_doc_id + "] " + unit.description + "\n" +
           std::string(text::trim_right(serialize(unit.knowledge)));
}

nlohmann::json to_json(const KnowledgeBase& kb) {
    auto units = nlohmann::json::array();
    for (const auto& u : kb.units) {
        auto j = knowledge_to_json(u.knowledge, u.description);
        j.erase("type");
        j["doc_id"] = u.source_doc_id;
        units.push_back(std::move(j));
    }
    return {{"type", to_string(kb.structure_type)}, {"units", std::move(units)},
            {"overall_description", kb.overall_description}};
}

KnowledgeBase knowledge_base_from_json(const nlohmann::json& j) {
    auto type = structure_type_from_string(j.at("type").get<std::string>());
    std::vector<KnowledgeUnit> units;
    for (auto u : j.at("units")) {
        std::string id = u.at("doc_id").get<std::string>();
        u["type"] = to_string(type);
        auto dk = knowledge_from_json(u, id);
        units.push_back({id, type, std::move(dk.knowledge), std::move(dk.description)});
    }
    return build_knowledge_base(std::move(units));
}

}  // namespace structrag
