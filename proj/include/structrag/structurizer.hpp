#pragma once

#include "structrag/corpus.hpp"
#include "structrag/knowledge_formats.hpp"
#include "structrag/router.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace structrag {

struct KnowledgeUnit {
    std::string source_doc_id;
    StructureType structure_type = StructureType::chunk;
    Knowledge knowledge;
    std::string description;

    bool operator==(const KnowledgeUnit&) const = default;
};

struct KnowledgeBase {
    std::vector<KnowledgeUnit> units;  // document order
    StructureType structure_type = StructureType::chunk;
    std::string overall_description;   // "[doc <id>] <description>" lines

    bool operator==(const KnowledgeBase&) const = default;
};

struct StructurizerConfig {
    std::size_t chunk_size = kDefaultChunkSize;
    std::size_t chunk_overlap = kDefaultChunkOverlap;
    std::size_t chunk_top_k = 5;
    // Documents estimated above this many tokens are structurized piecewise.
    std::size_t doc_context_budget = 24'000;

    void validate() const;
    bool operator==(const StructurizerConfig&) const = default;
};

class StructurizeParseFailure : public Error {
public:
    StructurizeParseFailure(std::string doc_id, std::string parser_error);

    const std::string& doc_id() const noexcept { return doc_id_; }
    const std::string& parser_error() const noexcept { return parser_error_; }

private:
    std::string doc_id_;
    std::string parser_error_;
};

class MixedStructureTypes : public Error {
public:
    using Error::Error;
};

class EmptyKnowledgeBase : public Error {
public:
    using Error::Error;
};

// Splits a model reply into (knowledge text, description) at the last line
// starting with "DESCRIPTION:". Code fences around either part are removed.
std::pair<std::string, std::string> split_description(std::string_view reply);

// Chunk route: every chunk scored by distinct-token overlap with the
// question; the top k (ties -> earlier chunk) are kept in document order.
KnowledgeUnit chunk_unit(const std::string& question, const Document& doc, const StructurizerConfig& cfg);

// `ordinal` labels the model calls for this document (its index).
KnowledgeUnit structurize_document(const std::string& question, StructureType t, const Document& doc,
                                   const StructurizerConfig& cfg, StageContext ctx, const ModelSettings& model,
                                   std::size_t ordinal = 0);

KnowledgeBase build_knowledge_base(std::vector<KnowledgeUnit> units);

// Structurizes every document concurrently (bounded by the gateway) and
// assembles the knowledge base in document order.
KnowledgeBase structurize_corpus(const std::string& question, StructureType t, const DocumentSet& docs,
                                 const StructurizerConfig& cfg, StageContext ctx, const ModelSettings& model);

// Text handed to the utilizer: one "[doc <id>] <description>" header
// followed by the unit's canonical serialization, per unit.
std::string render_unit(const KnowledgeUnit& unit);

nlohmann::json to_json(const KnowledgeBase& kb);
KnowledgeBase knowledge_base_from_json(const nlohmann::json& j);

}  // namespace structrag
