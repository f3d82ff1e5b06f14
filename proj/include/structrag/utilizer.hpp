#pragma once

#include "structrag/router.hpp"
#include "structrag/structurizer.hpp"

#include <string>
#include <vector>

namespace structrag {

struct SubQuestion {
    std::size_t index = 1;  // 1-based
    std::string text;

    bool operator==(const SubQuestion&) const = default;
};

struct Evidence {
    std::size_t sub_index = 1;
    std::string text;
    std::vector<std::string> source_doc_ids;

    bool operator==(const Evidence&) const = default;
};

struct UtilizerConfig {
    std::size_t max_subquestions = 8;
    // Token budget for the knowledge placed in one extract prompt.
    std::size_t extract_context_budget = 24'000;

    void validate() const;
    bool operator==(const UtilizerConfig&) const = default;
};

class EvidenceMismatch : public Error {
public:
    using Error::Error;
};

// Numbered-list grammar: "1. text", "2) text" or "3: text", one per line;
// other lines are ignored. At most `max` items are kept.
std::vector<SubQuestion> parse_subquestions(std::string_view output, std::size_t max);

// Splits a trailing "SOURCES: a, b" section (last occurrence, any case)
// from the extracted text.
Evidence parse_evidence(std::size_t sub_index, std::string_view output);

// Units whose descriptions best match `query`, greedily up to `budget`
// tokens of rendered text, in document order. Everything fits -> all units.
std::vector<std::size_t> select_units(const KnowledgeBase& kb, std::string_view query, std::size_t budget);

std::vector<SubQuestion> decompose(const std::string& question, const std::string& overall_description,
                                   const UtilizerConfig& cfg, StageContext ctx, const ModelSettings& model);

Evidence extract(const SubQuestion& sub, const KnowledgeBase& kb, const UtilizerConfig& cfg, StageContext ctx,
                 const ModelSettings& model);

// One extract call per sub-question, run concurrently; output ordered by
// sub-question index.
std::vector<Evidence> extract_all(const std::vector<SubQuestion>& subs, const KnowledgeBase& kb,
                                  const UtilizerConfig& cfg, StageContext ctx, const ModelSettings& model);

// Final answer text from the (sub-question, evidence) pairs.
std::string infer(const std::string& question, const std::vector<SubQuestion>& subs,
                  const std::vector<Evidence>& evidence, StageContext ctx, const ModelSettings& model);

// Answer straight from the question and the whole serialized knowledge
// base, without decomposition or extraction.
std::string infer_direct(const std::string& question, const KnowledgeBase& kb, StageContext ctx,
                         const ModelSettings& model);

}  // namespace structrag
