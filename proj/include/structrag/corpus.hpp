#pragma once

#include "structrag/errors.hpp"
#include "structrag/knowledge_formats.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace structrag {

struct Document {
    std::string id;
    std::string title;
    std::string body;

    bool operator==(const Document&) const = default;
};

// Ordered document collection plus the question asked of it. Document
// index i is significant in every per-document output.
struct DocumentSet {
    std::vector<Document> docs;
    std::string question;

    bool operator==(const DocumentSet&) const = default;
};

struct CoreContentEntry {
    std::string doc_id;
    std::string summary;

    bool operator==(const CoreContentEntry&) const = default;
};

struct CoreContent {
    std::vector<CoreContentEntry> per_doc;
    std::size_t token_budget = 0;

    // "[<doc_id>] <summary>" per line, in document order.
    std::string render() const;
};

struct QuestionRecord {
    std::string question;
    std::optional<std::string> gold_answer;
};

enum class CorpusErrorKind { Io, DuplicateDocId, EmptyCorpus, MalformedRecord };

class CorpusError : public Error {
public:
    CorpusError(CorpusErrorKind kind, std::string detail);

    CorpusErrorKind kind() const noexcept { return kind_; }

private:
    CorpusErrorKind kind_;
};

inline constexpr std::size_t kDefaultChunkSize = 512;
inline constexpr std::size_t kDefaultChunkOverlap = 64;
inline constexpr std::size_t kDefaultCoreBudget = 100;
inline constexpr std::size_t kMinCoreBudget = 16;

// Approximate token count: ceil(bytes / 4). Used only for budgets and
// corpus size classification, never as a model tokenizer.
std::size_t estimate_tokens(std::string_view text) noexcept;

// Corpus length bands used for result bookkeeping: 1 = [10K, 50K),
// 2 = [50K, 100K), 3 = [100K, 200K), 4 = [200K, 250K]. Out of range -> nullopt.
std::optional<int> length_set(std::size_t total_tokens) noexcept;
std::size_t total_tokens(const DocumentSet& docs) noexcept;

DocumentSet parse_corpus_jsonl(std::string_view content);
DocumentSet load_corpus(const std::filesystem::path& path);
void save_corpus(const DocumentSet& docs, const std::filesystem::path& path);

QuestionRecord load_question(const std::filesystem::path& path);

// Byte offsets just past each sentence terminator in `text` (the end of
// the text always counts as a boundary when non-empty).
std::vector<std::size_t> sentence_boundaries(std::string_view text);

// Title first, then leading body sentences, cut at the last sentence
// boundary that keeps the estimate within `budget`.
std::string summarize_document(const Document& doc, std::size_t budget);
CoreContent core_content(const DocumentSet& docs, std::size_t budget = kDefaultCoreBudget);

// Sliding window over the body. Consecutive chunks overlap by roughly
// `overlap` tokens; removing the overlap and concatenating restores the body.
std::vector<Chunk> split_chunks(const Document& doc, std::size_t size = kDefaultChunkSize,
                                std::size_t overlap = kDefaultChunkOverlap);

}  // namespace structrag
