#include "structrag/corpus.hpp"

#include "structrag/text_util.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace structrag {

namespace {

std::string_view kind_name(CorpusErrorKind k) {
    switch (k) {
        case CorpusErrorKind::Io: return "CorpusIoError";
        case CorpusErrorKind::DuplicateDocId: return "DuplicateDocId";
        case CorpusErrorKind::EmptyCorpus: return "EmptyCorpus";
        case CorpusErrorKind::MalformedRecord: return "MalformedRecord";
    }
    return "CorpusError";
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError(CorpusErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw CorpusError(CorpusErrorKind::Io, "read failed for " + path.string());
    return ss.str();
}

// Full-width terminators: 。？！
constexpr std::string_view kCjkTerminators[] = {"\xE3\x80\x82", "\xEF\xBC\x9F", "\xEF\xBC\x81"};

bool ends_sentence(std::string_view s) {
    s = text::trim_right(s);
    if (s.empty()) return false;
    char c = s.back();
    if (c == '.' || c == '?' || c == '!') return true;
    for (auto t : kCjkTerminators) {
        if (s.size() >= t.size() && s.substr(s.size() - t.size()) == t) return true;
    }
    return false;
}

std::string truncate_to_budget(std::string_view s, std::size_t budget) {
    std::size_t cut = text::utf8_floor(s, budget * 4);
    return std::string(text::trim_right(s.substr(0, cut)));
}

}  // namespace

CorpusError::CorpusError(CorpusErrorKind kind, std::string detail)
    : Error(std::string(kind_name(kind)) + ": " + detail), kind_(kind) {}

std::string CoreContent::render() const {
    std::string out;
    for (std::size_t i = 0; i < per_doc.size(); ++i) {
        if (i) out += '\n';
        out += "[" + per_doc[i].doc_id + "] " + per_doc[i].summary;
    }
    return out;
}

std::size_t estimate_tokens(std::string_view text) noexcept { return (text.size() + 3) / 4; }

std::optional<int> length_set(std::size_t total) noexcept {
    if (total < 10'000) return std::nullopt;
    if (total < 50'000) return 1;
    if (total < 100'000) return 2;
    if (total < 200'000) return 3;
    if (total <= 250'000) return 4;
    return std::nullopt;
}

std::size_t total_tokens(const DocumentSet& docs) noexcept {
    std::size_t sum = 0;
    for (const auto& d : docs.docs) sum += estimate_tokens(d.body);
    return sum;
}

DocumentSet parse_corpus_jsonl(std::string_view content) {
    DocumentSet set;
    std::unordered_set<std::string> ids;
    auto lines = text::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        Document doc;
        try {
            auto j = nlohmann::json::parse(lines[i]);
            doc.id = j.at("id").get<std::string>();
            doc.title = j.value("title", std::string{});
            doc.body = j.at("body").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw CorpusError(CorpusErrorKind::MalformedRecord, "line " + std::to_string(i) + ": " + e.what());
        }
        if (text::trim(doc.id).empty()) {
            throw CorpusError(CorpusErrorKind::MalformedRecord, "line " + std::to_string(i) + ": empty id");
        }
        if (text::trim(doc.body).empty()) {
            throw CorpusError(CorpusErrorKind::MalformedRecord, "line " + std::to_string(i) + ": empty body");
        }
        if (!ids.insert(doc.id).second) throw CorpusError(CorpusErrorKind::DuplicateDocId, doc.id);
        set.docs.push_back(std::move(doc));
    }
    if (set.docs.empty()) throw CorpusError(CorpusErrorKind::EmptyCorpus, "no documents");
    return set;
}

DocumentSet load_corpus(const std::filesystem::path& path) { return parse_corpus_jsonl(read_file(path)); }

void save_corpus(const DocumentSet& docs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError(CorpusErrorKind::Io, "cannot write " + path.string());
    for (const auto& d : docs.docs) {
        out << nlohmann::json{{"id", d.id}, {"title", d.title}, {"body", d.body}}.dump() << '\n';
    }
    if (!out) throw CorpusError(CorpusErrorKind::Io, "write failed for " + path.string());
}

QuestionRecord load_question(const std::filesystem::path& path) {
    auto content = read_file(path);
    QuestionRecord q;
    try {
        auto j = nlohmann::json::parse(content);
        q.question = j.at("question").get<std::string>();
        if (j.contains("gold_answer") && !j["gold_answer"].is_null()) {
            q.gold_answer = j["gold_answer"].get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorpusError(CorpusErrorKind::MalformedRecord, path.string() + ": " + e.what());
    }
    if (text::trim(q.question).empty()) {
        throw CorpusError(CorpusErrorKind::MalformedRecord, path.string() + ": empty question");
    }
    return q;
}

std::vector<std::size_t> sentence_boundaries(std::string_view s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '.' || c == '?' || c == '!') {
            if (i + 1 == s.size() || text::is_space(s[i + 1])) out.push_back(i + 1);
            continue;
        }
        for (auto t : kCjkTerminators) {
            if (s.substr(i, t.size()) == t) {
                out.push_back(i + t.size());
                i += t.size() - 1;
                break;
            }
        }
    }
    if (!s.empty() && (out.empty() || out.back() != s.size())) out.push_back(s.size());
    return out;
}

std::string summarize_document(const Document& doc, std::size_t budget) {
    if (budget < kMinCoreBudget) {
        throw ConfigError("core_budget", "must be at least " + std::to_string(kMinCoreBudget) + " tokens");
    }
    std::string title = text::collapse_whitespace(doc.title);
    if (!title.empty() && !ends_sentence(title)) title += '.';

    std::string best;
    for (std::size_t end : sentence_boundaries(doc.body)) {
        std::string body_part = text::collapse_whitespace(std::string_view(doc.body).substr(0, end));
        std::string candidate = title.empty() ? body_part : body_part.empty() ? title : title + ' ' + body_part;
        if (estimate_tokens(candidate) > budget) break;
        best = std::move(candidate);
    }
    if (!best.empty()) return best;
    if (!title.empty()) return estimate_tokens(title) <= budget ? title : truncate_to_budget(title, budget);

    auto bounds = sentence_boundaries(doc.body);
    std::string first = text::collapse_whitespace(std::string_view(doc.body).substr(0, bounds.empty() ? 0 : bounds[0]));
    return truncate_to_budget(first, budget);
}

CoreContent core_content(const DocumentSet& docs, std::size_t budget) {
    CoreContent core;
    core.token_budget = budget;
    for (const auto& d : docs.docs) core.per_doc.push_back({d.id, summarize_document(d, budget)});
    return core;
}

std::vector<Chunk> split_chunks(const Document& doc, std::size_t size, std::size_t overlap) {
    if (size == 0) throw ConfigError("chunk_size", "must be positive");
    if (overlap >= size) throw ConfigError("chunk_overlap", "must be smaller than chunk_size");

    const std::string& body = doc.body;
    const std::size_t n = body.size();
    const std::size_t window = size * 4;
    const std::size_t overlap_bytes = overlap * 4;

    std::vector<Chunk> chunks;
    std::size_t start = 0;
    while (true) {
        std::size_t end = std::min(start + window, n);
        if (end < n) {
            std::size_t cut = std::string::npos;
            for (std::size_t p = end; p > start + window / 2; --p) {
                if (text::is_space(body[p - 1])) {
                    cut = p;
                    break;
                }
            }
            if (cut == std::string::npos) {
                cut = text::utf8_floor(body, end);
                if (cut <= start) cut = end;
            }
            end = cut;
        }
        chunks.push_back({doc.id, start, body.substr(start, end - start)});
        if (end >= n) break;

        std::size_t next = end > overlap_bytes ? end - overlap_bytes : 0;
        next = text::utf8_floor(body, next);
        if (next <= start) {
            next = start + 1;
            while (next < end && (static_cast<unsigned char>(body[next]) & 0xC0) == 0x80) ++next;
        }
        start = next;
    }
    return chunks;
}

}  // namespace structrag
