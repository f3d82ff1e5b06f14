#include "structrag/lexical.hpp"

#include <algorithm>
#include <numeric>

namespace structrag::lexical {

namespace {

bool is_ascii_alnum(unsigned char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::size_t utf8_length(unsigned char lead) {
    if (lead >= 0xF0) return 4;
    if (lead >= 0xE0) return 3;
    if (lead >= 0xC0) return 2;
    return 1;
}

}  // namespace

std::set<std::string> tokens(std::string_view text) {
    std::set<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        auto c = static_cast<unsigned char>(text[i]);
        if (is_ascii_alnum(c)) {
            std::size_t j = i;
            std::string tok;
            while (j < text.size() && is_ascii_alnum(static_cast<unsigned char>(text[j]))) {
                tok += static_cast<char>(std::tolower(static_cast<unsigned char>(text[j])));
                ++j;
            }
            out.insert(std::move(tok));
            i = j;
        } else if (c >= 0x80) {
            std::size_t n = std::min(utf8_length(c), text.size() - i);
            out.emplace(text.substr(i, n));
            i += n;
        } else {
            ++i;
        }
    }
    return out;
}

std::size_t overlap(const std::set<std::string>& query, std::string_view text) {
    std::size_t n = 0;
    for (const auto& t : tokens(text)) n += query.count(t);
    return n;
}

std::vector<std::size_t> top_k(const std::vector<std::size_t>& scores, std::size_t k) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(std::min(k, idx.size()));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace structrag::lexical
