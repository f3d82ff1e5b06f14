#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Deterministic bag-of-tokens relevance scoring, used where a retriever
// would otherwise be needed (chunk route, extract context overflow).
namespace structrag::lexical {

// Lowercased ASCII alphanumeric runs; every non-ASCII UTF-8 character is a
// token of its own so CJK text still overlaps.
std::set<std::string> tokens(std::string_view text);

// Number of distinct tokens of `text` that also occur in `query`.
std::size_t overlap(const std::set<std::string>& query, std::string_view text);

// Indices of the k highest scores (ties -> lower index), returned in
// ascending index order.
std::vector<std::size_t> top_k(const std::vector<std::size_t>& scores, std::size_t k);

}  // namespace structrag::lexical
