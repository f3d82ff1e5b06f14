#include "structrag/utilizer.hpp"

#include "structrag/lexical.hpp"
#include "structrag/parallel.hpp"
#include "structrag/text_util.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace structrag {

namespace {

std::string render_units(const KnowledgeBase& kb, const std::vector<std::size_t>& selected) {
    std::vector<std::string> parts;
    for (auto i : selected) parts.push_back(render_unit(kb.units[i]));
    return text::join(parts, "\n\n");
}

std::vector<std::size_t> all_units(const KnowledgeBase& kb) {
    std::vector<std::size_t> idx(kb.units.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

std::string clean_source(std::string_view s) {
    s = text::trim(s);
    while (!s.empty() && (s.front() == '[' || s.front() == '(')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ']' || s.back() == ')' || s.back() == '.')) s.remove_suffix(1);
    s = text::trim(s);
    if (text::starts_with_icase(s, "doc ")) s = text::trim(s.substr(4));
    return std::string(s);
}

}  // namespace

void UtilizerConfig::validate() const {
    if (max_subquestions == 0) throw ConfigError("utilizer.max_subquestions", "must be positive");
    if (extract_context_budget == 0) throw ConfigError("utilizer.extract_context_budget", "must be positive");
}

std::vector<SubQuestion> parse_subquestions(std::string_view output, std::size_t max) {
    std::vector<SubQuestion> subs;
    const std::string unfenced = text::strip_code_fence(output);
    for (auto raw : text::split_lines(unfenced)) {
        auto line = text::trim(raw);
        // Optional markdown emphasis or bullet before the number.
        while (!line.empty() && (line.front() == '*' || line.front() == '-' || line.front() == '#')) {
            line = text::trim_left(line.substr(1));
        }
        std::size_t digits = 0;
        while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
        if (digits == 0 || digits >= line.size()) continue;
        char sep = line[digits];
        if (sep != '.' && sep != ')' && sep != ':') continue;
        auto body = line.substr(digits + 1);
        while (!body.empty() && (body.front() == '*' || text::is_space(body.front()))) body.remove_prefix(1);
        body = text::trim(body);
        if (body.empty()) continue;
        if (subs.size() == max) break;
        subs.push_back({subs.size() + 1, std::string(body)});
    }
    return subs;
}

Evidence parse_evidence(std::size_t sub_index, std::string_view output) {
    Evidence ev;
    ev.sub_index = sub_index;
    std::size_t at = text::rfind_icase(output, "sources:");
    if (at == std::string_view::npos) {
        ev.text = std::string(text::trim(output));
        return ev;
    }
    ev.text = std::string(text::trim(output.substr(0, at)));
    auto list = output.substr(at + std::string_view("sources:").size());
    std::string cur;
    auto flush = [&] {
        auto id = clean_source(cur);
        if (!id.empty() && std::find(ev.source_doc_ids.begin(), ev.source_doc_ids.end(), id) == ev.source_doc_ids.end()) {
            ev.source_doc_ids.push_back(std::move(id));
        }
        cur.clear();
    };
    for (char c : list) {
        if (c == ',' || c == ';' || c == '\n') {
            flush();
        } else {
            cur += c;
        }
    }
    flush();
    return ev;
}

std::vector<std::size_t> select_units(const KnowledgeBase& kb, std::string_view query, std::size_t budget) {
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    for (const auto& u : kb.units) {
        sizes.push_back(estimate_tokens(render_unit(u)) + 1);
        total += sizes.back();
    }
    if (total <= budget) return all_units(kb);

    auto q = lexical::tokens(query);
    std::vector<std::size_t> scores;
    for (const auto& u : kb.units) scores.push_back(lexical::overlap(q, u.description));
    auto order = all_units(kb);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<std::size_t> chosen;
    std::size_t used = 0;
    for (auto i : order) {
        if (used + sizes[i] > budget) {
            if (chosen.empty()) chosen.push_back(i);  // never send an empty context
            break;
        }
        used += sizes[i];
        chosen.push_back(i);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<SubQuestion> decompose(const std::string& question, const std::string& overall_description,
                                   const UtilizerConfig& cfg, StageContext ctx, const ModelSettings& model) {
    if (text::trim(question).empty()) throw ConfigError("question", "question is empty");
    if (text::trim(overall_description).empty()) throw ConfigError("overall_description", "description is empty");
    auto prompt = ctx.prompts.get("decompose").render({{"question", question},
                                                       {"overall_description", overall_description},
                                                       {"max_subquestions", std::to_string(cfg.max_subquestions)}});
    auto reply = ctx.gateway.complete(model.request(Stage::decompose, 0, std::move(prompt)));
    auto subs = parse_subquestions(reply.text, cfg.max_subquestions);
    if (subs.empty()) subs.push_back({1, question});
    return subs;
}

Evidence extract(const SubQuestion& sub, const KnowledgeBase& kb, const UtilizerConfig& cfg, StageContext ctx,
                 const ModelSettings& model) {
    if (kb.units.empty()) throw EmptyKnowledgeBase("knowledge base has no units");
    auto knowledge = render_units(kb, select_units(kb, sub.text, cfg.extract_context_budget));
    auto prompt = ctx.prompts.get("extract").render({{"sub_question", sub.text}, {"knowledge", knowledge}});
    auto reply = ctx.gateway.complete(model.request(Stage::extract, sub.index - 1, std::move(prompt)));
    return parse_evidence(sub.index, reply.text);
}

std::vector<Evidence> extract_all(const std::vector<SubQuestion>& subs, const KnowledgeBase& kb,
                                  const UtilizerConfig& cfg, StageContext ctx, const ModelSettings& model) {
    std::vector<Evidence> out(subs.size());
    parallel_for(subs.size(), ctx.gateway.max_in_flight(),
                 [&](std::size_t j) { out[j] = extract(subs[j], kb, cfg, ctx, model); });
    std::stable_sort(out.begin(), out.end(), [](const Evidence& a, const Evidence& b) { return a.sub_index < b.sub_index; });
    return out;
}

std::string infer(const std::string& question, const std::vector<SubQuestion>& subs,
                  const std::vector<Evidence>& evidence, StageContext ctx, const ModelSettings& model) {
    if (subs.size() != evidence.size()) {
        throw EvidenceMismatch(std::to_string(subs.size()) + " sub-questions but " + std::to_string(evidence.size()) +
                               " evidence entries");
    }
    std::string block;
    for (std::size_t j = 0; j < subs.size(); ++j) {
        if (evidence[j].sub_index != subs[j].index) {
            throw EvidenceMismatch("evidence " + std::to_string(j + 1) + " refers to sub-question " +
                                   std::to_string(evidence[j].sub_index));
        }
        if (j) block += "\n\n";
        block += "Sub-question " + std::to_string(subs[j].index) + ": " + subs[j].text + "\n";
        block += "Knowledge " + std::to_string(subs[j].index) + ": " + evidence[j].text;
    }
    auto prompt = ctx.prompts.get("infer").render({{"question", question}, {"evidence", block}});
    return std::string(text::trim(ctx.gateway.complete(model.request(Stage::infer, 0, std::move(prompt))).text));
}

std::string infer_direct(const std::string& question, const KnowledgeBase& kb, StageContext ctx,
                         const ModelSettings& model) {
    auto prompt = ctx.prompts.get("infer_direct").render({{"question", question}, {"knowledge", render_units(kb, all_units(kb))}});
    return std::string(text::trim(ctx.gateway.complete(model.request(Stage::infer, 0, std::move(prompt))).text));
}

}  // namespace structrag
