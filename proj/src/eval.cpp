#include "structrag/eval.hpp"

#include "structrag/log.hpp"
#include "structrag/parallel.hpp"
#include "structrag/text_util.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>

namespace structrag {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 7> kWidePunct{"。", "，", "！", "？", "：", "；", "、"};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Strips ASCII punctuation, whitespace and common CJK punctuation from
// both ends.
std::string_view strip_punct(std::string_view s) {
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        auto front = static_cast<unsigned char>(s.front());
        auto back = static_cast<unsigned char>(s.back());
        if (std::ispunct(front) || text::is_space(s.front())) {
            s.remove_prefix(1);
            changed = true;
            continue;
        }
        if (std::ispunct(back) || text::is_space(s.back())) {
            s.remove_suffix(1);
            changed = true;
            continue;
        }
        for (auto p : kWidePunct) {
            if (s.substr(0, p.size()) == p) {
                s.remove_prefix(p.size());
                changed = true;
                break;
            }
            if (s.size() >= p.size() && s.substr(s.size() - p.size()) == p) {
                s.remove_suffix(p.size());
                changed = true;
                break;
            }
        }
    }
    return s;
}

// Removes "," when it sits between a digit and a group of exactly three
// digits ("1,308,463" -> "1308463"; "1,2" and "3,1415" are left alone).
std::string drop_thousands_separators(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && is_digit(s[i - 1]) && i + 3 < s.size() && is_digit(s[i + 1]) &&
            is_digit(s[i + 2]) && is_digit(s[i + 3]) && (i + 4 == s.size() || !is_digit(s[i + 4]))) {
            continue;
        }
        out += s[i];
    }
    return out;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
    auto lowered = text::to_lower(s);
    auto collapsed = text::collapse_whitespace(lowered);
    return drop_thousands_separators(strip_punct(collapsed));
}

bool exact_match(std::string_view predicted, std::string_view gold) {
    auto p = normalize_answer(predicted);
    auto g = normalize_answer(gold);
    if (p == g) return true;
    if (p.empty() || g.empty()) return false;
    return p.find(g) != std::string::npos;
}

UnparseableScore::UnparseableScore(std::string raw)
    : Error("no score between 0 and 100 in judge output: " + raw.substr(0, 200)), raw_(std::move(raw)) {}

int parse_judge_score(std::string_view raw) {
    std::size_t i = 0;
    while (i < raw.size()) {
        if (!is_digit(raw[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < raw.size() && is_digit(raw[j])) ++j;
        bool negative = i > 0 && raw[i - 1] == '-';
        bool fractional = j + 1 < raw.size() && raw[j] == '.' && is_digit(raw[j + 1]);
        if (!negative && !fractional && j - i <= 3) {
            int v = std::stoi(std::string(raw.substr(i, j - i)));
            if (v <= 100) return v;
        }
        i = j;
        if (fractional) {  // skip the decimal part as a whole
            ++i;
            while (i < raw.size() && is_digit(raw[i])) ++i;
        }
    }
    throw UnparseableScore(std::string(raw));
}

int llm_judge_score(const std::string& question, const std::string& predicted, const std::string& gold,
                    StageContext ctx, const ModelSettings& model, std::size_t ordinal) {
    auto prompt = ctx.prompts.get("eval_judge").render({{"question", question}, {"predicted", predicted}, {"gold", gold}});
    return parse_judge_score(ctx.gateway.complete(model.request(Stage::judge, ordinal, std::move(prompt))).text);
}

int LlmJudge::score(const std::string& question, const std::string& predicted, const std::string& gold,
                    std::size_t ordinal) {
    return llm_judge_score(question, predicted, gold, ctx_, model_, ordinal);
}

int RuleJudge::score(const std::string&, const std::string& predicted, const std::string& gold, std::size_t) {
    return normalize_answer(predicted) == normalize_answer(gold) ? 100 : 0;
}

EvalMode EvalMode::parse(std::string_view s) {
    EvalMode m;
    if (s == "full") return m;
    if (s == "random-router") {
        m.kind = Kind::random_router;
        return m;
    }
    if (s == "no-utilizer") {
        m.kind = Kind::no_utilizer;
        return m;
    }
    if (s.substr(0, 6) == "fixed:") {
        m.kind = Kind::fixed;
        m.fixed_type = structure_type_from_string(s.substr(6));
        return m;
    }
    throw ConfigError("mode", "unknown eval mode '" + std::string(s) +
                                  "' (expected full, random-router, fixed:<type> or no-utilizer)");
}

std::string EvalMode::to_string() const {
    switch (kind) {
        case Kind::full: return "full";
        case Kind::random_router: return "random-router";
        case Kind::fixed: return "fixed:" + std::string(structrag::to_string(*fixed_type));
        case Kind::no_utilizer: return "no-utilizer";
    }
    return "full";
}

PipelineConfig EvalMode::apply(PipelineConfig base) const {
    switch (kind) {
        case Kind::full: break;
        case Kind::random_router:
            base.router.backend = RouterBackend::random;
            base.router.fixed_type.reset();
            break;
        case Kind::fixed:
            base.router.backend = RouterBackend::fixed;
            base.router.fixed_type = fixed_type;
            break;
        case Kind::no_utilizer: base.use_utilizer = false; break;
    }
    return base;
}

std::vector<EvalItem> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError(CorpusErrorKind::Io, "cannot open dataset " + path.string());
    std::vector<EvalItem> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            std::filesystem::path corpus = j.at("corpus_path").get<std::string>();
            if (corpus.is_relative()) corpus = path.parent_path() / corpus;
            items.push_back({corpus, j.at("question").get<std::string>(), j.at("gold_answer").get<std::string>()});
        } catch (const json::exception& e) {
            throw CorpusError(CorpusErrorKind::MalformedRecord, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (items.empty()) throw CorpusError(CorpusErrorKind::EmptyCorpus, "no records in " + path.string());
    return items;
}

LatencyReport latency_report(const std::vector<StageLatencies>& traces) {
    if (traces.empty()) throw ConfigError("traces", "latency report needs at least one trace");
    LatencyReport r;
    for (const auto& t : traces) {
        r.constructing += t.constructing();
        r.reading += t.reading();
    }
    r.constructing /= static_cast<double>(traces.size());
    r.reading /= static_cast<double>(traces.size());
    r.total = r.constructing + r.reading;
    return r;
}

EvalResult run_eval(const std::vector<EvalItem>& dataset, const EvalMode& mode, const PipelineConfig& base,
                    PipelineContext ctx, Judge* judge) {
    if (dataset.empty()) throw ConfigError("dataset", "dataset is empty");
    auto cfg = mode.apply(base);
    cfg.validate();

    std::map<std::filesystem::path, DocumentSet> corpora;
    for (const auto& item : dataset) {
        if (!corpora.count(item.corpus_path)) corpora.emplace(item.corpus_path, load_corpus(item.corpus_path));
    }

    EvalResult result;
    result.records.resize(dataset.size());
    bool virtual_clock = dynamic_cast<const VirtualClock*>(&ctx.gateway.clock()) != nullptr;
    std::size_t workers = virtual_clock ? 1 : ctx.gateway.max_in_flight();

    parallel_for(dataset.size(), workers, [&](std::size_t i) {
        const auto& item = dataset[i];
        auto& rec = result.records[i];
        rec.question = item.question;
        rec.gold_answer = item.gold_answer;
        rec.mode = mode.to_string();
        try {
            rec.predicted = answer(item.question, corpora.at(item.corpus_path), cfg, ctx);
            rec.em = exact_match(rec.predicted->text, item.gold_answer);
        } catch (const std::exception& e) {
            rec.error = e.what();
            log::warn("record " + std::to_string(i + 1) + " failed: " + rec.error);
        }
        if (!judge) return;
        rec.judge_score = 0;
        if (!rec.predicted) return;
        try {
            rec.judge_score = judge->score(item.question, rec.predicted->text, item.gold_answer, i);
        } catch (const std::exception& e) {
            rec.error = e.what();
            log::warn("record " + std::to_string(i + 1) + " not scored: " + rec.error);
        }
    });

    auto& card = result.scorecard;
    card.mode = mode.to_string();
    card.n = dataset.size();
    std::size_t hits = 0;
    double score_sum = 0;
    std::vector<StageLatencies> traces;
    for (const auto& r : result.records) {
        hits += r.em ? 1 : 0;
        if (r.judge_score) score_sum += *r.judge_score;
        if (r.predicted) traces.push_back(r.predicted->trace.latency);
    }
    card.em_rate = static_cast<double>(hits) / static_cast<double>(card.n);
    if (judge) card.mean_judge_score = score_sum / static_cast<double>(card.n);
    if (!traces.empty()) card.latency = latency_report(traces);
    return result;
}

json to_json(const Scorecard& s) {
    return {{"mode", s.mode},
            {"n", s.n},
            {"em_rate", s.em_rate},
            {"mean_judge_score", s.mean_judge_score ? json(*s.mean_judge_score) : json(nullptr)},
            {"latency_ms",
             {{"constructing", s.latency.constructing}, {"reading", s.latency.reading}, {"total", s.latency.total}}}};
}

json to_json(const EvalResult& r) {
    auto j = to_json(r.scorecard);
    auto records = json::array();
    for (const auto& rec : r.records) {
        json o{{"question", rec.question},
               {"gold_answer", rec.gold_answer},
               {"em", rec.em},
               {"judge_score", rec.judge_score ? json(*rec.judge_score) : json(nullptr)},
               {"mode", rec.mode}};
        if (rec.predicted) {
            auto a = to_json(*rec.predicted);
            o["predicted"] = a["answer"];
            o["trace"] = a["trace"];
        } else {
            o["predicted"] = nullptr;
        }
        if (!rec.error.empty()) o["error"] = rec.error;
        records.push_back(std::move(o));
    }
    j["records"] = std::move(records);
    return j;
}

}  // namespace structrag
