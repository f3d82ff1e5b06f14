#pragma once

#include "structrag/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace structrag {

// Lowercase, collapse whitespace, strip surrounding punctuation, and drop
// thousands separators inside digit groups. Idempotent.
std::string normalize_answer(std::string_view s);

// Normalized equality, or the normalized gold occurring inside the
// normalized prediction. An empty prediction never matches a non-empty gold.
bool exact_match(std::string_view predicted, std::string_view gold);

class UnparseableScore : public Error {
public:
    explicit UnparseableScore(std::string raw);
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

// First integer in [0, 100] in a judge reply.
int parse_judge_score(std::string_view raw);

class Judge {
public:
    virtual ~Judge() = default;
    virtual int score(const std::string& question, const std::string& predicted, const std::string& gold,
                      std::size_t ordinal) = 0;
};

// Model judge rendering the eval_judge prompt.
class LlmJudge final : public Judge {
public:
    LlmJudge(StageContext ctx, ModelSettings model) : ctx_(ctx), model_(std::move(model)) {}
    int score(const std::string& question, const std::string& predicted, const std::string& gold,
              std::size_t ordinal) override;

private:
    StageContext ctx_;
    ModelSettings model_;
};

// Offline judge: 100 iff the normalized answers are equal, else 0.
class RuleJudge final : public Judge {
public:
    int score(const std::string& question, const std::string& predicted, const std::string& gold,
              std::size_t ordinal) override;
};

int llm_judge_score(const std::string& question, const std::string& predicted, const std::string& gold,
                    StageContext ctx, const ModelSettings& model, std::size_t ordinal = 0);

struct EvalMode {
    enum class Kind { full, random_router, fixed, no_utilizer };
    Kind kind = Kind::full;
    std::optional<StructureType> fixed_type;

    // "full", "random-router", "fixed:<type>", "no-utilizer".
    static EvalMode parse(std::string_view s);
    std::string to_string() const;

    // The pipeline configuration a run under this mode uses.
    PipelineConfig apply(PipelineConfig base) const;
};

struct EvalItem {
    std::filesystem::path corpus_path;
    std::string question;
    std::string gold_answer;
};

// JSONL of {"corpus_path", "question", "gold_answer"}; relative corpus
// paths resolve against the dataset file's directory.
std::vector<EvalItem> load_dataset(const std::filesystem::path& path);

struct EvalRecord {
    std::string question;
    std::string gold_answer;
    std::optional<Answer> predicted;  // absent when the pipeline failed
    std::string error;
    bool em = false;
    std::optional<int> judge_score;
    std::string mode;
};

struct LatencyReport {
    double constructing = 0;
    double reading = 0;
    double total = 0;

    bool operator==(const LatencyReport&) const = default;
};

// Mean constructing and reading time; total is the sum of the two means.
LatencyReport latency_report(const std::vector<StageLatencies>& traces);

struct Scorecard {
    std::string mode;
    std::size_t n = 0;
    double em_rate = 0;
    std::optional<double> mean_judge_score;
    LatencyReport latency;
};

struct EvalResult {
    Scorecard scorecard;
    std::vector<EvalRecord> records;  // dataset order
};

// Runs every item under `mode`. A failing record counts as em=false and
// score 0 without stopping the run. Records run concurrently on a live
// clock and one at a time on a virtual clock, keeping simulated stage
// timings per record. `judge` may be null (no scores).
EvalResult run_eval(const std::vector<EvalItem>& dataset, const EvalMode& mode, const PipelineConfig& base,
                    PipelineContext ctx, Judge* judge);

nlohmann::json to_json(const Scorecard& s);
nlohmann::json to_json(const EvalResult& r);

}  // namespace structrag
