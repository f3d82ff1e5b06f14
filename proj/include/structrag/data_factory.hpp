#pragma once

#include "structrag/pipeline.hpp"

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace structrag {

enum class Language { en, zh };

std::string_view to_string(Language l) noexcept;
std::optional<Language> parse_language(std::string_view s) noexcept;

struct SeedTask {
    std::string id;
    std::string question;
    std::string core_content;
    Language language = Language::en;
    std::optional<StructureType> type;  // the structure the seed exemplifies, if labelled
};

struct SyntheticTask {
    std::string id;
    std::string question;
    std::string core_content;
    Language language = Language::en;
    std::string seed_id;

    bool operator==(const SyntheticTask&) const = default;
};

struct SimulatedSolution {
    std::string task_id;
    StructureType structure_type = StructureType::chunk;
    std::string solution_sketch;
};

struct PreferencePair {
    std::string question;
    std::string core_content;
    StructureType chosen = StructureType::table;
    StructureType rejected = StructureType::chunk;
    Language language = Language::en;

    bool operator==(const PreferencePair&) const = default;
};

class SynthesisExhausted : public Error {
public:
    explicit SynthesisExhausted(std::string seed_id);
    const std::string& seed_id() const noexcept { return seed_id_; }

private:
    std::string seed_id_;
};

// A simulate call failed; names the task and structure type.
class SimulationFailed : public Error {
public:
    SimulationFailed(std::string task_id, StructureType type, std::exception_ptr cause, const std::string& detail);
    const std::string& task_id() const noexcept { return task_id_; }
    StructureType structure_type() const noexcept { return type_; }
    std::exception_ptr cause() const noexcept { return cause_; }

private:
    std::string task_id_;
    StructureType type_;
    std::exception_ptr cause_;
};

class ExportIoError : public Error {
public:
    using Error::Error;
};

struct FactoryConfig {
    std::size_t n_per_seed = 5;
    std::size_t max_retries = 2;  // extra draws per task after a duplicate

    void validate() const;
    bool operator==(const FactoryConfig&) const = default;
};

// Seeds JSONL: {"question", "core_content", "language"} plus optional
// "id" (default "seed-<line number>") and "type".
std::vector<SeedTask> load_seeds(const std::filesystem::path& path);

// Reads "QUESTION: ..." / "CORE CONTENT: ..." sections from a synthesis reply.
std::optional<std::pair<std::string, std::string>> parse_synthesized(std::string_view reply);

// Seeds run concurrently; draws for one seed are sequential (calls are
// labelled with the seed's index). Tasks come back in seed order. Labelled
// seeds that leave a structure type uncovered only produce a warning.
std::vector<SyntheticTask> synthesize_tasks(const std::vector<SeedTask>& seeds, const FactoryConfig& cfg,
                                            StageContext ctx, const ModelSettings& model);

// Five sketches, one per structure type in canonical order. `task_index`
// labels the calls (task_index * 5 + type index).
std::vector<SimulatedSolution> simulate_solutions(const SyntheticTask& task, std::size_t task_index, StageContext ctx,
                                                  const ModelSettings& model);

// Best-vs-rest pairs (4 per task). An unparseable verdict discards the task.
std::vector<PreferencePair> judge(const SyntheticTask& task, const std::vector<SimulatedSolution>& solutions,
                                  std::size_t task_index, StageContext ctx, const ModelSettings& model);

struct FactoryResult {
    std::vector<SyntheticTask> tasks;
    std::vector<PreferencePair> pairs;  // task order
    std::size_t skipped_tasks = 0;
};

FactoryResult run_factory(const std::vector<SeedTask>& seeds, const FactoryConfig& cfg, StageContext ctx,
                          const PipelineConfig& models);

// One JSON object per line: {"prompt", "chosen", "rejected", "language",
// "question", "core_content"}; `prompt` is the rendered router prompt.
std::size_t export_jsonl(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path,
                         const PromptLibrary& prompts);
std::vector<PreferencePair> import_jsonl(const std::filesystem::path& path);

}  // namespace structrag
