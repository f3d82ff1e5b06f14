#pragma once

#include "structrag/gateway.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

namespace structrag {

// Deterministic offline backend replaying recorded model outputs.
//
// Lookup order for a request (tag, ordinal, prompt):
//   1. rules for the tag whose `match` regex / `contains` substring hits the
//      user prompt, in registration order;
//   2. the entry keyed (tag, ordinal);
//   3. the tag's default entry.
// An entry holding several responses returns them in sequence and then
// repeats the last one, so repair rounds and re-draws can be scripted.
// No match raises MalformedResponse naming the tag.
//
// Fixture files are JSON objects:
//   { "default_latency_ms": 0,
//     "responses": [ {"tag": "router", "ordinal": 0, "response": "table"},
//                    {"tag": "extract", "contains": "revenue", "responses": ["..", ".."]},
//                    {"tag": "judge", "response": "..", "latency_ms": 20} ] }
class ScriptedBackend final : public ChatBackend {
public:
    struct CallRecord {
        Stage tag;
        std::size_t ordinal;
        std::string system;
        std::string user;
    };

    explicit ScriptedBackend(std::shared_ptr<VirtualClock> clock = nullptr, double default_latency_ms = 0.0);

    void add(Stage tag, std::size_t ordinal, std::vector<std::string> responses, std::optional<double> latency_ms = {});
    void add_default(Stage tag, std::vector<std::string> responses, std::optional<double> latency_ms = {});
    void add_regex_rule(Stage tag, const std::string& pattern, std::vector<std::string> responses,
                        std::optional<double> latency_ms = {});
    void add_contains_rule(Stage tag, std::string needle, std::vector<std::string> responses,
                           std::optional<double> latency_ms = {});

    void load_json(const nlohmann::json& fixture);
    // Loads every *.json file in `dir` in file-name order.
    void load_dir(const std::filesystem::path& dir);

    ChatResponse complete(const ChatRequest& request) override;

    std::vector<CallRecord> calls() const;
    std::size_t call_count(Stage tag) const;

private:
    struct Entry {
        std::vector<std::string> responses;
        std::optional<double> latency_ms;
        std::size_t served = 0;
    };
    struct Rule {
        Stage tag;
        std::optional<std::regex> pattern;
        std::string needle;
        Entry entry;
    };

    std::string take(Entry& e, double& latency);

    std::shared_ptr<VirtualClock> clock_;
    double default_latency_ms_;

    mutable std::mutex mutex_;
    std::vector<Rule> rules_;
    std::map<std::pair<Stage, std::size_t>, Entry> keyed_;
    std::map<Stage, Entry> defaults_;
    std::vector<CallRecord> calls_;
};

}  // namespace structrag
