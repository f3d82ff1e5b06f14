#include "structrag/scripted_backend.hpp"

#include <algorithm>
#include <fstream>

namespace structrag {

namespace {

std::vector<std::string> responses_of(const nlohmann::json& item) {
    if (item.contains("responses")) return item.at("responses").get<std::vector<std::string>>();
    if (item.contains("response")) return {item.at("response").get<std::string>()};
    throw ConfigError("scripted.responses", "fixture entry has neither 'response' nor 'responses'");
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::shared_ptr<VirtualClock> clock, double default_latency_ms)
    : clock_(std::move(clock)), default_latency_ms_(default_latency_ms) {}

void ScriptedBackend::add(Stage tag, std::size_t ordinal, std::vector<std::string> responses,
                          std::optional<double> latency_ms) {
    std::lock_guard lock(mutex_);
    keyed_[{tag, ordinal}] = Entry{std::move(responses), latency_ms};
}

void ScriptedBackend::add_default(Stage tag, std::vector<std::string> responses, std::optional<double> latency_ms) {
    std::lock_guard lock(mutex_);
    defaults_[tag] = Entry{std::move(responses), latency_ms};
}

void ScriptedBackend::add_regex_rule(Stage tag, const std::string& pattern, std::vector<std::string> responses,
                                     std::optional<double> latency_ms) {
    std::lock_guard lock(mutex_);
    rules_.push_back({tag, std::regex(pattern), {}, Entry{std::move(responses), latency_ms}});
}

void ScriptedBackend::add_contains_rule(Stage tag, std::string needle, std::vector<std::string> responses,
                                        std::optional<double> latency_ms) {
    std::lock_guard lock(mutex_);
    rules_.push_back({tag, std::nullopt, std::move(needle), Entry{std::move(responses), latency_ms}});
}

void ScriptedBackend::load_json(const nlohmann::json& fixture) {
    if (fixture.contains("default_latency_ms")) default_latency_ms_ = fixture.at("default_latency_ms").get<double>();
    for (const auto& item : fixture.value("responses", nlohmann::json::array())) {
        auto tag_name = item.at("tag").get<std::string>();
        auto tag = parse_stage(tag_name);
        if (!tag) throw ConfigError("scripted.tag", "unknown stage tag '" + tag_name + "'");
        std::optional<double> latency;
        if (item.contains("latency_ms")) latency = item.at("latency_ms").get<double>();
        auto responses = responses_of(item);
        if (item.contains("match")) {
            add_regex_rule(*tag, item.at("match").get<std::string>(), std::move(responses), latency);
        } else if (item.contains("contains")) {
            add_contains_rule(*tag, item.at("contains").get<std::string>(), std::move(responses), latency);
        } else if (item.contains("ordinal")) {
            add(*tag, item.at("ordinal").get<std::size_t>(), std::move(responses), latency);
        } else {
            add_default(*tag, std::move(responses), latency);
        }
    }
}

void ScriptedBackend::load_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("scripted", "fixture directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        try {
            load_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("scripted", f.string() + ": " + e.what());
        }
    }
}

std::string ScriptedBackend::take(Entry& e, double& latency) {
    latency = e.latency_ms.value_or(default_latency_ms_);
    if (e.responses.empty()) return {};
    std::size_t i = std::min(e.served, e.responses.size() - 1);
    ++e.served;
    return e.responses[i];
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    std::string text;
    double latency = 0.0;
    {
        std::lock_guard lock(mutex_);
        calls_.push_back({request.tag, request.ordinal, request.system, request.user});

        bool found = false;
        for (auto& rule : rules_) {
            if (rule.tag != request.tag) continue;
            bool hit = rule.pattern ? std::regex_search(request.user, *rule.pattern)
                                    : request.user.find(rule.needle) != std::string::npos;
            if (hit) {
                text = take(rule.entry, latency);
                found = true;
                break;
            }
        }
        if (!found) {
            if (auto it = keyed_.find({request.tag, request.ordinal}); it != keyed_.end()) {
                text = take(it->second, latency);
                found = true;
            } else if (auto d = defaults_.find(request.tag); d != defaults_.end()) {
                text = take(d->second, latency);
                found = true;
            }
        }
        if (!found) {
            throw MalformedResponse("no scripted response for tag '" + std::string(to_string(request.tag)) +
                                    "' ordinal " + std::to_string(request.ordinal));
        }
    }
    if (clock_) clock_->advance(latency);
    return ChatResponse{std::move(text), {}, latency};
}

std::vector<ScriptedBackend::CallRecord> ScriptedBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::size_t ScriptedBackend::call_count(Stage tag) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(calls_.begin(), calls_.end(), [tag](const CallRecord& c) { return c.tag == tag; }));
}

}  // namespace structrag
