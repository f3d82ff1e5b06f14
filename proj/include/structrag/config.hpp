#pragma once

#include "structrag/data_factory.hpp"
#include "structrag/pipeline.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace structrag {

struct EngineConfig {
    // [backend]
    std::string endpoint;
    std::string api_key_env = "STRUCTRAG_API_KEY";  // name of the variable holding the key
    std::string router_endpoint;                    // trained router; empty -> endpoint
    std::size_t max_in_flight = 4;
    int retry_attempts = 3;
    int retry_base_ms = 500;
    int timeout_s = 120;
    // [prompts]
    std::string prompt_dir;  // empty -> built-in asset directory

    PipelineConfig pipeline;
    FactoryConfig factory;

    void validate() const;
    bool operator==(const EngineConfig&) const = default;
};

// Environment lookup, injectable for tests.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Every settable key as "section.key", in dump order.
std::vector<std::string> config_keys();

// Sets one "section.key" from its textual value. Unknown keys and
// unparseable values raise ConfigError naming the key.
void set_config_value(EngineConfig& cfg, std::string_view key, std::string_view value);

// Reads a TOML-style file (sections, key = value, # comments) over `cfg`.
void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path);
void apply_config_text(EngineConfig& cfg, const std::string& text);

// STRUCTRAG_<SECTION>_<KEY> for every key, plus the STRUCTRAG_ENDPOINT
// shorthand for backend.endpoint.
void apply_env(EngineConfig& cfg, const EnvLookup& env);

// Canonical file form; loading it back yields an equal config.
std::string dump_config(const EngineConfig& cfg);

// defaults <- file (if given) <- environment; validated.
EngineConfig load_engine_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env);

}  // namespace structrag
