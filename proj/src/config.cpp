#include "structrag/config.hpp"

#include "structrag/text_util.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace structrag {

namespace {

struct Field {
    std::string key;  // section.key
    std::function<void(EngineConfig&, const std::string&)> set;
    std::function<std::optional<std::string>(const EngineConfig&)> get;  // TOML literal; nullopt -> omitted
};

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    auto v = text::trim(value);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError(key, "'" + value + "' is not a valid number");
    }
    return out;
}

template <typename T>
Field number_field(std::string key, std::function<T&(EngineConfig&)> ref) {
    return {key, [key, ref](EngineConfig& c, const std::string& v) { ref(c) = parse_number<T>(key, v); },
            [ref](const EngineConfig& c) -> std::optional<std::string> {
                T v = ref(const_cast<EngineConfig&>(c));
                if constexpr (std::is_floating_point_v<T>) {
                    return format_double(v);
                } else {
                    return std::to_string(v);
                }
            }};
}

Field string_field(std::string key, std::function<std::string&(EngineConfig&)> ref) {
    return {key, [ref](EngineConfig& c, const std::string& v) { ref(c) = v; },
            [ref](const EngineConfig& c) { return std::optional<std::string>(quote(ref(const_cast<EngineConfig&>(c)))); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> all = [] {
        std::vector<Field> f;
        f.push_back(string_field("backend.endpoint", [](EngineConfig& c) -> std::string& { return c.endpoint; }));
        f.push_back(string_field("backend.api_key_env", [](EngineConfig& c) -> std::string& { return c.api_key_env; }));
        f.push_back(
            string_field("backend.router_endpoint", [](EngineConfig& c) -> std::string& { return c.router_endpoint; }));
        f.push_back(number_field<std::size_t>("backend.max_in_flight",
                                              [](EngineConfig& c) -> std::size_t& { return c.max_in_flight; }));
        f.push_back(number_field<int>("backend.retry_attempts", [](EngineConfig& c) -> int& { return c.retry_attempts; }));
        f.push_back(number_field<int>("backend.retry_base_ms", [](EngineConfig& c) -> int& { return c.retry_base_ms; }));
        f.push_back(number_field<int>("backend.timeout_s", [](EngineConfig& c) -> int& { return c.timeout_s; }));

        for (std::size_t i = 0; i < kStageCount; ++i) {
            auto stage = std::string(to_string(static_cast<Stage>(i)));
            f.push_back(string_field("models." + stage,
                                     [i](EngineConfig& c) -> std::string& { return c.pipeline.models[i].model; }));
        }
        for (std::size_t i = 0; i < kStageCount; ++i) {
            auto stage = std::string(to_string(static_cast<Stage>(i)));
            f.push_back(number_field<double>("temperature." + stage,
                                             [i](EngineConfig& c) -> double& { return c.pipeline.models[i].temperature; }));
        }
        for (std::size_t i = 0; i < kStageCount; ++i) {
            auto stage = std::string(to_string(static_cast<Stage>(i)));
            f.push_back(number_field<int>("max_tokens." + stage,
                                          [i](EngineConfig& c) -> int& { return c.pipeline.models[i].max_output_tokens; }));
        }

        f.push_back(number_field<std::size_t>(
            "corpus.chunk_size", [](EngineConfig& c) -> std::size_t& { return c.pipeline.structurizer.chunk_size; }));
        f.push_back(number_field<std::size_t>(
            "corpus.chunk_overlap", [](EngineConfig& c) -> std::size_t& { return c.pipeline.structurizer.chunk_overlap; }));
        f.push_back(number_field<std::size_t>("corpus.core_budget",
                                              [](EngineConfig& c) -> std::size_t& { return c.pipeline.core_budget; }));

        f.push_back({"router.backend",
                     [](EngineConfig& c, const std::string& v) {
                         auto b = parse_router_backend(text::trim(v));
                         if (!b) throw ConfigError("router.backend", "expected endpoint, prompt, random or fixed");
                         c.pipeline.router.backend = *b;
                     },
                     [](const EngineConfig& c) { return std::optional<std::string>(quote(std::string(to_string(c.pipeline.router.backend)))); }});
        f.push_back({"router.fixed_type",
                     [](EngineConfig& c, const std::string& v) {
                         if (text::trim(v).empty()) {
                             c.pipeline.router.fixed_type.reset();
                             return;
                         }
                         auto t = parse_structure_type(v);
                         if (!t) throw ConfigError("router.fixed_type", "unknown structure type '" + v + "'");
                         c.pipeline.router.fixed_type = *t;
                     },
                     [](const EngineConfig& c) -> std::optional<std::string> {
                         if (!c.pipeline.router.fixed_type) return std::nullopt;
                         return quote(std::string(to_string(*c.pipeline.router.fixed_type)));
                     }});
        f.push_back({"router.seed",
                     [](EngineConfig& c, const std::string& v) {
                         if (text::trim(v).empty()) {
                             c.pipeline.router.seed.reset();
                             return;
                         }
                         c.pipeline.router.seed = parse_number<std::uint64_t>("router.seed", v);
                     },
                     [](const EngineConfig& c) -> std::optional<std::string> {
                         if (!c.pipeline.router.seed) return std::nullopt;
                         return std::to_string(*c.pipeline.router.seed);
                     }});
        f.push_back(number_field<std::size_t>("router.few_shot_k",
                                              [](EngineConfig& c) -> std::size_t& { return c.pipeline.router.few_shot_k; }));

        f.push_back(number_field<std::size_t>(
            "structurizer.chunk_top_k", [](EngineConfig& c) -> std::size_t& { return c.pipeline.structurizer.chunk_top_k; }));
        f.push_back(number_field<std::size_t>("structurizer.doc_context_budget", [](EngineConfig& c) -> std::size_t& {
            return c.pipeline.structurizer.doc_context_budget;
        }));
        f.push_back(number_field<std::size_t>(
            "utilizer.max_subquestions", [](EngineConfig& c) -> std::size_t& { return c.pipeline.utilizer.max_subquestions; }));
        f.push_back(number_field<std::size_t>("utilizer.extract_context_budget", [](EngineConfig& c) -> std::size_t& {
            return c.pipeline.utilizer.extract_context_budget;
        }));
        f.push_back(number_field<std::size_t>("factory.n_per_seed",
                                              [](EngineConfig& c) -> std::size_t& { return c.factory.n_per_seed; }));
        f.push_back(number_field<std::size_t>("factory.max_retries",
                                              [](EngineConfig& c) -> std::size_t& { return c.factory.max_retries; }));
        f.push_back(string_field("prompts.dir", [](EngineConfig& c) -> std::string& { return c.prompt_dir; }));
        return f;
    }();
    return all;
}

const Field* find_field(std::string_view key) {
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

std::string env_name(const std::string& key) {
    std::string out = "STRUCTRAG_";
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

void EngineConfig::validate() const {
    if (max_in_flight == 0 || max_in_flight > 256) throw ConfigError("backend.max_in_flight", "must be within [1, 256]");
    if (retry_attempts < 1 || retry_attempts > 20) throw ConfigError("backend.retry_attempts", "must be within [1, 20]");
    if (retry_base_ms < 0) throw ConfigError("backend.retry_base_ms", "must not be negative");
    if (timeout_s < 1) throw ConfigError("backend.timeout_s", "must be at least 1");
    if (pipeline.router.few_shot_k > 50) throw ConfigError("router.few_shot_k", "must be within [0, 50]");
    if (pipeline.utilizer.max_subquestions > 64) throw ConfigError("utilizer.max_subquestions", "must be within [1, 64]");
    if (factory.max_retries > 10) throw ConfigError("factory.max_retries", "must be within [0, 10]");
    pipeline.validate();
    factory.validate();
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& f : fields()) keys.push_back(f.key);
    return keys;
}

void set_config_value(EngineConfig& cfg, std::string_view key, std::string_view value) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError(std::string(key), "unknown configuration key");
    f->set(cfg, std::string(value));
}

void apply_config_text(EngineConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
        throw ConfigError("config", e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        std::string key = text::join(item.parents, ".");
        key += (key.empty() ? "" : ".") + item.name;
        if (item.inputs.size() > 1) throw ConfigError(key, "arrays are not supported");
        set_config_value(cfg, key, item.inputs.empty() ? std::string{} : item.inputs.front());
    }
}

void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(cfg, buf.str());
}

void apply_env(EngineConfig& cfg, const EnvLookup& env) {
    if (auto v = env("STRUCTRAG_ENDPOINT")) set_config_value(cfg, "backend.endpoint", *v);
    for (const auto& f : fields()) {
        if (auto v = env(env_name(f.key))) f.set(cfg, *v);
    }
}

std::string dump_config(const EngineConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        auto dot = f.key.find('.');
        auto sec = f.key.substr(0, dot);
        if (sec != section) {
            out += (out.empty() ? "" : "\n") + ("[" + sec + "]\n");
            section = sec;
        }
        if (auto v = f.get(cfg)) out += f.key.substr(dot + 1) + " = " + *v + "\n";
    }
    return out;
}

EngineConfig load_engine_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
    EngineConfig cfg;
    if (file) apply_config_file(cfg, *file);
    apply_env(cfg, env);
    cfg.validate();
    return cfg;
}

}  // namespace structrag
