#pragma once

#include <stdexcept>
#include <string>

namespace structrag {

// Root of every domain error raised by the engine. The CLI maps anything
// derived from this to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid knob values, unknown config keys, violated preconditions on
// caller-supplied parameters.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error("invalid configuration '" + key + "': " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace structrag
