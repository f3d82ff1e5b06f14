#pragma once

#include "structrag/errors.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace structrag {

enum class TemplateErrorKind { MissingSlot, UnknownSlot, Syntax, MissingAsset };

class TemplateError : public Error {
public:
    TemplateError(TemplateErrorKind kind, std::string name, const std::string& detail);

    TemplateErrorKind kind() const noexcept { return kind_; }
    // Slot name for Missing/UnknownSlot, template name otherwise.
    const std::string& name() const noexcept { return name_; }

private:
    TemplateErrorKind kind_;
    std::string name_;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

// Text with `{slot}` placeholders. Literal braces are written `{{` and `}}`.
// Slot names are [A-Za-z_][A-Za-z0-9_]*.
class PromptTemplate {
public:
    PromptTemplate(std::string name, std::string body);

    const std::string& name() const noexcept { return name_; }
    const std::string& body() const noexcept { return body_; }
    const std::set<std::string, std::less<>>& required_slots() const noexcept { return slots_; }

    // In strict mode a binding that names no slot is an error.
    std::string render(const Bindings& bindings, bool strict = false) const;

private:
    struct Piece {
        bool is_slot;
        std::string text;  // literal text or slot name
    };

    std::string name_;
    std::string body_;
    std::vector<Piece> pieces_;
    std::set<std::string, std::less<>> slots_;
};

// Prompt assets loaded from a directory of `<stage>[_<type>].txt` files
// plus any other text/JSON assets that live beside them.
class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir);

    const PromptTemplate& get(std::string_view name) const;
    bool contains(std::string_view name) const;

    // Raw content of a non-template asset, e.g. "router_examples.json".
    const std::string& asset(std::string_view file_name) const;

    // SHA-256 over every asset (sorted by file name), hex encoded.
    std::string checksum() const;

    const std::filesystem::path& directory() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::map<std::string, PromptTemplate, std::less<>> templates_;
    std::map<std::string, std::string, std::less<>> assets_;  // file name -> content
};

// Compile-time default asset directory (overridable by config).
std::filesystem::path default_prompt_dir();

}  // namespace structrag
