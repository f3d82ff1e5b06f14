#include "structrag/prompt_template.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#ifndef STRUCTRAG_PROMPT_DIR
#define STRUCTRAG_PROMPT_DIR "prompts"
#endif

namespace structrag {

namespace {

std::string_view kind_name(TemplateErrorKind k) {
    switch (k) {
        case TemplateErrorKind::MissingSlot: return "MissingSlot";
        case TemplateErrorKind::UnknownSlot: return "UnknownSlot";
        case TemplateErrorKind::Syntax: return "TemplateSyntax";
        case TemplateErrorKind::MissingAsset: return "MissingPromptAsset";
    }
    return "TemplateError";
}

bool is_slot_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_slot_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TemplateError::TemplateError(TemplateErrorKind kind, std::string name, const std::string& detail)
    : Error(std::string(kind_name(kind)) + "(" + name + ")" + (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      name_(std::move(name)) {}

PromptTemplate::PromptTemplate(std::string name, std::string body) : name_(std::move(name)), body_(std::move(body)) {
    std::string literal;
    const std::string& b = body_;
    for (std::size_t i = 0; i < b.size(); ++i) {
        char c = b[i];
        if (c == '{' && i + 1 < b.size() && b[i + 1] == '{') {
            literal += '{';
            ++i;
        } else if (c == '}' && i + 1 < b.size() && b[i + 1] == '}') {
            literal += '}';
            ++i;
        } else if (c == '{') {
            std::size_t close = b.find('}', i + 1);
            if (close == std::string::npos) {
                throw TemplateError(TemplateErrorKind::Syntax, name_, "unterminated '{' at offset " + std::to_string(i));
            }
            std::string slot = b.substr(i + 1, close - i - 1);
            bool valid = !slot.empty() && is_slot_start(slot[0]);
            for (char sc : slot) valid = valid && is_slot_char(sc);
            if (!valid) {
                throw TemplateError(TemplateErrorKind::Syntax, name_,
                                    "invalid placeholder '{" + slot + "}' (write '{{' for a literal brace)");
            }
            if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
            literal.clear();
            slots_.insert(slot);
            pieces_.push_back({true, std::move(slot)});
            i = close;
        } else if (c == '}') {
            throw TemplateError(TemplateErrorKind::Syntax, name_, "stray '}' at offset " + std::to_string(i));
        } else {
            literal += c;
        }
    }
    if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
}

std::string PromptTemplate::render(const Bindings& bindings, bool strict) const {
    for (const auto& slot : slots_) {
        if (!bindings.count(slot)) throw TemplateError(TemplateErrorKind::MissingSlot, slot, "in template " + name_);
    }
    if (strict) {
        for (const auto& [key, value] : bindings) {
            if (!slots_.count(key)) throw TemplateError(TemplateErrorKind::UnknownSlot, key, "in template " + name_);
        }
    }
    std::string out;
    for (const auto& p : pieces_) out += p.is_slot ? bindings.find(p.text)->second : p.text;
    return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw TemplateError(TemplateErrorKind::MissingAsset, dir.string(), "prompt directory not found");
    }
    PromptLibrary lib;
    lib.dir_ = dir;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto name = entry.path().filename().string();
        auto ext = entry.path().extension().string();
        if (ext != ".txt" && ext != ".json") continue;
        std::string content = read_all(entry.path());
        if (ext == ".txt") lib.templates_.emplace(entry.path().stem().string(), PromptTemplate(name, content));
        lib.assets_.emplace(name, std::move(content));
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw TemplateError(TemplateErrorKind::MissingAsset, std::string(name),
                            "no " + std::string(name) + ".txt in " + dir_.string());
    }
    return it->second;
}

bool PromptLibrary::contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }

const std::string& PromptLibrary::asset(std::string_view file_name) const {
    auto it = assets_.find(file_name);
    if (it == assets_.end()) {
        throw TemplateError(TemplateErrorKind::MissingAsset, std::string(file_name), "not found in " + dir_.string());
    }
    return it->second;
}

std::string PromptLibrary::checksum() const {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    for (const auto& [name, content] : assets_) {
        EVP_DigestUpdate(ctx.get(), name.data(), name.size() + 1);  // includes the NUL separator
        EVP_DigestUpdate(ctx.get(), content.data(), content.size());
        const char sep = '\0';
        EVP_DigestUpdate(ctx.get(), &sep, 1);
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::filesystem::path default_prompt_dir() { return STRUCTRAG_PROMPT_DIR; }

}  // namespace structrag
