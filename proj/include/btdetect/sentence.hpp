#pragma once

#include <string>

#include "btdetect/errors.hpp"

namespace btdetect {

// BCP-47-style language code ("en", "fr", "ja"). Lowercase ASCII, non-empty.
class LanguageTag {
public:
    LanguageTag() = default;

    explicit LanguageTag(std::string code) : code_(std::move(code)) {
        if (code_.empty()) throw ConfigError("language tag must not be empty");
        for (char& c : code_) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
            if (!ok) throw ConfigError("language tag '" + code_ + "' contains non-ASCII or invalid characters");
        }
    }

    const std::string& code() const { return code_; }
    bool empty() const { return code_.empty(); }

    friend bool operator==(const LanguageTag& a, const LanguageTag& b) { return a.code_ == b.code_; }
    friend bool operator!=(const LanguageTag& a, const LanguageTag& b) { return !(a == b); }

private:
    std::string code_;
};

// The unit of detection: raw text plus its language.
struct Sentence {
    std::string text;
    LanguageTag language;
};

}  // namespace btdetect
