#include "btdetect/tokenizer.hpp"

namespace btdetect {

namespace utf8 {

std::vector<char32_t> decode(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
    while (i < text.size()) {
        unsigned char b0 = byte(i);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            len = 1;
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(b0);  // stray continuation or invalid lead byte
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(b0);
            ++i;
            continue;
        }
        bool valid = true;
        for (std::size_t k = 1; k < len; ++k) {
            unsigned char bk = byte(i + k);
            if ((bk & 0xC0) != 0x80) {
                valid = false;
                break;
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
        if (!valid || cp > 0x10FFFF) {
            out.push_back(b0);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode(std::span<const char32_t> codepoints) {
    std::string out;
    out.reserve(codepoints.size());
    for (char32_t cp : codepoints) append(out, cp);
    return out;
}

std::string reverse(std::string_view text) {
    auto cps = decode(text);
    std::string out;
    out.reserve(text.size());
    for (auto it = cps.rbegin(); it != cps.rend(); ++it) append(out, *it);
    return out;
}

bool is_whitespace(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punctuation(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
               (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    }
    switch (cp) {
        case 0xA1: case 0xA7: case 0xAB: case 0xBB: case 0xBF:
            return true;
        default:
            break;
    }
    if (cp >= 0x2010 && cp <= 0x2027) return true;   // dashes, quotes, ellipsis
    if (cp >= 0x2030 && cp <= 0x205E) return true;   // general punctuation
    if (cp >= 0x3001 && cp <= 0x303F) return true;   // CJK punctuation
    if (cp >= 0xFF01 && cp <= 0xFF0F) return true;   // fullwidth forms
    if (cp >= 0xFF1A && cp <= 0xFF20) return true;
    if (cp >= 0xFF3B && cp <= 0xFF40) return true;
    if (cp >= 0xFF5B && cp <= 0xFF65) return true;
    return false;
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // Latin-1
    if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;  // Y with diaeresis
    if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;  // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                 // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

std::string lowercase(std::string_view text) {
    auto cps = decode(text);
    for (auto& cp : cps) cp = to_lower(cp);
    return encode(cps);
}

}  // namespace utf8

std::string TokenSequence::joined() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

TokenSequence tokenize(std::string_view text, TokenMode mode, bool lowercase) {
    TokenSequence seq;
    seq.mode = mode;
    auto cps = utf8::decode(text);
    if (lowercase) {
        for (auto& cp : cps) cp = utf8::to_lower(cp);
    }

    if (mode == TokenMode::character) {
        for (char32_t cp : cps) {
            if (utf8::is_whitespace(cp)) continue;
            std::string tok;
            utf8::append(tok, cp);
            seq.tokens.push_back(std::move(tok));
        }
        return seq;
    }

    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            seq.tokens.push_back(std::move(current));
            current.clear();
        }
    };
    for (char32_t cp : cps) {
        if (utf8::is_whitespace(cp)) {
            flush();
        } else if (utf8::is_punctuation(cp)) {
            flush();
            std::string tok;
            utf8::append(tok, cp);
            seq.tokens.push_back(std::move(tok));
        } else {
            utf8::append(current, cp);
        }
    }
    flush();
    return seq;
}

TokenSequence tokenize(std::string_view text, const TokenizerConfig& config) {
    return tokenize(text, config.mode, config.lowercase);
}

NgramMultiset::NgramMultiset(int order) : order_(order) {
    if (order < 1) throw InvalidOrderError("n-gram order must be >= 1, got " + std::to_string(order));
}

long long NgramMultiset::count(const std::string& key) const {
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
}

void NgramMultiset::add(std::string key) {
    ++counts_[std::move(key)];
    ++total_;
}

std::string NgramMultiset::join(std::span<const std::string> window) {
    std::string key;
    for (std::size_t i = 0; i < window.size(); ++i) {
        if (i > 0) key.push_back(kSeparator);
        key += window[i];
    }
    return key;
}

NgramMultiset extract_ngrams(const TokenSequence& seq, int n) {
    NgramMultiset grams(n);
    const auto& toks = seq.tokens;
    if (toks.size() < static_cast<std::size_t>(n)) return grams;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        grams.add(NgramMultiset::join(std::span(toks).subspan(i, static_cast<std::size_t>(n))));
    }
    return grams;
}

}  // namespace btdetect
