#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "btdetect/errors.hpp"

namespace btdetect {

namespace utf8 {

// Decodes UTF-8 into codepoints. Malformed bytes are consumed one at a
// time and kept as their byte value, so decoding is total and deterministic.
std::vector<char32_t> decode(std::string_view text);

void append(std::string& out, char32_t cp);
std::string encode(std::span<const char32_t> codepoints);

// Codepoint-wise reversal, preserving valid UTF-8.
std::string reverse(std::string_view text);

bool is_whitespace(char32_t cp);
bool is_punctuation(char32_t cp);

// Covers ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic. Everything
// else maps to itself.
char32_t to_lower(char32_t cp);

std::string lowercase(std::string_view text);

}  // namespace utf8

enum class TokenMode { word, character };

struct TokenizerConfig {
    TokenMode mode = TokenMode::word;
    bool lowercase = true;
};

// Output of tokenize(). Guaranteed by construction: no token is empty and,
// in word mode, no token contains whitespace.
struct TokenSequence {
    std::vector<std::string> tokens;
    TokenMode mode = TokenMode::word;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }

    // Tokens joined with single spaces. In word mode, re-tokenizing the
    // joined text reproduces the tokens exactly.
    std::string joined() const;
};

// Word mode splits on Unicode whitespace and detaches punctuation into
// standalone tokens; character mode emits one token per codepoint,
// whitespace excluded. Lowercasing, when enabled, happens first.
TokenSequence tokenize(std::string_view text, TokenMode mode, bool lowercase);
TokenSequence tokenize(std::string_view text, const TokenizerConfig& config);

// Multiset of n-token windows. Keys are the window tokens joined with a
// 0x1F separator (tokens can never contain it).
class NgramMultiset {
public:
    explicit NgramMultiset(int order);

    int order() const { return order_; }
    long long total() const { return total_; }
    long long count(const std::string& key) const;
    const std::unordered_map<std::string, long long>& counts() const { return counts_; }

    void add(std::string key);

    static constexpr char kSeparator = '\x1f';
    static std::string join(std::span<const std::string> window);

private:
    int order_;
    long long total_ = 0;
    std::unordered_map<std::string, long long> counts_;
};

// Sliding window of width n over the sequence. Sequences shorter than n
// produce an empty multiset. n < 1 is an invalid order.
NgramMultiset extract_ngrams(const TokenSequence& seq, int n);

}  // namespace btdetect
