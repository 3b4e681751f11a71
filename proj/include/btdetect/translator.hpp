#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "btdetect/sentence.hpp"
#include "btdetect/tokenizer.hpp"

namespace btdetect {

// One back-translation round trip, with provenance. pass_count is the total
// number of machine-translation passes from the text's true origin when that
// is known; -1 means unknown.
struct BackTranslationRecord {
    Sentence original;
    Sentence pivot;
    Sentence back_translation;
    std::string engine_id;
    int pass_count = -1;
    std::string timestamp;  // of the forward-leg cache entry; empty when uncached
};

class TranslatorBackend {
public:
    virtual ~TranslatorBackend() = default;

    // Stable engine identifier, including a version marker. Part of cache keys.
    virtual std::string id() const = 0;

    virtual std::string translate_raw(const std::string& text, const LanguageTag& src,
                                      const LanguageTag& tgt) = 0;
};

// Deterministic offline backend. The round trip home -> pivot -> home is a
// projection on word sequences: it canonicalizes each word (lowercase,
// collapse doubled letters, seeded synonym substitution) and is therefore
// idempotent. Texts already in canonical form come back unchanged.
class FixtureBackend : public TranslatorBackend {
public:
    explicit FixtureBackend(LanguageTag home_language = LanguageTag("en"), std::uint64_t seed = 42);

    std::string id() const override;
    std::string translate_raw(const std::string& text, const LanguageTag& src,
                              const LanguageTag& tgt) override;

    // Canonical form of a single lowercase word.
    std::string canonicalize_word(const std::string& word) const;

    // The full round trip home -> pivot -> home in one call.
    std::string project(const std::string& text) const;

    bool is_fixed_point_word(const std::string& word) const;
    const LanguageTag& home_language() const { return home_; }

private:
    LanguageTag home_;
    std::uint64_t seed_;
    std::unordered_map<std::string, std::string> synonyms_;
};

// Serves only what a previously recorded cache contains. It impersonates the
// recorded engine id so the cache lookups match; any actual call is a miss.
class ReplayBackend : public TranslatorBackend {
public:
    explicit ReplayBackend(std::string recorded_engine_id);

    std::string id() const override;
    std::string translate_raw(const std::string& text, const LanguageTag& src,
                              const LanguageTag& tgt) override;

private:
    std::string engine_id_;
};

struct RetryPolicy {
    int retries = 3;
    int initial_backoff_ms = 1000;
    double multiplier = 2.0;
};

struct HttpBackendConfig {
    std::string endpoint;   // e.g. "https://api.example.com/translate"
    std::string api_key;    // sent as a bearer token when non-empty
    std::string engine_id;  // defaults to "http:<host>" when empty
    RetryPolicy retry;
    int timeout_seconds = 30;
};

// Generic JSON-over-HTTP translation client: POST {text, source, target},
// expects {translation} (vendor variants are tolerated by the response
// adapter). Retries transient failures with exponential backoff.
class HttpTranslatorBackend : public TranslatorBackend {
public:
    explicit HttpTranslatorBackend(HttpBackendConfig config);

    std::string id() const override;
    std::string translate_raw(const std::string& text, const LanguageTag& src,
                              const LanguageTag& tgt) override;

    // Extracts the translated text from a response body. Exposed for tests.
    static std::string parse_response_body(const std::string& body);

private:
    HttpBackendConfig config_;
    std::string scheme_host_;  // "http://host:port"
    std::string path_;
};

struct TranslationCacheEntry {
    std::string key;  // digest of (text, src, tgt, engine_id)
    std::string source_text;
    std::string translated_text;
    std::string timestamp;
};

// Write-once translation cache: an in-memory map, optionally persisted as
// append-only JSONL files, one per (engine, language pair). Reads are
// concurrent; writes are serialized. In-memory lookups use the exact
// (text, src, tgt, engine) composite; the digest is a stable line field.
class TranslationCache {
public:
    TranslationCache() = default;
    explicit TranslationCache(std::filesystem::path cache_dir);

    static std::string digest(const std::string& text, const LanguageTag& src,
                              const LanguageTag& tgt, const std::string& engine_id);

    std::optional<TranslationCacheEntry> lookup(const std::string& text, const LanguageTag& src,
                                                const LanguageTag& tgt,
                                                const std::string& engine_id) const;

    // Inserts unless the key exists; returns the entry that ended up stored.
    TranslationCacheEntry store(const std::string& text, const std::string& translated_text,
                                const LanguageTag& src, const LanguageTag& tgt,
                                const std::string& engine_id);

    std::size_t size() const;
    bool persistent() const { return !cache_dir_.empty(); }

private:
    void load_all();
    std::filesystem::path file_for(const std::string& engine_id, const LanguageTag& src,
                                   const LanguageTag& tgt) const;

    std::filesystem::path cache_dir_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, TranslationCacheEntry> entries_;  // composite -> entry
};

struct BatchItemError {
    std::size_t index = 0;
    std::string message;
};

struct BatchResult {
    std::vector<std::optional<BackTranslationRecord>> records;  // positions preserved
    std::vector<BatchItemError> failures;                       // sorted by index

    bool all_ok() const { return failures.empty(); }
};

// Cache-first translation front end over a backend.
class TranslationService {
public:
    TranslationService(std::shared_ptr<TranslatorBackend> backend,
                       std::optional<std::filesystem::path> cache_dir = std::nullopt);

    // Cache hit returns the stored value with no backend call.
    std::string translate(const std::string& text, const LanguageTag& src, const LanguageTag& tgt);

    BackTranslationRecord back_translate(const Sentence& sentence, const LanguageTag& intermediate,
                                         int known_input_passes = -1);

    // Order-preserving; at most max_in_flight backend requests outstanding.
    // Per-item failures are collected, not fatal.
    BatchResult batch_back_translate(std::span<const Sentence> sentences,
                                     const LanguageTag& intermediate, int max_in_flight,
                                     int known_input_passes = -1);

    std::string engine_id() const { return backend_->id(); }
    std::size_t backend_calls() const;  // instrumentation for cache-contract tests
    std::size_t cache_size() const { return cache_.size(); }

private:
    struct Leg {
        std::string text;
        std::string timestamp;
    };
    Leg translate_leg(const std::string& text, const LanguageTag& src, const LanguageTag& tgt,
                      const char* leg_name);

    std::shared_ptr<TranslatorBackend> backend_;
    TranslationCache cache_;
    std::atomic<std::size_t> backend_calls_{0};
};

}  // namespace btdetect
