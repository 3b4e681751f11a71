#include "btdetect/translator.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "btdetect/io.hpp"
#include "btdetect/random.hpp"

namespace btdetect {

namespace {

using nlohmann::json;

constexpr char kKeySep = '\x1f';

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string to_hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

// Removes consecutive duplicate codepoints within a word. Idempotent.
std::string collapse_doubles(const std::string& word) {
    auto cps = utf8::decode(word);
    std::string out;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (i > 0 && cps[i] == cps[i - 1]) continue;
        utf8::append(out, cps[i]);
    }
    return out;
}

// Pool the seeded synonym map draws from. Plain lowercase words.
const std::vector<std::string>& synonym_pool() {
    static const std::vector<std::string> pool{
        "big",   "large",  "small", "quick",  "fast",  "slow",  "happy", "glad",
        "sad",   "angry",  "smart", "bright", "dark",  "cold",  "warm",  "hot",
        "old",   "new",    "young", "tall",   "wide",  "deep",  "strong", "weak",
        "rich",  "poor",   "clean", "early",  "late",  "easy",  "hard",  "soft",
        "loud",  "quiet",  "empty", "open",   "light", "heavy", "near",  "far",
        "fine",  "nice",   "kind",  "calm",   "wild",  "brave", "bold",  "plain",
        "clear", "sharp",  "fair",  "safe",   "sure",  "pure",  "grand", "vast",
    };
    return pool;
}

}  // namespace

// ---------------------------------------------------------------------------
// FixtureBackend

FixtureBackend::FixtureBackend(LanguageTag home_language, std::uint64_t seed)
    : home_(std::move(home_language)), seed_(seed) {
    auto words = synonym_pool();
    std::mt19937_64 gen(seed_);
    rng::shuffle(words, gen);

    std::unordered_map<std::string, bool> is_key;
    for (std::size_t i = 0; i + 1 < words.size(); i += 2) is_key[words[i]] = true;
    for (std::size_t i = 0; i + 1 < words.size(); i += 2) {
        const std::string& key = words[i];
        std::string target = collapse_doubles(words[i + 1]);
        if (target == key || is_key.count(target)) continue;  // keep the map idempotent
        synonyms_[key] = target;
    }
}

std::string FixtureBackend::id() const { return "fixture/seed" + std::to_string(seed_); }

std::string FixtureBackend::canonicalize_word(const std::string& word) const {
    std::string collapsed = collapse_doubles(word);
    auto it = synonyms_.find(collapsed);
    return it == synonyms_.end() ? collapsed : it->second;
}

std::string FixtureBackend::translate_raw(const std::string& text, const LanguageTag& src,
                                          const LanguageTag& tgt) {
    auto seq = tokenize(text, TokenMode::word, /*lowercase=*/true);
    std::vector<std::string> out;
    out.reserve(seq.size());
    if (src == home_) {
        for (const auto& tok : seq.tokens) out.push_back(utf8::reverse(canonicalize_word(tok)));
    } else if (tgt == home_) {
        for (const auto& tok : seq.tokens) out.push_back(canonicalize_word(utf8::reverse(tok)));
    } else {
        for (const auto& tok : seq.tokens) out.push_back(canonicalize_word(tok));
    }
    TokenSequence joined{std::move(out), TokenMode::word};
    return joined.joined();
}

std::string FixtureBackend::project(const std::string& text) const {
    auto seq = tokenize(text, TokenMode::word, /*lowercase=*/true);
    std::vector<std::string> out;
    out.reserve(seq.size());
    for (const auto& tok : seq.tokens) out.push_back(canonicalize_word(tok));
    TokenSequence joined{std::move(out), TokenMode::word};
    return joined.joined();
}

bool FixtureBackend::is_fixed_point_word(const std::string& word) const {
    return project(word) == word;
}

// ---------------------------------------------------------------------------
// ReplayBackend

ReplayBackend::ReplayBackend(std::string recorded_engine_id)
    : engine_id_(std::move(recorded_engine_id)) {
    if (engine_id_.empty()) throw ConfigError("replay backend needs the recorded engine id");
}

std::string ReplayBackend::id() const { return engine_id_; }

std::string ReplayBackend::translate_raw(const std::string& text, const LanguageTag& src,
                                         const LanguageTag& tgt) {
    (void)text;
    throw ReplayMissError("replay cache miss for " + src.code() + "->" + tgt.code() +
                          " on engine " + engine_id_);
}

// ---------------------------------------------------------------------------
// HttpTranslatorBackend

HttpTranslatorBackend::HttpTranslatorBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const std::string& url = config_.endpoint;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("translator endpoint must be an http(s) URL, got '" + url + "'");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_ = url;
        path_ = "/translate";
    } else {
        scheme_host_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
    if (config_.engine_id.empty()) {
        config_.engine_id = "http:" + url.substr(scheme_end + 3, path_start == std::string::npos
                                                                     ? std::string::npos
                                                                     : path_start - scheme_end - 3);
    }
}

std::string HttpTranslatorBackend::id() const { return config_.engine_id; }

std::string HttpTranslatorBackend::parse_response_body(const std::string& body) {
    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::exception& e) {
        throw TranslationError(std::string("translation response is not valid JSON: ") + e.what());
    }
    if (parsed.contains("translation") && parsed["translation"].is_string()) {
        return parsed["translation"].get<std::string>();
    }
    if (parsed.contains("translatedText") && parsed["translatedText"].is_string()) {
        return parsed["translatedText"].get<std::string>();
    }
    // Google v2 shape: {"data": {"translations": [{"translatedText": ...}]}}
    if (parsed.contains("data") && parsed["data"].contains("translations") &&
        parsed["data"]["translations"].is_array() && !parsed["data"]["translations"].empty()) {
        const auto& first = parsed["data"]["translations"][0];
        if (first.contains("translatedText") && first["translatedText"].is_string()) {
            return first["translatedText"].get<std::string>();
        }
    }
    throw TranslationError("translation response carries no recognizable translation field");
}

std::string HttpTranslatorBackend::translate_raw(const std::string& text, const LanguageTag& src,
                                                 const LanguageTag& tgt) {
    const std::string call = "POST " + scheme_host_ + path_ + " (" + src.code() + "->" + tgt.code() +
                             ") on engine " + config_.engine_id;
    json body{{"text", text}, {"source", src.code()}, {"target", tgt.code()}};
    const std::string payload = body.dump();

    std::string last_error;
    bool quota_hit = false;
    double backoff_ms = static_cast<double>(config_.retry.initial_backoff_ms);
    for (int attempt = 0; attempt <= config_.retry.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long long>(backoff_ms)));
            backoff_ms *= config_.retry.multiplier;
        }
        httplib::Client client(scheme_host_);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            return parse_response_body(res->body);
        }
        if (res->status == 429) {
            quota_hit = true;
            last_error = "HTTP 429 (quota exceeded)";
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        // Remaining 4xx responses will not improve with retries.
        throw TranslationError(call + " failed: HTTP " + std::to_string(res->status) + " " +
                               res->body);
    }
    if (quota_hit) throw QuotaExceededError(call + " failed after retries: " + last_error);
    throw BackendUnreachableError(call + " failed after " +
                                  std::to_string(config_.retry.retries + 1) +
                                  " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// TranslationCache

TranslationCache::TranslationCache(std::filesystem::path cache_dir)
    : cache_dir_(std::move(cache_dir)) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + cache_dir_.string() + ": " + ec.message());
    load_all();
}

std::string TranslationCache::digest(const std::string& text, const LanguageTag& src,
                                     const LanguageTag& tgt, const std::string& engine_id) {
    std::string composite = text;
    composite += kKeySep;
    composite += src.code();
    composite += kKeySep;
    composite += tgt.code();
    composite += kKeySep;
    composite += engine_id;
    return to_hex64(rng::fnv1a64(composite));
}

namespace {
std::string composite_key(const std::string& text, const LanguageTag& src, const LanguageTag& tgt,
                          const std::string& engine_id) {
    std::string k = src.code();
    k += kKeySep;
    k += tgt.code();
    k += kKeySep;
    k += engine_id;
    k += kKeySep;
    k += text;
    return k;
}
}  // namespace

std::optional<TranslationCacheEntry> TranslationCache::lookup(const std::string& text,
                                                              const LanguageTag& src,
                                                              const LanguageTag& tgt,
                                                              const std::string& engine_id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(composite_key(text, src, tgt, engine_id));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

TranslationCacheEntry TranslationCache::store(const std::string& text,
                                              const std::string& translated_text,
                                              const LanguageTag& src, const LanguageTag& tgt,
                                              const std::string& engine_id) {
    std::unique_lock lock(mutex_);
    auto key = composite_key(text, src, tgt, engine_id);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;  // write-once

    TranslationCacheEntry entry{digest(text, src, tgt, engine_id), text, translated_text,
                                now_iso8601()};
    entries_.emplace(std::move(key), entry);

    if (persistent()) {
        json line{{"key", entry.key},          {"engine", engine_id},
                  {"src", src.code()},         {"tgt", tgt.code()},
                  {"source", entry.source_text}, {"translation", entry.translated_text},
                  {"timestamp", entry.timestamp}};
        auto path = file_for(engine_id, src, tgt);
        std::ofstream out(path, std::ios::binary | std::ios::app);
        if (!out) throw IoError("cannot append to cache file " + path.string());
        out << line.dump() << '\n';
        out.flush();
        if (!out) throw IoError("write failure on cache file " + path.string());
    }
    return entry;
}

std::size_t TranslationCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::filesystem::path TranslationCache::file_for(const std::string& engine_id,
                                                 const LanguageTag& src,
                                                 const LanguageTag& tgt) const {
    return cache_dir_ / (io::sanitize_filename(engine_id) + "__" + src.code() + "-" + tgt.code() +
                         ".jsonl");
}

void TranslationCache::load_all() {
    for (const auto& dirent : std::filesystem::directory_iterator(cache_dir_)) {
        if (!dirent.is_regular_file() || dirent.path().extension() != ".jsonl") continue;
        std::ifstream in(dirent.path(), std::ios::binary);
        if (!in) throw IoError("cannot open cache file " + dirent.path().string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json parsed;
            try {
                parsed = json::parse(line);
            } catch (const json::exception& e) {
                throw FormatError("corrupt cache line " + std::to_string(line_no) + " in " +
                                  dirent.path().string() + ": " + e.what());
            }
            TranslationCacheEntry entry;
            entry.key = parsed.value("key", "");
            entry.source_text = parsed.at("source").get<std::string>();
            entry.translated_text = parsed.at("translation").get<std::string>();
            entry.timestamp = parsed.value("timestamp", "");
            auto key = composite_key(entry.source_text, LanguageTag(parsed.at("src").get<std::string>()),
                                     LanguageTag(parsed.at("tgt").get<std::string>()),
                                     parsed.at("engine").get<std::string>());
            entries_.emplace(std::move(key), std::move(entry));  // first record wins
        }
    }
}

// ---------------------------------------------------------------------------
// TranslationService

TranslationService::TranslationService(std::shared_ptr<TranslatorBackend> backend,
                                       std::optional<std::filesystem::path> cache_dir)
    : backend_(std::move(backend)),
      cache_(cache_dir ? TranslationCache(*cache_dir) : TranslationCache()) {
    if (!backend_) throw ConfigError("translation service needs a backend");
}

TranslationService::Leg TranslationService::translate_leg(const std::string& text,
                                                          const LanguageTag& src,
                                                          const LanguageTag& tgt,
                                                          const char* leg_name) {
    if (src == tgt) {
        throw ConfigError("invalid language pair: source equals target ('" + src.code() + "')");
    }
    const std::string engine = backend_->id();
    if (auto hit = cache_.lookup(text, src, tgt, engine)) {
        return {hit->translated_text, hit->timestamp};
    }
    std::string translated;
    try {
        backend_calls_.fetch_add(1, std::memory_order_relaxed);
        translated = backend_->translate_raw(text, src, tgt);
    } catch (const TranslationError& e) {
        if (leg_name[0] == '\0') throw;
        throw TranslationError(std::string(leg_name) + " leg failed: " + e.what(), leg_name);
    }
    auto entry = cache_.store(text, translated, src, tgt, engine);
    return {entry.translated_text, entry.timestamp};
}

std::string TranslationService::translate(const std::string& text, const LanguageTag& src,
                                          const LanguageTag& tgt) {
    return translate_leg(text, src, tgt, "").text;
}

BackTranslationRecord TranslationService::back_translate(const Sentence& sentence,
                                                         const LanguageTag& intermediate,
                                                         int known_input_passes) {
    if (intermediate == sentence.language) {
        throw ConfigError("intermediate language must differ from the sentence language ('" +
                          intermediate.code() + "')");
    }
    auto forward = translate_leg(sentence.text, sentence.language, intermediate, "forward");
    auto backward = translate_leg(forward.text, intermediate, sentence.language, "backward");

    BackTranslationRecord record;
    record.original = sentence;
    record.pivot = Sentence{forward.text, intermediate};
    record.back_translation = Sentence{backward.text, sentence.language};
    record.engine_id = backend_->id();
    record.pass_count = known_input_passes < 0 ? -1 : known_input_passes + 2;
    record.timestamp = forward.timestamp;
    return record;
}

BatchResult TranslationService::batch_back_translate(std::span<const Sentence> sentences,
                                                     const LanguageTag& intermediate,
                                                     int max_in_flight, int known_input_passes) {
    if (max_in_flight < 1) {
        throw ConfigError("max_in_flight must be >= 1, got " + std::to_string(max_in_flight));
    }
    BatchResult result;
    result.records.resize(sentences.size());
    if (sentences.empty()) return result;

    std::atomic<std::size_t> next{0};
    std::mutex failures_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= sentences.size()) return;
            try {
                result.records[i] = back_translate(sentences[i], intermediate, known_input_passes);
            } catch (const Error& e) {
                std::lock_guard lock(failures_mutex);
                result.failures.push_back({i, e.what()});
            }
        }
    };

    std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight),
                                                  sentences.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    std::sort(result.failures.begin(), result.failures.end(),
              [](const BatchItemError& a, const BatchItemError& b) { return a.index < b.index; });
    return result;
}

std::size_t TranslationService::backend_calls() const {
    return backend_calls_.load(std::memory_order_relaxed);
}

}  // namespace btdetect
