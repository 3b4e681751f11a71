#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "btdetect/random.hpp"
#include "btdetect/tokenizer.hpp"
#include "btdetect/translator.hpp"

using namespace btdetect;
namespace fs = std::filesystem;

namespace {

const LanguageTag kEn("en");
const LanguageTag kFr("fr");
const LanguageTag kEs("es");

fs::path temp_dir(const std::string& tag) {
    const fs::path dir =
        fs::temp_directory_path() / ("btdetect_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Backend test double that fails on marked inputs and counts calls.
class FlakyBackend : public TranslatorBackend {
public:
    std::string id() const override { return "flaky/v1"; }

    std::string translate_raw(const std::string& text, const LanguageTag& src,
                              const LanguageTag& tgt) override {
        ++calls;
        if (text.find("BOOM") != std::string::npos) {
            throw TranslationError("synthetic failure for '" + text + "'");
        }
        return "[" + tgt.code() + "]" + text;
    }

    std::atomic<int> calls{0};
};

std::string random_token(std::mt19937_64& gen) {
    static const std::string alphabet = "abcdefgh";
    std::string token;
    const std::size_t length = 1 + rng::next_below(gen, 6);
    for (std::size_t i = 0; i < length; ++i) {
        token += alphabet[rng::next_below(gen, alphabet.size())];
    }
    return token;
}

std::string random_text(std::mt19937_64& gen) {
    std::string text;
    const std::size_t words = 1 + rng::next_below(gen, 8);
    for (std::size_t i = 0; i < words; ++i) {
        if (!text.empty()) text += ' ';
        text += random_token(gen);
    }
    return text;
}

}  // namespace

TEST_CASE("fixture round trip is a projection: applying it twice equals once") {
    FixtureBackend backend(kEn, 42);
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 300; ++trial) {
        const std::string text = random_text(gen);
        const std::string once = backend.project(text);
        CAPTURE(text);
        CHECK(backend.project(once) == once);
    }
    // Non-ASCII and punctuation survive the round trip unchanged in shape.
    const std::string fancy = "tres elegant, n'est-ce pas ?";
    CHECK(backend.project(backend.project(fancy)) == backend.project(fancy));
}

TEST_CASE("fixture round trip rewrites doubled letters") {
    FixtureBackend backend(kEn, 42);
    CHECK(backend.project("coffee and butter") != "coffee and butter");
    CHECK(backend.canonicalize_word("coffee").find("ff") == std::string::npos);
    CHECK(backend.is_fixed_point_word("coffee") == false);
}

TEST_CASE("fixture forward leg reverses canonical words") {
    FixtureBackend backend(kEn, 42);
    // A word that is already canonical (single letters, not a synonym key)
    // comes back codepoint-reversed on the forward leg.
    std::string stable;
    for (const char* candidate : {"zq", "xv", "qk", "jx"}) {
        if (backend.is_fixed_point_word(candidate)) {
            stable = candidate;
            break;
        }
    }
    REQUIRE(!stable.empty());
    std::string reversed(stable.rbegin(), stable.rend());
    CHECK(backend.translate_raw(stable, kEn, kFr) == reversed);
    CHECK(backend.translate_raw(reversed, kFr, kEn) == stable);
}

TEST_CASE("fixture backend id depends on seed") {
    CHECK(FixtureBackend(kEn, 1).id() != FixtureBackend(kEn, 2).id());
    CHECK(FixtureBackend(kEn, 7).id() == FixtureBackend(kEn, 7).id());
}

TEST_CASE("different fixture seeds disagree on some synonym") {
    FixtureBackend a(kEn, 1);
    FixtureBackend b(kEn, 2);
    const std::string text = "the old market near the river was calm and bright";
    // Not guaranteed word by word, but across a long sentence the seeded
    // synonym maps should diverge somewhere.
    bool diverged = a.project(text) != b.project(text);
    CHECK(diverged);
}

TEST_CASE("service serves repeated translations from the cache") {
    auto backend = std::make_shared<FlakyBackend>();
    TranslationService service(backend);

    const std::string first = service.translate("hello world", kEn, kFr);
    CHECK(backend->calls == 1);
    const std::string second = service.translate("hello world", kEn, kFr);
    CHECK(backend->calls == 1);  // cache hit, no new backend call
    CHECK(first == second);

    // A different language pair or text is a different cache entry.
    service.translate("hello world", kEn, kEs);
    CHECK(backend->calls == 2);
    service.translate("other text", kEn, kFr);
    CHECK(backend->calls == 3);
    CHECK(service.cache_size() == 3);
}

TEST_CASE("back_translate performs two legs and records provenance") {
    auto backend = std::make_shared<FixtureBackend>(kEn, 42);
    TranslationService service(backend);

    const Sentence input{"the committee meeting was a success", kEn};
    const BackTranslationRecord record = service.back_translate(input, kFr, 0);
    CHECK(record.original.text == input.text);
    CHECK(record.pivot.language.code() == "fr");
    CHECK(record.back_translation.language.code() == "en");
    CHECK(record.back_translation.text == backend->project(input.text));
    CHECK(record.engine_id == backend->id());
    CHECK(record.pass_count == 2);  // 0 known input passes + round trip

    const BackTranslationRecord unknown = service.back_translate(input, kFr, -1);
    CHECK(unknown.pass_count == -1);
}

TEST_CASE("invalid language pairs are rejected before any backend call") {
    auto backend = std::make_shared<FlakyBackend>();
    TranslationService service(backend);
    CHECK_THROWS_AS(service.translate("x", kEn, kEn), ConfigError);
    CHECK_THROWS_AS(service.back_translate(Sentence{"x", kEn}, kEn), ConfigError);
    CHECK(backend->calls == 0);
}

TEST_CASE("persistent cache allows replay with zero backend calls") {
    const fs::path dir = temp_dir("replay");
    std::string engine_id;
    std::string recorded_text;
    std::string recorded_timestamp;

    {
        auto backend = std::make_shared<FixtureBackend>(kEn, 42);
        engine_id = backend->id();
        TranslationService service(backend, dir);
        const BackTranslationRecord record =
            service.back_translate(Sentence{"a little yellow arrow", kEn}, kFr, 0);
        recorded_text = record.back_translation.text;
        recorded_timestamp = record.timestamp;
        CHECK(service.backend_calls() == 2);  // two legs
    }

    {
        TranslationService replay(std::make_shared<ReplayBackend>(engine_id), dir);
        const BackTranslationRecord record =
            replay.back_translate(Sentence{"a little yellow arrow", kEn}, kFr, 0);
        CHECK(record.back_translation.text == recorded_text);
        CHECK(record.timestamp == recorded_timestamp);  // replay is byte-stable
        CHECK(replay.backend_calls() == 0);

        CHECK_THROWS_AS(replay.back_translate(Sentence{"never recorded", kEn}, kFr),
                        TranslationError);
    }
    fs::remove_all(dir);
}

TEST_CASE("cache files are per engine and language pair, named safely") {
    const fs::path dir = temp_dir("files");
    {
        TranslationService service(std::make_shared<FixtureBackend>(kEn, 42), dir);
        service.translate("apple bottle", kEn, kFr);
    }
    bool found = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        CHECK(name.find(".jsonl") != std::string::npos);
        CHECK(name.find('/') == std::string::npos);
        if (name.find("en-fr") != std::string::npos) found = true;
    }
    CHECK(found);
    fs::remove_all(dir);
}

TEST_CASE("corrupt cache line is reported with its location") {
    const fs::path dir = temp_dir("corrupt");
    {
        TranslationService service(std::make_shared<FixtureBackend>(kEn, 42), dir);
        service.translate("apple bottle", kEn, kFr);
    }
    // Append garbage to the cache file.
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::ofstream out(entry.path(), std::ios::app);
        out << "{not json\n";
    }
    CHECK_THROWS_AS(TranslationService(std::make_shared<FixtureBackend>(kEn, 42), dir),
                    FormatError);
    fs::remove_all(dir);
}

TEST_CASE("batch preserves order and isolates failures") {
    auto backend = std::make_shared<FlakyBackend>();
    TranslationService service(backend);

    std::vector<Sentence> sentences;
    for (int i = 0; i < 20; ++i) {
        sentences.push_back(Sentence{"sentence number " + std::to_string(i), kEn});
    }
    sentences[3].text = "BOOM three";
    sentences[17].text = "BOOM seventeen";

    const BatchResult result = service.batch_back_translate(sentences, kFr, 4);
    REQUIRE(result.records.size() == sentences.size());
    CHECK(result.failures.size() == 2);
    CHECK(result.failures[0].index == 3);
    CHECK(result.failures[1].index == 17);
    CHECK_FALSE(result.all_ok());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i == 3 || i == 17) {
            CHECK(!result.records[i].has_value());
        } else {
            REQUIRE(result.records[i].has_value());
            CHECK(result.records[i]->original.text == sentences[i].text);
        }
    }
}

TEST_CASE("batch with concurrency matches sequential results") {
    std::vector<Sentence> sentences;
    for (int i = 0; i < 50; ++i) {
        sentences.push_back(Sentence{"concurrent item " + std::to_string(i) + " coffee", kEn});
    }

    TranslationService sequential(std::make_shared<FixtureBackend>(kEn, 42));
    TranslationService concurrent(std::make_shared<FixtureBackend>(kEn, 42));
    const BatchResult a = sequential.batch_back_translate(sentences, kFr, 1);
    const BatchResult b = concurrent.batch_back_translate(sentences, kFr, 8);
    REQUIRE(a.all_ok());
    REQUIRE(b.all_ok());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        CHECK(a.records[i]->back_translation.text == b.records[i]->back_translation.text);
    }
}

TEST_CASE("batch rejects a non-positive concurrency limit") {
    TranslationService service(std::make_shared<FixtureBackend>(kEn, 42));
    const std::vector<Sentence> sentences{Sentence{"x", kEn}};
    CHECK_THROWS_AS(service.batch_back_translate(sentences, kFr, 0), ConfigError);
}

TEST_CASE("translation errors name the failing leg") {
    auto backend = std::make_shared<FlakyBackend>();
    TranslationService service(backend);
    try {
        service.back_translate(Sentence{"BOOM", kEn}, kFr);
        FAIL("expected TranslationError");
    } catch (const TranslationError& e) {
        CHECK(e.leg() == "forward");
    }
}

TEST_CASE("cache digest is stable and separates fields") {
    const std::string d1 = TranslationCache::digest("text", kEn, kFr, "e1");
    CHECK(d1 == TranslationCache::digest("text", kEn, kFr, "e1"));
    CHECK(d1 != TranslationCache::digest("text", kEn, kFr, "e2"));
    CHECK(d1 != TranslationCache::digest("text", kFr, kEn, "e1"));
    CHECK(TranslationCache::digest("ab", kEn, kFr, "e") !=
          TranslationCache::digest("a", kEn, kFr, "be"));
}

// ------------------------------------------------------------- HTTP backend

namespace {

struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit TestServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server.Post("/translate", std::move(handler));
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        thread.join();
    }

    HttpBackendConfig config() const {
        HttpBackendConfig cfg;
        cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/translate";
        cfg.retry = RetryPolicy{2, 1, 2.0};  // fast retries for tests
        cfg.timeout_seconds = 5;
        return cfg;
    }
};

}  // namespace

TEST_CASE("http backend posts text and parses the translation") {
    std::string seen_body;
    std::string seen_auth;
    TestServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = req.body;
        seen_auth = req.get_header_value("Authorization");
        res.set_content(R"({"translation":"bonjour le monde"})", "application/json");
    });

    HttpBackendConfig cfg = server.config();
    cfg.api_key = "sekret";
    HttpTranslatorBackend backend(cfg);
    CHECK(backend.translate_raw("hello world", kEn, kFr) == "bonjour le monde");
    CHECK(seen_auth == "Bearer sekret");

    const auto body = nlohmann::json::parse(seen_body);
    CHECK(body.at("text") == "hello world");
    CHECK(body.at("source") == "en");
    CHECK(body.at("target") == "fr");
}

TEST_CASE("http backend accepts common vendor response shapes") {
    CHECK(HttpTranslatorBackend::parse_response_body(R"({"translation":"a"})") == "a");
    CHECK(HttpTranslatorBackend::parse_response_body(R"({"translatedText":"b"})") == "b");
    CHECK(HttpTranslatorBackend::parse_response_body(
              R"({"data":{"translations":[{"translatedText":"c"}]}})") == "c");
    CHECK_THROWS_AS(HttpTranslatorBackend::parse_response_body(R"({"nope":1})"),
                    TranslationError);
    CHECK_THROWS_AS(HttpTranslatorBackend::parse_response_body("not json"), TranslationError);
}

TEST_CASE("http backend retries transient failures then succeeds") {
    std::atomic<int> hits{0};
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        if (++hits <= 2) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"translation":"ok"})", "application/json");
    });

    HttpTranslatorBackend backend(server.config());
    CHECK(backend.translate_raw("x", kEn, kFr) == "ok");
    CHECK(hits == 3);
}

TEST_CASE("http backend maps status codes to error types") {
    SUBCASE("persistent 429 raises a quota error") {
        std::atomic<int> hits{0};
        TestServer server([&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 429;
        });
        HttpTranslatorBackend backend(server.config());
        CHECK_THROWS_AS(backend.translate_raw("x", kEn, kFr), QuotaExceededError);
        CHECK(hits == 3);  // initial try + 2 retries
    }

    SUBCASE("persistent 500 raises unreachable after retries") {
        TestServer server([&](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
        });
        HttpTranslatorBackend backend(server.config());
        CHECK_THROWS_AS(backend.translate_raw("x", kEn, kFr), BackendUnreachableError);
    }

    SUBCASE("a 4xx other than 429 fails immediately without retries") {
        std::atomic<int> hits{0};
        TestServer server([&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 404;
        });
        HttpTranslatorBackend backend(server.config());
        CHECK_THROWS_AS(backend.translate_raw("x", kEn, kFr), TranslationError);
        CHECK(hits == 1);
    }
}

TEST_CASE("http backend reports unreachable hosts") {
    HttpBackendConfig cfg;
    cfg.endpoint = "http://127.0.0.1:1/translate";  // nothing listens there
    cfg.retry = RetryPolicy{1, 1, 2.0};
    cfg.timeout_seconds = 1;
    HttpTranslatorBackend backend(cfg);
    CHECK_THROWS_AS(backend.translate_raw("x", kEn, kFr), BackendUnreachableError);
}

TEST_CASE("http backend derives an engine id from the host when unset") {
    HttpBackendConfig cfg;
    cfg.endpoint = "https://translate.example.com/v2";
    HttpTranslatorBackend backend(cfg);
    CHECK(backend.id().find("translate.example.com") != std::string::npos);
}
