#include "btdetect/fixtures.hpp"

#include <random>
#include <unordered_set>

#include "btdetect/io.hpp"
#include "btdetect/random.hpp"

namespace btdetect::fixtures {

namespace {

// Candidate vocabulary for synthetic sentences. Which of these actually move
// under a backend's projection depends on its seed, so the generator filters
// them per backend instead of hard-coding the partition.
const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = {
        // Plenty of doubled letters: these never survive canonicalization.
        "coffee",   "letter",  "little",   "summer",  "butter",  "yellow",  "narrow",
        "arrow",    "street",  "happy",    "meeting", "village", "suppose", "support",
        "commission", "committee", "address", "success", "channel", "different",
        "official", "apple",   "bottle",   "ballot",  "pattern", "cotton",  "attack",
        "battle",   "cheese",  "coolness", "keeper",  "footing", "greeting",
        // Plain words; some may still be synonym-map keys for a given seed.
        "the",      "a",       "was",      "is",      "near",    "old",     "new",
        "from",     "with",    "under",    "over",    "about",   "house",   "river",
        "market",   "report",  "question", "answer",  "garden",  "winter",  "morning",
        "evening",  "country", "city",     "child",   "friend",  "table",   "window",
        "story",    "music",   "water",    "bread",   "stone",   "light",   "paper",
        "quick",    "slow",    "bright",   "dark",    "heavy",   "calm",    "wild",
    };
    return words;
}

}  // namespace

std::vector<Sentence> make_sentences(std::size_t count, std::uint64_t seed,
                                     const FixtureBackend& backend) {
    // Split the vocabulary by how the backend's projection treats each word.
    std::vector<std::string> moving;
    std::vector<std::string> stable;
    for (const std::string& word : vocabulary()) {
        (backend.is_fixed_point_word(word) ? stable : moving).push_back(word);
    }
    if (moving.size() < 2 || stable.size() < 2) {
        throw ConfigError("fixture vocabulary degenerated under this backend seed");
    }

    static const std::vector<std::string> enders = {".", ".", ".", "?", "!"};
    std::mt19937_64 gen(rng::derive_seed(seed, "fixture-corpus"));
    std::vector<Sentence> sentences;
    std::unordered_set<std::string> seen;  // corpus loaders deduplicate, so we must too
    sentences.reserve(count);
    std::size_t attempts = 0;
    while (sentences.size() < count) {
        if (++attempts > 50 * count + 100) {
            throw ConfigError("could not generate " + std::to_string(count) +
                              " distinct fixture sentences");
        }
        const std::size_t length = 6 + rng::next_below(gen, 7);  // 6..12 words
        // At least two words per sentence that the round trip rewrites, so
        // original human text is never a projection fixed point.
        std::size_t moving_left = 2 + rng::next_below(gen, 2);
        std::string text;
        for (std::size_t w = 0; w < length; ++w) {
            const bool must_move = moving_left >= length - w;
            const bool pick_moving = must_move || rng::next_below(gen, 3) == 0;
            const auto& pool = pick_moving ? moving : stable;
            if (pick_moving && moving_left > 0) --moving_left;
            if (!text.empty()) text += ' ';
            text += pool[rng::next_below(gen, pool.size())];
        }
        text += enders[rng::next_below(gen, enders.size())];
        if (!seen.insert(text).second) continue;
        sentences.push_back(Sentence{std::move(text), backend.home_language()});
    }
    return sentences;
}

void write_parallel_corpus(const std::filesystem::path& path_human,
                           const std::filesystem::path& path_foreign, std::size_t pairs,
                           std::uint64_t seed, FixtureBackend& backend,
                           const LanguageTag& foreign) {
    const std::vector<Sentence> sentences = make_sentences(pairs, seed, backend);
    std::string human_body;
    std::string foreign_body;
    for (const Sentence& sentence : sentences) {
        human_body += sentence.text;
        human_body += '\n';
        foreign_body += backend.translate_raw(sentence.text, backend.home_language(), foreign);
        foreign_body += '\n';
    }
    io::write_atomic(path_human, human_body);
    io::write_atomic(path_foreign, foreign_body);
}

void write_sentiment_corpus(const std::filesystem::path& path, std::size_t per_class,
                            std::uint64_t seed, const FixtureBackend& backend) {
    const std::vector<Sentence> sentences =
        make_sentences(2 * per_class, rng::derive_seed(seed, "sentiment"), backend);
    std::string body;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        body += sentences[i].text;
        body += '\t';
        body += i < per_class ? "positive" : "negative";
        body += '\n';
    }
    io::write_atomic(path, body);
}

}  // namespace btdetect::fixtures
