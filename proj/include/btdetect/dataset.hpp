#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "btdetect/bleu.hpp"
#include "btdetect/label.hpp"
#include "btdetect/sentence.hpp"
#include "btdetect/translator.hpp"

namespace btdetect::dataset {

// One aligned sentence pair from a parallel corpus.
struct SentencePair {
    std::string pair_id;
    Sentence human_text;
    Sentence foreign_text;
};

struct LabeledExample {
    std::string example_id;
    std::string pair_id;
    Sentence text;
    Label label = Label::human;
    // Translation passes from the text's true origin: 0 for originals, 1 for
    // translated machine text, 2 for back-translated machine text, -1 unknown.
    int generation_passes = -1;
    std::optional<FeatureVector> features;
    // How the machine member was produced (absent for human members and for
    // single-pass translation).
    std::optional<BackTranslationRecord> generation_provenance;
    // The detector-side round trip that produced `features`.
    std::optional<BackTranslationRecord> detection_record;
};

struct SplitDataset {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> test;
    std::uint64_t seed = 0;
};

// Examples plus the per-input failures that were dropped along the way;
// indices refer to positions in the builder's input sequence.
struct DatasetBuildResult {
    std::vector<LabeledExample> examples;
    std::vector<BatchItemError> failures;

    bool all_ok() const { return failures.empty(); }
};

// Reads two line-aligned files, drops pairs with a blank side, deduplicates
// on the `lang_a` text, then samples `limit` pairs with the given seed.
// Sampling preserves file order; limit == available keeps every pair.
std::vector<SentencePair> load_parallel_corpus(const std::filesystem::path& path_a,
                                               const std::filesystem::path& path_b,
                                               const LanguageTag& lang_a, const LanguageTag& lang_b,
                                               std::size_t limit, std::uint64_t seed);

// Same contract for a single TSV file (text_a TAB text_b per line).
std::vector<SentencePair> load_parallel_corpus_tsv(const std::filesystem::path& path,
                                                   const LanguageTag& lang_a,
                                                   const LanguageTag& lang_b, std::size_t limit,
                                                   std::uint64_t seed);

// Reads a TSV of (text TAB positive|negative) and draws a class-balanced
// seeded sample: limit_per_class from each polarity. Polarity only guides
// sampling; the returned sentences carry no sentiment information.
std::vector<Sentence> load_sentiment_corpus(const std::filesystem::path& path,
                                            std::size_t limit_per_class, std::uint64_t seed,
                                            const LanguageTag& language = LanguageTag("en"));

// Emits (human_text, human) and (foreign_text translated into the human
// language, machine) per pair, sharing pair_id. A pair whose translation
// fails is dropped whole, keeping the label balance intact.
DatasetBuildResult build_translation_dataset(const std::vector<SentencePair>& pairs,
                                             TranslationService& service);

// Machine member = back-translation of the human sentence through the
// generator's intermediate language.
DatasetBuildResult build_backtranslation_dataset(const std::vector<Sentence>& sentences,
                                                 const LanguageTag& generator_intermediate,
                                                 TranslationService& service,
                                                 int max_in_flight = 4);

// Back-translates every example through the detector's intermediate language
// and fills in the 7 similarity features. Examples whose pair partner fails
// are dropped along with the partner.
DatasetBuildResult featurize_dataset(const std::vector<LabeledExample>& examples,
                                     const LanguageTag& detector_intermediate,
                                     TranslationService& service, int max_in_flight = 4,
                                     const BleuOptions& options = {});

// Splits at pair granularity: both members of a pair land in the same
// partition, so label balance carries over to both sides.
SplitDataset paired_split(const std::vector<LabeledExample>& examples, double train_fraction,
                          std::uint64_t seed);

double average_word_count(const std::vector<LabeledExample>& examples);

// Line-delimited featurized dataset (one JSON object per example).
void save_featurized(const std::filesystem::path& path,
                     const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> load_featurized(const std::filesystem::path& path);

}  // namespace btdetect::dataset
