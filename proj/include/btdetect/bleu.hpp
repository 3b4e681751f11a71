#pragma once

#include <array>
#include <string>

#include "btdetect/sentence.hpp"
#include "btdetect/tokenizer.hpp"

namespace btdetect {

// Feature order is part of the on-disk schema; bump when it changes.
inline constexpr const char* kFeatureSchemaVersion = "bleu7.v1";

// Fixed feature layout: individual 1..4-gram, then cumulative 2..4-gram.
enum FeatureIndex : std::size_t {
    kInd1 = 0,
    kInd2 = 1,
    kInd3 = 2,
    kInd4 = 3,
    kCum2 = 4,
    kCum3 = 5,
    kCum4 = 6,
};

struct FeatureVector {
    static constexpr std::size_t kSize = 7;
    std::array<double, kSize> values{};
    std::string schema_version = kFeatureSchemaVersion;
};

struct BleuOptions {
    // When set, a zero clipped-match count with a non-empty candidate is
    // replaced by epsilon before dividing. Off by default: zeros are
    // informative to the classifier.
    bool smooth_zero_counts = false;
    double smoothing_epsilon = 0.1;
};

// Clipped-match count over candidate n-gram count. value() is 0 when the
// candidate has no n-grams at all.
struct PrecisionRatio {
    long long matches = 0;
    long long total = 0;
    double value() const { return total == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(total); }
};

// Intermediate quantities of a sentence-level BLEU computation.
struct BleuBreakdown {
    std::array<PrecisionRatio, 4> precisions{};  // orders 1..4
    double brevity_penalty = 1.0;
    long long candidate_length = 0;
    long long reference_length = 0;
};

// Candidate n-gram matches clipped by reference occurrence counts.
PrecisionRatio modified_precision(const TokenSequence& candidate, const TokenSequence& reference, int n);

// 1 when the candidate is at least as long as the reference, otherwise
// exp(1 - ref/cand). Empty candidate against a non-empty reference is 0;
// two empty sides give 1.
double brevity_penalty(long long candidate_length, long long reference_length);

BleuBreakdown bleu_breakdown(const TokenSequence& candidate, const TokenSequence& reference);

// BP times the order-n modified precision. Unsmoothed unless opted in.
double individual_bleu(const TokenSequence& candidate, const TokenSequence& reference, int n,
                       const BleuOptions& options = {});

// BP times the uniform-weight geometric mean of precisions 1..max_n;
// any zero precision zeroes the score unless smoothing is on.
double cumulative_bleu(const TokenSequence& candidate, const TokenSequence& reference, int max_n,
                       const BleuOptions& options = {});

// The 7-score similarity vector between an input and its back-translation.
// The back-translation is the candidate, the original the reference; the
// original must tokenize to at least one token.
FeatureVector bleu_feature_vector(const TokenSequence& back_translation,
                                  const TokenSequence& original, const BleuOptions& options = {});
FeatureVector bleu_feature_vector(const Sentence& back_translation, const Sentence& original,
                                  const BleuOptions& options = {},
                                  const TokenizerConfig& tokenizer = {});

}  // namespace btdetect
