#include "btdetect/bleu.hpp"

#include <algorithm>
#include <cmath>

namespace btdetect {

namespace {

constexpr int kMaxOrder = 4;

void check_order(int n) {
    if (n < 1 || n > kMaxOrder) {
        throw InvalidOrderError("BLEU order must be in [1, 4], got " + std::to_string(n));
    }
}

double precision_value(const PrecisionRatio& p, const BleuOptions& options) {
    if (p.total == 0) return 0.0;
    if (p.matches == 0 && options.smooth_zero_counts) {
        return options.smoothing_epsilon / static_cast<double>(p.total);
    }
    return p.value();
}

}  // namespace

PrecisionRatio modified_precision(const TokenSequence& candidate, const TokenSequence& reference, int n) {
    check_order(n);
    PrecisionRatio result;
    auto cand_grams = extract_ngrams(candidate, n);
    result.total = cand_grams.total();
    if (result.total == 0) return result;
    auto ref_grams = extract_ngrams(reference, n);
    for (const auto& [key, count] : cand_grams.counts()) {
        result.matches += std::min(count, ref_grams.count(key));
    }
    return result;
}

double brevity_penalty(long long candidate_length, long long reference_length) {
    if (candidate_length == 0) return reference_length == 0 ? 1.0 : 0.0;
    if (candidate_length >= reference_length) return 1.0;
    return std::exp(1.0 - static_cast<double>(reference_length) / static_cast<double>(candidate_length));
}

BleuBreakdown bleu_breakdown(const TokenSequence& candidate, const TokenSequence& reference) {
    BleuBreakdown b;
    b.candidate_length = static_cast<long long>(candidate.size());
    b.reference_length = static_cast<long long>(reference.size());
    b.brevity_penalty = brevity_penalty(b.candidate_length, b.reference_length);
    for (int n = 1; n <= kMaxOrder; ++n) {
        b.precisions[static_cast<std::size_t>(n - 1)] = modified_precision(candidate, reference, n);
    }
    return b;
}

double individual_bleu(const TokenSequence& candidate, const TokenSequence& reference, int n,
                       const BleuOptions& options) {
    check_order(n);
    double bp = brevity_penalty(static_cast<long long>(candidate.size()),
                                static_cast<long long>(reference.size()));
    return bp * precision_value(modified_precision(candidate, reference, n), options);
}

double cumulative_bleu(const TokenSequence& candidate, const TokenSequence& reference, int max_n,
                       const BleuOptions& options) {
    check_order(max_n);
    // The geometric mean of one value is that value; computing it directly
    // keeps the order-1 cumulative score bit-identical to the individual one.
    if (max_n == 1) return individual_bleu(candidate, reference, 1, options);
    double log_sum = 0.0;
    for (int k = 1; k <= max_n; ++k) {
        double p = precision_value(modified_precision(candidate, reference, k), options);
        if (p <= 0.0) return 0.0;
        log_sum += std::log(p);
    }
    double bp = brevity_penalty(static_cast<long long>(candidate.size()),
                                static_cast<long long>(reference.size()));
    return bp * std::exp(log_sum / max_n);
}

FeatureVector bleu_feature_vector(const TokenSequence& back_translation,
                                  const TokenSequence& original, const BleuOptions& options) {
    if (original.empty()) {
        throw ConfigError("cannot featurize: the original sentence tokenizes to zero tokens");
    }
    const TokenSequence& candidate = back_translation;
    const TokenSequence& reference = original;

    BleuBreakdown b = bleu_breakdown(candidate, reference);
    std::array<double, 4> p{};
    for (int n = 1; n <= kMaxOrder; ++n) {
        p[static_cast<std::size_t>(n - 1)] =
            precision_value(b.precisions[static_cast<std::size_t>(n - 1)], options);
    }

    FeatureVector fv;
    for (int n = 1; n <= 4; ++n) {
        fv.values[static_cast<std::size_t>(n - 1)] = b.brevity_penalty * p[static_cast<std::size_t>(n - 1)];
    }
    for (int max_n = 2; max_n <= 4; ++max_n) {
        double score = 0.0;
        bool has_zero = false;
        double log_sum = 0.0;
        for (int k = 1; k <= max_n; ++k) {
            double pk = p[static_cast<std::size_t>(k - 1)];
            if (pk <= 0.0) {
                has_zero = true;
                break;
            }
            log_sum += std::log(pk);
        }
        if (!has_zero) score = b.brevity_penalty * std::exp(log_sum / max_n);
        fv.values[static_cast<std::size_t>(max_n + 2)] = score;  // cum2..4 at indices 4..6
    }
    return fv;
}

FeatureVector bleu_feature_vector(const Sentence& back_translation, const Sentence& original,
                                  const BleuOptions& options, const TokenizerConfig& tokenizer) {
    return bleu_feature_vector(tokenize(back_translation.text, tokenizer),
                               tokenize(original.text, tokenizer), options);
}

}  // namespace btdetect
