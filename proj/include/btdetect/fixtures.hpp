#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "btdetect/sentence.hpp"
#include "btdetect/translator.hpp"

namespace btdetect::fixtures {

// Deterministic synthetic sentences for offline runs. Every sentence is
// guaranteed to move under the given fixture backend's projection, so the
// generated "human" texts are separable from projected "machine" texts.
std::vector<Sentence> make_sentences(std::size_t count, std::uint64_t seed,
                                     const FixtureBackend& backend);

// Writes an aligned pair of corpus files: `path_human` holds the generated
// sentences, `path_foreign` their forward translations under the backend.
void write_parallel_corpus(const std::filesystem::path& path_human,
                           const std::filesystem::path& path_foreign, std::size_t pairs,
                           std::uint64_t seed, FixtureBackend& backend,
                           const LanguageTag& foreign);

// Writes a sentiment-style TSV (text TAB positive|negative), class-balanced.
void write_sentiment_corpus(const std::filesystem::path& path, std::size_t per_class,
                            std::uint64_t seed, const FixtureBackend& backend);

}  // namespace btdetect::fixtures
