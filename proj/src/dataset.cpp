#include "btdetect/dataset.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "btdetect/io.hpp"
#include "btdetect/random.hpp"

namespace btdetect::dataset {

namespace {

using nlohmann::json;

std::string pair_id_for_line(std::size_t line_number) {
    return "p" + std::to_string(line_number);
}

// Seeded uniform sample of `limit` positions out of `available`, returned in
// ascending order so the corpus file order is preserved.
std::vector<std::size_t> sample_positions(std::size_t available, std::size_t limit,
                                          std::uint64_t seed) {
    std::vector<std::size_t> positions(available);
    for (std::size_t i = 0; i < available; ++i) positions[i] = i;
    std::mt19937_64 gen(seed);
    rng::shuffle(positions, gen);
    positions.resize(limit);
    std::sort(positions.begin(), positions.end());
    return positions;
}

std::vector<SentencePair> assemble_pairs(std::vector<std::string> lines_a,
                                         std::vector<std::string> lines_b,
                                         const LanguageTag& lang_a, const LanguageTag& lang_b,
                                         std::size_t limit, std::uint64_t seed,
                                         const std::string& origin) {
    if (lang_a.code() == lang_b.code()) {
        throw ConfigError("parallel corpus languages must differ, got '" + lang_a.code() +
                          "' twice");
    }
    if (lines_a.size() != lines_b.size()) {
        throw FormatError("aligned corpus line counts differ for " + origin + ": " +
                          std::to_string(lines_a.size()) + " vs " + std::to_string(lines_b.size()));
    }

    // Keep non-blank pairs, first occurrence per side-a text (duplicate human
    // sentences would otherwise leak across a later train/test split).
    std::vector<SentencePair> pool;
    std::unordered_set<std::string> seen_a;
    for (std::size_t i = 0; i < lines_a.size(); ++i) {
        const std::string& a = lines_a[i];
        const std::string& b = lines_b[i];
        if (a.empty() || b.empty()) continue;
        if (!seen_a.insert(a).second) continue;
        pool.push_back(SentencePair{pair_id_for_line(i + 1), Sentence{a, lang_a},
                                    Sentence{b, lang_b}});
    }

    if (limit > pool.size()) {
        throw ConfigError("requested " + std::to_string(limit) + " pairs but " + origin +
                          " yields only " + std::to_string(pool.size()));
    }
    std::vector<SentencePair> sampled;
    sampled.reserve(limit);
    for (std::size_t pos : sample_positions(pool.size(), limit, seed)) {
        sampled.push_back(std::move(pool[pos]));
    }
    return sampled;
}

// Counts maximal non-whitespace runs (codepoint-aware).
std::size_t word_count(const std::string& text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char32_t cp : utf8::decode(text)) {
        if (utf8::is_whitespace(cp)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

json sentence_to_json(const Sentence& s) {
    return json{{"text", s.text}, {"lang", s.language.code()}};
}

Sentence sentence_from_json(const json& j) {
    return Sentence{j.at("text").get<std::string>(),
                    LanguageTag(j.at("lang").get<std::string>())};
}

}  // namespace

std::vector<SentencePair> load_parallel_corpus(const std::filesystem::path& path_a,
                                               const std::filesystem::path& path_b,
                                               const LanguageTag& lang_a, const LanguageTag& lang_b,
                                               std::size_t limit, std::uint64_t seed) {
    return assemble_pairs(io::read_lines(path_a), io::read_lines(path_b), lang_a, lang_b, limit,
                          seed, path_a.filename().string() + "/" + path_b.filename().string());
}

std::vector<SentencePair> load_parallel_corpus_tsv(const std::filesystem::path& path,
                                                   const LanguageTag& lang_a,
                                                   const LanguageTag& lang_b, std::size_t limit,
                                                   std::uint64_t seed) {
    std::vector<std::string> lines_a;
    std::vector<std::string> lines_b;
    std::size_t line_number = 0;
    for (const std::string& line : io::read_lines(path)) {
        ++line_number;
        if (line.empty()) {
            lines_a.emplace_back();
            lines_b.emplace_back();
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path.string() + ":" + std::to_string(line_number) +
                              ": expected two tab-separated columns");
        }
        lines_a.push_back(line.substr(0, tab));
        lines_b.push_back(line.substr(tab + 1));
    }
    return assemble_pairs(std::move(lines_a), std::move(lines_b), lang_a, lang_b, limit, seed,
                          path.filename().string());
}

std::vector<Sentence> load_sentiment_corpus(const std::filesystem::path& path,
                                            std::size_t limit_per_class, std::uint64_t seed,
                                            const LanguageTag& language) {
    std::vector<std::string> positives;
    std::vector<std::string> negatives;
    std::unordered_set<std::string> seen;
    std::size_t line_number = 0;
    for (const std::string& line : io::read_lines(path)) {
        ++line_number;
        if (line.empty()) continue;
        const std::size_t tab = line.rfind('\t');
        if (tab == std::string::npos) {
            throw FormatError(path.string() + ":" + std::to_string(line_number) +
                              ": expected 'text<TAB>polarity'");
        }
        const std::string text = line.substr(0, tab);
        std::string polarity = line.substr(tab + 1);
        std::transform(polarity.begin(), polarity.end(), polarity.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (text.empty()) continue;
        if (!seen.insert(text).second) continue;
        if (polarity == "positive") {
            positives.push_back(text);
        } else if (polarity == "negative") {
            negatives.push_back(text);
        } else {
            throw FormatError(path.string() + ":" + std::to_string(line_number) +
                              ": unknown polarity '" + polarity + "'");
        }
    }

    if (positives.size() < limit_per_class || negatives.size() < limit_per_class) {
        throw ConfigError("requested " + std::to_string(limit_per_class) +
                          " sentences per class but " + path.filename().string() + " has " +
                          std::to_string(positives.size()) + " positive / " +
                          std::to_string(negatives.size()) + " negative");
    }

    std::vector<Sentence> result;
    result.reserve(2 * limit_per_class);
    const char* class_tags[] = {"positive", "negative"};
    const std::vector<std::string>* classes[] = {&positives, &negatives};
    for (int c = 0; c < 2; ++c) {
        std::mt19937_64 gen(rng::derive_seed(seed, class_tags[c]));
        std::vector<std::size_t> positions(classes[c]->size());
        for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
        rng::shuffle(positions, gen);
        positions.resize(limit_per_class);
        std::sort(positions.begin(), positions.end());
        for (std::size_t pos : positions) {
            result.push_back(Sentence{(*classes[c])[pos], language});
        }
    }
    return result;
}

DatasetBuildResult build_translation_dataset(const std::vector<SentencePair>& pairs,
                                             TranslationService& service) {
    DatasetBuildResult result;
    result.examples.reserve(2 * pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const SentencePair& pair = pairs[i];
        std::string machine_text;
        try {
            machine_text = service.translate(pair.foreign_text.text, pair.foreign_text.language,
                                             pair.human_text.language);
        } catch (const Error& e) {
            result.failures.push_back(BatchItemError{i, e.what()});
            continue;
        }

        LabeledExample human;
        human.example_id = pair.pair_id + ":h";
        human.pair_id = pair.pair_id;
        human.text = pair.human_text;
        human.label = Label::human;
        human.generation_passes = 0;
        result.examples.push_back(std::move(human));

        LabeledExample machine;
        machine.example_id = pair.pair_id + ":m";
        machine.pair_id = pair.pair_id;
        machine.text = Sentence{std::move(machine_text), pair.human_text.language};
        machine.label = Label::machine;
        machine.generation_passes = 1;
        result.examples.push_back(std::move(machine));
    }
    return result;
}

DatasetBuildResult build_backtranslation_dataset(const std::vector<Sentence>& sentences,
                                                 const LanguageTag& generator_intermediate,
                                                 TranslationService& service, int max_in_flight) {
    DatasetBuildResult result;
    BatchResult batch = service.batch_back_translate(sentences, generator_intermediate,
                                                     max_in_flight, /*known_input_passes=*/0);
    result.failures = std::move(batch.failures);
    result.examples.reserve(2 * sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (!batch.records[i]) continue;
        BackTranslationRecord& record = *batch.records[i];
        const std::string pair_id = pair_id_for_line(i + 1);

        LabeledExample human;
        human.example_id = pair_id + ":h";
        human.pair_id = pair_id;
        human.text = sentences[i];
        human.label = Label::human;
        human.generation_passes = 0;
        result.examples.push_back(std::move(human));

        LabeledExample machine;
        machine.example_id = pair_id + ":m";
        machine.pair_id = pair_id;
        machine.text = record.back_translation;
        machine.label = Label::machine;
        machine.generation_passes = record.pass_count;
        machine.generation_provenance = std::move(record);
        result.examples.push_back(std::move(machine));
    }
    return result;
}

DatasetBuildResult featurize_dataset(const std::vector<LabeledExample>& examples,
                                     const LanguageTag& detector_intermediate,
                                     TranslationService& service, int max_in_flight,
                                     const BleuOptions& options) {
    // Batch per generation_passes value so provenance stays truthful while
    // the translator still sees large spans.
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        groups[examples[i].generation_passes].push_back(i);
    }

    std::vector<std::optional<BackTranslationRecord>> records(examples.size());
    DatasetBuildResult result;
    for (auto& [passes, indices] : groups) {
        std::vector<Sentence> texts;
        texts.reserve(indices.size());
        for (std::size_t idx : indices) texts.push_back(examples[idx].text);
        BatchResult batch =
            service.batch_back_translate(texts, detector_intermediate, max_in_flight, passes);
        for (std::size_t k = 0; k < indices.size(); ++k) {
            records[indices[k]] = std::move(batch.records[k]);
        }
        for (BatchItemError& failure : batch.failures) {
            result.failures.push_back(BatchItemError{indices[failure.index],
                                                     std::move(failure.message)});
        }
    }
    std::sort(result.failures.begin(), result.failures.end(),
              [](const BatchItemError& a, const BatchItemError& b) { return a.index < b.index; });

    // Drop whole pairs containing a failed member, preserving balance.
    std::unordered_set<std::string> failed_pairs;
    for (const BatchItemError& failure : result.failures) {
        failed_pairs.insert(examples[failure.index].pair_id);
    }

    result.examples.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (failed_pairs.count(examples[i].pair_id) != 0) continue;
        LabeledExample out = examples[i];
        BackTranslationRecord& record = *records[i];
        out.features = bleu_feature_vector(record.back_translation, out.text, options);
        out.detection_record = std::move(record);
        result.examples.push_back(std::move(out));
    }
    return result;
}

SplitDataset paired_split(const std::vector<LabeledExample>& examples, double train_fraction,
                          std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie strictly between 0 and 1, got " +
                          std::to_string(train_fraction));
    }

    // Pair ids in first-appearance order, with the two-members-per-pair
    // invariant checked up front.
    std::vector<std::string> pair_ids;
    std::unordered_map<std::string, int> member_count;
    std::unordered_map<std::string, int> machine_count;
    for (const LabeledExample& example : examples) {
        if (member_count[example.pair_id]++ == 0) pair_ids.push_back(example.pair_id);
        if (example.label == Label::machine) ++machine_count[example.pair_id];
    }
    for (const std::string& pair_id : pair_ids) {
        if (member_count[pair_id] != 2 || machine_count[pair_id] != 1) {
            throw FormatError("malformed pairing: pair '" + pair_id + "' has " +
                              std::to_string(member_count[pair_id]) + " members, " +
                              std::to_string(machine_count[pair_id]) +
                              " machine (expected one human + one machine)");
        }
    }

    std::mt19937_64 gen(seed);
    rng::shuffle(pair_ids, gen);
    const auto train_pairs = static_cast<std::size_t>(train_fraction *
                                                      static_cast<double>(pair_ids.size()));
    std::unordered_set<std::string> train_ids(pair_ids.begin(),
                                              pair_ids.begin() + static_cast<std::ptrdiff_t>(train_pairs));

    SplitDataset split;
    split.seed = seed;
    for (const LabeledExample& example : examples) {
        (train_ids.count(example.pair_id) != 0 ? split.train : split.test).push_back(example);
    }
    return split;
}

double average_word_count(const std::vector<LabeledExample>& examples) {
    if (examples.empty()) return 0.0;
    std::size_t total = 0;
    for (const LabeledExample& example : examples) total += word_count(example.text.text);
    return static_cast<double>(total) / static_cast<double>(examples.size());
}

void save_featurized(const std::filesystem::path& path,
                     const std::vector<LabeledExample>& examples) {
    std::string body;
    for (const LabeledExample& example : examples) {
        if (!example.features) {
            throw ConfigError("example '" + example.example_id +
                              "' has no features; run featurization first");
        }
        json line{{"example_id", example.example_id},
                  {"pair_id", example.pair_id},
                  {"label", to_string(example.label)},
                  {"text", sentence_to_json(example.text)},
                  {"generation_passes", example.generation_passes},
                  {"features", example.features->values},
                  {"feature_schema", example.features->schema_version}};
        if (example.detection_record) {
            line["back_translation"] = sentence_to_json(example.detection_record->back_translation);
            line["detector_intermediate_lang"] =
                example.detection_record->pivot.language.code();
            line["engine_id"] = example.detection_record->engine_id;
        }
        body += line.dump();
        body += '\n';
    }
    io::write_atomic(path, body);
}

std::vector<LabeledExample> load_featurized(const std::filesystem::path& path) {
    std::vector<LabeledExample> examples;
    std::size_t line_number = 0;
    for (const std::string& line : io::read_lines(path)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            LabeledExample example;
            example.example_id = j.at("example_id").get<std::string>();
            example.pair_id = j.at("pair_id").get<std::string>();
            example.label = label_from_string(j.at("label").get<std::string>());
            example.text = sentence_from_json(j.at("text"));
            example.generation_passes = j.value("generation_passes", -1);
            FeatureVector features;
            const auto& values = j.at("features");
            if (!values.is_array() || values.size() != features.values.size()) {
                throw FormatError("features must be an array of " +
                                  std::to_string(features.values.size()));
            }
            for (std::size_t k = 0; k < features.values.size(); ++k) {
                features.values[k] = values[k].get<double>();
            }
            features.schema_version = j.at("feature_schema").get<std::string>();
            example.features = std::move(features);
            if (j.contains("back_translation")) {
                BackTranslationRecord record;
                record.original = example.text;
                record.back_translation = sentence_from_json(j.at("back_translation"));
                record.pivot = Sentence{
                    "", LanguageTag(j.at("detector_intermediate_lang").get<std::string>())};
                record.engine_id = j.value("engine_id", "");
                example.detection_record = std::move(record);
            }
            examples.push_back(std::move(example));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
        }
    }
    return examples;
}

}  // namespace btdetect::dataset
