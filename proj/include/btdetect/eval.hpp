#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "btdetect/classify.hpp"
#include "btdetect/dataset.hpp"

namespace btdetect::eval {

// Machine is the positive class throughout.
struct ConfusionMatrix {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;

    long long total() const { return tp + fp + tn + fn; }
};

struct EvaluationResult {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double f1_positive = 0.0;  // machine class
    double f1_macro = 0.0;     // mean of per-class F1
};

EvaluationResult evaluate(const classify::TrainedModel& model,
                          const std::vector<classify::Example>& test_set);

enum class TaskKind { translation, backtranslation };

const char* to_string(TaskKind task);
TaskKind task_kind_from_string(const std::string& name);

struct ExperimentConfig {
    TaskKind task = TaskKind::backtranslation;

    // Translation task: aligned parallel corpus, `foreign -> human` generates
    // the machine side.
    std::filesystem::path corpus_human;
    std::filesystem::path corpus_foreign;
    // Back-translation task: sentiment TSV of human sentences.
    std::filesystem::path sentiment_corpus;

    LanguageTag human_language{"en"};
    LanguageTag foreign_language{"fr"};
    // Pivot the adversary's generator uses (back-translation task).
    LanguageTag generator_language{"fr"};
    // Pivot the detector's own round trip uses; may differ from the
    // generator's.
    LanguageTag detector_language{"fr"};

    std::size_t pairs = 2000;  // sentence pairs; examples = 2 * pairs
    double train_fraction = 0.7;
    std::uint64_t seed = 42;
    int max_in_flight = 4;
    BleuOptions bleu;
    std::vector<classify::ClassifierKind> classifiers = {
        classify::ClassifierKind::linear, classify::ClassifierKind::adaboost,
        classify::ClassifierKind::svm_smo, classify::ClassifierKind::svm_sgd};
};

struct ClassifierRow {
    classify::ClassifierKind kind;
    EvaluationResult result;
};

struct ExperimentReport {
    std::vector<ClassifierRow> rows;
    double average_accuracy = 0.0;
    double average_f1_positive = 0.0;
    double average_f1_macro = 0.0;

    // Configuration echo and dataset summary.
    TaskKind task = TaskKind::backtranslation;
    std::string engine_id;
    std::string human_language;
    std::string generator_language;
    std::string detector_language;
    std::uint64_t seed = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t dropped_pairs = 0;
    double average_words_train = 0.0;
    double average_words_test = 0.0;
    std::string train_digest;
    std::string test_digest;

    // Filled when the caller asks run_experiment to keep the split.
    std::optional<dataset::SplitDataset> split;
};

// Full pipeline: load corpus, generate machine texts, back-translate with
// the detector language, featurize, split at pair granularity, train every
// requested classifier, evaluate. Reproducible given (seed, warm cache).
ExperimentReport run_experiment(const ExperimentConfig& config, TranslationService& service,
                                bool keep_split = false);

// Renderings contain identical numbers (percent, one decimal).
std::string render_text_report(const ExperimentReport& report);
std::string render_csv_report(const ExperimentReport& report);

// e.g. "backtranslation_fr-fr_seed42" — embedded in report filenames.
std::string report_basename(const ExperimentReport& report);

}  // namespace btdetect::eval
