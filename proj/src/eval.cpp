#include "btdetect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "btdetect/random.hpp"

namespace btdetect::eval {

namespace {

double safe_f1(long long true_pos, long long false_pos, long long false_neg) {
    const long long denominator = 2 * true_pos + false_pos + false_neg;
    if (denominator == 0) return 0.0;
    return 2.0 * static_cast<double>(true_pos) / static_cast<double>(denominator);
}

std::vector<classify::Example> to_examples(const std::vector<dataset::LabeledExample>& labeled) {
    std::vector<classify::Example> examples;
    examples.reserve(labeled.size());
    for (const dataset::LabeledExample& example : labeled) {
        examples.push_back(classify::Example{*example.features, example.label});
    }
    return examples;
}

// Order-sensitive content digest of a partition, for the report's
// configuration echo.
std::string digest_examples(const std::vector<dataset::LabeledExample>& examples) {
    std::uint64_t h = rng::fnv1a64("dataset");
    for (const dataset::LabeledExample& example : examples) {
        h = rng::fnv1a64(example.example_id, h);
        h = rng::fnv1a64(example.text.text, h);
        h = rng::fnv1a64(to_string(example.label), h);
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
    return buffer;
}

// One decimal, as a percentage: 0.750 -> "75.0".
std::string percent(double fraction) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.1f", fraction * 100.0);
    return buffer;
}

// Prefixes errors with the pipeline stage they escaped from, preserving the
// error type for exit-code mapping.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    const auto prefix = [name](const char* what) {
        return std::string("experiment stage '") + name + "': " + what;
    };
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(prefix(e.what()));
    } catch (const SchemaError& e) {
        throw SchemaError(prefix(e.what()));
    } catch (const FormatError& e) {
        throw FormatError(prefix(e.what()));
    } catch (const TranslationError& e) {
        throw TranslationError(prefix(e.what()), e.leg());
    } catch (const TrainingError& e) {
        throw TrainingError(prefix(e.what()));
    } catch (const Error& e) {
        throw Error(prefix(e.what()));
    }
}

std::string column_label(classify::ClassifierKind kind) {
    switch (kind) {
        case classify::ClassifierKind::linear: return "LINEAR";
        case classify::ClassifierKind::adaboost: return "ADABOOST";
        case classify::ClassifierKind::svm_smo: return "SVM(SMO)";
        case classify::ClassifierKind::svm_sgd: return "SVM(SGD)";
    }
    return "?";
}

}  // namespace

EvaluationResult evaluate(const classify::TrainedModel& model,
                          const std::vector<classify::Example>& test_set) {
    if (test_set.empty()) throw ConfigError("cannot evaluate on an empty test set");

    EvaluationResult result;
    for (const classify::Example& example : test_set) {
        const classify::Prediction prediction = classify::predict(model, example.features);
        const bool truth_machine = example.label == Label::machine;
        const bool predicted_machine = prediction.label == Label::machine;
        if (truth_machine && predicted_machine) ++result.confusion.tp;
        if (!truth_machine && predicted_machine) ++result.confusion.fp;
        if (!truth_machine && !predicted_machine) ++result.confusion.tn;
        if (truth_machine && !predicted_machine) ++result.confusion.fn;
    }
    const ConfusionMatrix& m = result.confusion;
    result.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
    result.f1_positive = safe_f1(m.tp, m.fp, m.fn);
    // Human-positive F1 swaps the roles: tn are its hits, fn its false
    // positives, fp its misses.
    const double f1_negative = safe_f1(m.tn, m.fn, m.fp);
    result.f1_macro = 0.5 * (result.f1_positive + f1_negative);
    return result;
}

const char* to_string(TaskKind task) {
    return task == TaskKind::translation ? "translation" : "backtranslation";
}

TaskKind task_kind_from_string(const std::string& name) {
    if (name == "translation") return TaskKind::translation;
    if (name == "backtranslation" || name == "back-translation") return TaskKind::backtranslation;
    throw ConfigError("unknown task '" + name + "' (expected translation or backtranslation)");
}

ExperimentReport run_experiment(const ExperimentConfig& config, TranslationService& service,
                                bool keep_split) {
    if (config.classifiers.empty()) throw ConfigError("no classifiers requested");
    if (config.pairs == 0) throw ConfigError("experiment needs at least one pair");

    dataset::DatasetBuildResult built = stage("build dataset", [&] {
        if (config.task == TaskKind::translation) {
            const auto pairs = dataset::load_parallel_corpus(
                config.corpus_human, config.corpus_foreign, config.human_language,
                config.foreign_language, config.pairs, rng::derive_seed(config.seed, "corpus"));
            return dataset::build_translation_dataset(pairs, service);
        }
        const auto sentences = dataset::load_sentiment_corpus(
            config.sentiment_corpus, config.pairs / 2 + config.pairs % 2,
            rng::derive_seed(config.seed, "corpus"), config.human_language);
        std::vector<Sentence> trimmed(sentences.begin(),
                                      sentences.begin() + static_cast<std::ptrdiff_t>(
                                                              std::min(config.pairs,
                                                                       sentences.size())));
        return dataset::build_backtranslation_dataset(trimmed, config.generator_language, service,
                                                      config.max_in_flight);
    });

    const dataset::DatasetBuildResult featurized = stage("featurize", [&] {
        return dataset::featurize_dataset(built.examples, config.detector_language, service,
                                          config.max_in_flight, config.bleu);
    });
    if (featurized.examples.empty()) {
        throw Error("experiment produced no usable examples (" +
                    std::to_string(built.failures.size() + featurized.failures.size()) +
                    " failures)");
    }

    dataset::SplitDataset split = stage("split", [&] {
        return dataset::paired_split(featurized.examples, config.train_fraction,
                                     rng::derive_seed(config.seed, "split"));
    });

    ExperimentReport report;
    report.task = config.task;
    report.engine_id = service.engine_id();
    report.human_language = config.human_language.code();
    report.generator_language = config.task == TaskKind::translation
                                    ? config.foreign_language.code()
                                    : config.generator_language.code();
    report.detector_language = config.detector_language.code();
    report.seed = config.seed;
    report.train_size = split.train.size();
    report.test_size = split.test.size();
    report.dropped_pairs = built.failures.size() + featurized.failures.size() / 2;
    report.average_words_train = dataset::average_word_count(split.train);
    report.average_words_test = dataset::average_word_count(split.test);
    report.train_digest = digest_examples(split.train);
    report.test_digest = digest_examples(split.test);

    const std::vector<classify::Example> train_set = to_examples(split.train);
    const std::vector<classify::Example> test_set = to_examples(split.test);

    for (classify::ClassifierKind kind : config.classifiers) {
        const classify::TrainedModel model = stage("train", [&] {
            return classify::train(kind, train_set,
                                   rng::derive_seed(config.seed, classify::to_string(kind)));
        });
        const EvaluationResult result =
            stage("evaluate", [&] { return evaluate(model, test_set); });
        report.rows.push_back(ClassifierRow{kind, result});
        report.average_accuracy += result.accuracy;
        report.average_f1_positive += result.f1_positive;
        report.average_f1_macro += result.f1_macro;
    }
    const auto count = static_cast<double>(report.rows.size());
    report.average_accuracy /= count;
    report.average_f1_positive /= count;
    report.average_f1_macro /= count;

    if (keep_split) report.split = std::move(split);
    return report;
}

std::string render_text_report(const ExperimentReport& report) {
    std::string out;
    out += "task: " + std::string(to_string(report.task)) + "\n";
    out += "engine: " + report.engine_id + "\n";
    out += "languages: human=" + report.human_language + " generator=" +
           report.generator_language + " detector=" + report.detector_language + "\n";
    out += "seed: " + std::to_string(report.seed) + "\n";
    out += "split: " + std::to_string(report.train_size) + " train / " +
           std::to_string(report.test_size) + " test";
    if (report.dropped_pairs > 0) {
        out += " (" + std::to_string(report.dropped_pairs) + " pairs dropped)";
    }
    out += "\n";
    char words[64];
    std::snprintf(words, sizeof(words), "avg words/sentence: %.1f train, %.1f test\n",
                  report.average_words_train, report.average_words_test);
    out += words;
    out += "digests: train=" + report.train_digest + " test=" + report.test_digest + "\n\n";

    const char* metric_names[] = {"ACC", "F1", "F1(macro)"};
    out += "metric     ";
    for (const ClassifierRow& row : report.rows) {
        char cell[32];
        std::snprintf(cell, sizeof(cell), " %9s", column_label(row.kind).c_str());
        out += cell;
    }
    out += "       AVG\n";
    for (int metric = 0; metric < 3; ++metric) {
        char head[32];
        std::snprintf(head, sizeof(head), "%-11s", metric_names[metric]);
        out += head;
        const auto pick = [metric](const EvaluationResult& r) {
            return metric == 0 ? r.accuracy : metric == 1 ? r.f1_positive : r.f1_macro;
        };
        for (const ClassifierRow& row : report.rows) {
            char cell[32];
            std::snprintf(cell, sizeof(cell), " %9s", percent(pick(row.result)).c_str());
            out += cell;
        }
        const double average = metric == 0   ? report.average_accuracy
                               : metric == 1 ? report.average_f1_positive
                                             : report.average_f1_macro;
        char cell[32];
        std::snprintf(cell, sizeof(cell), " %9s\n", percent(average).c_str());
        out += cell;
    }
    return out;
}

std::string render_csv_report(const ExperimentReport& report) {
    std::string out = "classifier,accuracy,f1,f1_macro,tp,fp,tn,fn\n";
    for (const ClassifierRow& row : report.rows) {
        const ConfusionMatrix& m = row.result.confusion;
        out += column_label(row.kind) + "," + percent(row.result.accuracy) + "," +
               percent(row.result.f1_positive) + "," + percent(row.result.f1_macro) + "," +
               std::to_string(m.tp) + "," + std::to_string(m.fp) + "," + std::to_string(m.tn) +
               "," + std::to_string(m.fn) + "\n";
    }
    out += "AVG," + percent(report.average_accuracy) + "," + percent(report.average_f1_positive) +
           "," + percent(report.average_f1_macro) + ",,,,\n";
    return out;
}

std::string report_basename(const ExperimentReport& report) {
    return std::string(to_string(report.task)) + "_" + report.generator_language + "-" +
           report.detector_language + "_seed" + std::to_string(report.seed);
}

}  // namespace btdetect::eval
