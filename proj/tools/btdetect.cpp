// btdetect - detect machine-translated text via back-translation similarity.
//
// Pipeline: back-translate the input through a pivot language, score the
// similarity between input and back-translation with sentence-level BLEU
// features, and classify. Subcommands expose each stage for batch use.
//
// Exit codes: 0 success, 1 configuration error, 2 partial failure
// (some items processed), 3 total failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "btdetect/bleu.hpp"
#include "btdetect/classify.hpp"
#include "btdetect/dataset.hpp"
#include "btdetect/eval.hpp"
#include "btdetect/fixtures.hpp"
#include "btdetect/io.hpp"
#include "btdetect/records.hpp"
#include "btdetect/translator.hpp"

namespace {

using nlohmann::json;
using namespace btdetect;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;
constexpr int kExitTotal = 3;

// Backend/cache options shared by every subcommand that translates.
struct BackendOptions {
    std::string backend = "fixture";
    std::string endpoint;
    std::string api_key;
    std::string engine_id;
    std::string cache_dir;
    std::uint64_t fixture_seed = 42;
    std::string fixture_home = "en";
    int retries = 3;
    int backoff_ms = 1000;
    int timeout_seconds = 30;
    int max_in_flight = 4;
};

void add_backend_options(CLI::App* cmd, BackendOptions& opts) {
    cmd->add_option("--backend", opts.backend, "Translation backend: fixture, http or replay")
        ->check(CLI::IsMember({"fixture", "http", "replay"}))
        ->capture_default_str();
    cmd->add_option("--endpoint", opts.endpoint,
                    "HTTP backend endpoint (overridden by TRANSLATOR_ENDPOINT)");
    cmd->add_option("--api-key", opts.api_key,
                    "HTTP backend bearer token (overridden by TRANSLATOR_API_KEY)");
    cmd->add_option("--engine-id", opts.engine_id,
                    "Engine id override (required to replay a recorded cache)");
    cmd->add_option("--cache-dir", opts.cache_dir, "Persistent translation cache directory");
    cmd->add_option("--fixture-seed", opts.fixture_seed, "Seed for the fixture backend")
        ->capture_default_str();
    cmd->add_option("--fixture-home", opts.fixture_home, "Home language of the fixture backend")
        ->capture_default_str();
    cmd->add_option("--retries", opts.retries, "HTTP retry count")->capture_default_str();
    cmd->add_option("--backoff-ms", opts.backoff_ms, "Initial HTTP retry backoff")
        ->capture_default_str();
    cmd->add_option("--timeout", opts.timeout_seconds, "HTTP timeout in seconds")
        ->capture_default_str();
    cmd->add_option("--max-in-flight", opts.max_in_flight,
                    "Maximum concurrent backend requests")
        ->capture_default_str();
}

// The environment wins over flags and config file.
void apply_environment(BackendOptions& opts) {
    if (const char* endpoint = std::getenv("TRANSLATOR_ENDPOINT")) opts.endpoint = endpoint;
    if (const char* key = std::getenv("TRANSLATOR_API_KEY")) opts.api_key = key;
}

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

// Applies a key=value config file to a subcommand's options. Keys are the
// long option names without the leading dashes; values given on the command
// line keep precedence. (CLI11's own config reader only runs on the root
// app, which never sees a subcommand's --config.)
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::size_t line_number = 0;
    for (const std::string& raw : io::read_lines(path)) {
        ++line_number;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto at = [&] { return path + ":" + std::to_string(line_number) + ": "; };
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(at() + "expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "config") throw ConfigError(at() + "config files cannot nest");
        CLI::Option* option = cmd->get_option_no_throw("--" + key);
        if (option == nullptr) {
            throw ConfigError(at() + "unknown key '" + key + "'");
        }
        if (option->count() > 0) continue;  // explicit flag wins
        try {
            option->add_result(value);
            option->run_callback();
        } catch (const CLI::Error& e) {
            throw ConfigError(at() + "bad value for '" + key + "': " + e.what());
        }
    }
}

std::shared_ptr<TranslatorBackend> make_backend(const BackendOptions& opts) {
    if (opts.backend == "fixture") {
        return std::make_shared<FixtureBackend>(LanguageTag(opts.fixture_home),
                                                opts.fixture_seed);
    }
    if (opts.backend == "replay") {
        if (opts.engine_id.empty()) {
            throw ConfigError("--engine-id is required with --backend replay "
                              "(it must match the engine that recorded the cache)");
        }
        if (opts.cache_dir.empty()) {
            throw ConfigError("--cache-dir is required with --backend replay");
        }
        return std::make_shared<ReplayBackend>(opts.engine_id);
    }
    if (opts.endpoint.empty()) {
        throw ConfigError("--backend http needs --endpoint or TRANSLATOR_ENDPOINT");
    }
    HttpBackendConfig config;
    config.endpoint = opts.endpoint;
    config.api_key = opts.api_key;
    config.engine_id = opts.engine_id;
    config.retry = RetryPolicy{opts.retries, opts.backoff_ms, 2.0};
    config.timeout_seconds = opts.timeout_seconds;
    return std::make_shared<HttpTranslatorBackend>(config);
}

TranslationService make_service(const BackendOptions& opts) {
    std::optional<std::filesystem::path> cache_dir;
    if (!opts.cache_dir.empty()) cache_dir = opts.cache_dir;
    return TranslationService(make_backend(opts), cache_dir);
}

// Non-blank lines of a text file.
std::vector<std::string> input_lines(const std::string& path) {
    std::vector<std::string> lines;
    for (std::string& line : io::read_lines(path)) {
        if (!line.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

int exit_code_for_failures(std::size_t failed, std::size_t total) {
    if (failed == 0) return kExitOk;
    return failed == total ? kExitTotal : kExitPartial;
}

// ---------------------------------------------------------------- commands

int cmd_backtranslate(const BackendOptions& backend_opts, const std::string& input_path,
                      const std::string& original_lang, const std::string& intermediate_lang,
                      const std::string& out_path, int passes) {
    TranslationService service = make_service(backend_opts);
    const LanguageTag original(original_lang);
    const LanguageTag intermediate(intermediate_lang);

    std::vector<Sentence> sentences;
    for (std::string& line : input_lines(input_path)) {
        sentences.push_back(Sentence{std::move(line), original});
    }

    const BatchResult batch = service.batch_back_translate(sentences, intermediate,
                                                           backend_opts.max_in_flight, passes);
    std::string body;
    for (const auto& record : batch.records) {
        if (!record) continue;
        body += records::serialize(*record);
        body += '\n';
    }
    io::write_atomic(out_path, body);
    for (const BatchItemError& failure : batch.failures) {
        std::cerr << "item " << failure.index + 1 << ": " << failure.message << "\n";
    }
    return exit_code_for_failures(batch.failures.size(), sentences.size());
}

int cmd_featurize(const std::string& records_path, const std::string& out_path, bool smooth) {
    BleuOptions options;
    options.smooth_zero_counts = smooth;

    std::string body;
    std::size_t line_number = 0;
    std::size_t bad_lines = 0;
    std::size_t total_lines = 0;
    for (const std::string& line : io::read_lines(records_path)) {
        ++line_number;
        if (line.empty()) continue;
        ++total_lines;
        try {
            const BackTranslationRecord record = records::parse(line);
            const FeatureVector features =
                bleu_feature_vector(record.back_translation, record.original, options);
            json out{{"text", record.original.text},
                     {"text_lang", record.original.language.code()},
                     {"back_translation", record.back_translation.text},
                     {"detector_intermediate_lang", record.pivot.language.code()},
                     {"engine_id", record.engine_id},
                     {"pass_count", record.pass_count},
                     {"features", features.values},
                     {"feature_schema", features.schema_version}};
            body += out.dump();
            body += '\n';
        } catch (const Error& e) {
            ++bad_lines;
            std::cerr << records_path << ":" << line_number << ": " << e.what() << "\n";
        }
    }
    io::write_atomic(out_path, body);
    return exit_code_for_failures(bad_lines, total_lines);
}

// Accepts both the library's featurized dataset lines and hand-rolled lines;
// only label + features are strictly required for training.
std::vector<classify::Example> load_train_examples(const std::string& path) {
    std::vector<classify::Example> examples;
    std::size_t line_number = 0;
    for (const std::string& line : io::read_lines(path)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            classify::Example example;
            example.label = label_from_string(j.at("label").get<std::string>());
            const auto& values = j.at("features");
            if (!values.is_array() || values.size() != example.features.values.size()) {
                throw FormatError("features must be an array of " +
                                  std::to_string(example.features.values.size()));
            }
            for (std::size_t k = 0; k < example.features.values.size(); ++k) {
                example.features.values[k] = values[k].get<double>();
            }
            example.features.schema_version =
                j.value("feature_schema", std::string(kFeatureSchemaVersion));
            examples.push_back(std::move(example));
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(line_number) + ": " + e.what());
        } catch (const Error& e) {
            throw FormatError(path + ":" + std::to_string(line_number) + ": " + e.what());
        }
    }
    return examples;
}

int cmd_train(const std::string& dataset_path, const std::string& classifier, std::uint64_t seed,
              const std::string& model_out) {
    const classify::ClassifierKind kind = classify::classifier_kind_from_string(classifier);
    const std::vector<classify::Example> examples = load_train_examples(dataset_path);
    const classify::TrainedModel model = classify::train(kind, examples, seed);
    classify::save_model(model, model_out);
    std::cerr << "trained " << classify::to_string(kind) << " on " << examples.size()
              << " examples -> " << model_out << "\n";
    return kExitOk;
}

int cmd_detect(const BackendOptions& backend_opts, const std::string& model_path,
               const std::string& input_path, const std::string& input_lang,
               const std::string& intermediate_lang, const std::string& out_path) {
    const classify::TrainedModel model = classify::load_model(model_path);
    if (model.feature_schema_version != kFeatureSchemaVersion) {
        throw SchemaError("model was trained with feature schema '" +
                          model.feature_schema_version + "' but this build produces '" +
                          kFeatureSchemaVersion + "'");
    }

    TranslationService service = make_service(backend_opts);
    const LanguageTag original(input_lang);
    const LanguageTag intermediate(intermediate_lang);

    std::vector<Sentence> sentences;
    for (std::string& line : input_lines(input_path)) {
        sentences.push_back(Sentence{std::move(line), original});
    }
    const BatchResult batch =
        service.batch_back_translate(sentences, intermediate, backend_opts.max_in_flight, -1);

    std::string body;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (!batch.records[i]) continue;
        const BackTranslationRecord& record = *batch.records[i];
        const FeatureVector features =
            bleu_feature_vector(record.back_translation, record.original);
        const classify::Prediction prediction = classify::predict(model, features);
        json out{{"text", record.original.text},
                 {"label", to_string(prediction.label)},
                 {"score", prediction.score},
                 {"back_translation", record.back_translation.text}};
        body += out.dump();
        body += '\n';
    }
    for (const BatchItemError& failure : batch.failures) {
        std::cerr << "item " << failure.index + 1 << ": " << failure.message << "\n";
    }

    if (out_path.empty()) {
        std::cout << body;
    } else {
        io::write_atomic(out_path, body);
    }
    return exit_code_for_failures(batch.failures.size(), sentences.size());
}

struct ExperimentFlags {
    std::string task = "backtranslation";
    std::string corpus_human;
    std::string corpus_foreign;
    std::string sentiment_corpus;
    std::string human_lang = "en";
    std::string foreign_lang = "fr";
    std::string generator_lang = "fr";
    std::string detector_lang = "fr";
    std::size_t pairs = 2000;
    double train_fraction = 0.7;
    std::uint64_t seed = 42;
    std::vector<std::string> classifiers = {"linear", "adaboost", "svm-smo", "svm-sgd"};
    std::string out_dir = ".";
    bool dump_datasets = false;
    bool smooth = false;
};

int cmd_experiment(const BackendOptions& backend_opts, const ExperimentFlags& flags) {
    eval::ExperimentConfig config;
    config.task = eval::task_kind_from_string(flags.task);
    config.corpus_human = flags.corpus_human;
    config.corpus_foreign = flags.corpus_foreign;
    config.sentiment_corpus = flags.sentiment_corpus;
    config.human_language = LanguageTag(flags.human_lang);
    config.foreign_language = LanguageTag(flags.foreign_lang);
    config.generator_language = LanguageTag(flags.generator_lang);
    config.detector_language = LanguageTag(flags.detector_lang);
    config.pairs = flags.pairs;
    config.train_fraction = flags.train_fraction;
    config.seed = flags.seed;
    config.max_in_flight = backend_opts.max_in_flight;
    config.bleu.smooth_zero_counts = flags.smooth;
    config.classifiers.clear();
    for (const std::string& name : flags.classifiers) {
        config.classifiers.push_back(classify::classifier_kind_from_string(name));
    }
    if (config.task == eval::TaskKind::translation) {
        if (flags.corpus_human.empty() || flags.corpus_foreign.empty()) {
            throw ConfigError("translation task needs --corpus-human and --corpus-foreign");
        }
    } else if (flags.sentiment_corpus.empty()) {
        throw ConfigError("backtranslation task needs --sentiment-corpus");
    }

    TranslationService service = make_service(backend_opts);
    const eval::ExperimentReport report =
        eval::run_experiment(config, service, flags.dump_datasets);

    const std::filesystem::path out_dir(flags.out_dir);
    const std::string base = eval::report_basename(report);
    const std::string text = eval::render_text_report(report);
    io::write_atomic(out_dir / (base + ".txt"), text);
    io::write_atomic(out_dir / (base + ".csv"), eval::render_csv_report(report));
    if (flags.dump_datasets && report.split) {
        dataset::save_featurized(out_dir / (base + ".train.jsonl"), report.split->train);
        dataset::save_featurized(out_dir / (base + ".test.jsonl"), report.split->test);
    }
    std::cout << text;
    std::cerr << "report written to " << (out_dir / (base + ".txt")).string() << "\n";
    return report.dropped_pairs > 0 ? kExitPartial : kExitOk;
}

int cmd_gen_corpus(const std::string& out_dir, std::size_t pairs, std::size_t per_class,
                   std::uint64_t seed, const std::string& home_lang,
                   const std::string& foreign_lang, std::uint64_t fixture_seed) {
    FixtureBackend backend(LanguageTag(home_lang), fixture_seed);
    const std::filesystem::path dir(out_dir);
    fixtures::write_parallel_corpus(dir / ("parallel_" + home_lang + ".txt"),
                                    dir / ("parallel_" + foreign_lang + ".txt"), pairs, seed,
                                    backend, LanguageTag(foreign_lang));
    fixtures::write_sentiment_corpus(dir / "sentiment.tsv", per_class, seed, backend);
    std::cerr << "wrote " << pairs << " parallel pairs and " << 2 * per_class
              << " sentiment sentences to " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Machine-translated text detector based on back-translation similarity"};
    app.require_subcommand(1);

    // --- backtranslate
    auto* bt = app.add_subcommand("backtranslate",
                                  "Round-trip sentences through a pivot language");
    BackendOptions bt_backend;
    std::string bt_input;
    std::string bt_original = "en";
    std::string bt_intermediate = "fr";
    std::string bt_out;
    int bt_passes = -1;
    bt->add_option("--input", bt_input, "Input file, one sentence per line")->required();
    bt->add_option("--original-lang", bt_original, "Language of the input sentences")
        ->capture_default_str();
    bt->add_option("--intermediate-lang", bt_intermediate, "Pivot language")
        ->capture_default_str();
    bt->add_option("--out", bt_out, "Output record file (JSON lines)")->required();
    bt->add_option("--passes", bt_passes,
                   "Known translation passes of the input (-1 when unknown)")
        ->capture_default_str();
    add_backend_options(bt, bt_backend);

    // --- featurize
    auto* ft = app.add_subcommand("featurize",
                                  "Compute similarity features from back-translation records");
    std::string ft_records;
    std::string ft_out;
    bool ft_smooth = false;
    ft->add_option("--records", ft_records, "Record file from `backtranslate`")->required();
    ft->add_option("--out", ft_out, "Output feature file (JSON lines)")->required();
    ft->add_flag("--smooth", ft_smooth, "Smooth zero n-gram counts");

    // --- train
    auto* tr = app.add_subcommand("train", "Train a classifier on a featurized dataset");
    std::string tr_dataset;
    std::string tr_classifier = "linear";
    std::uint64_t tr_seed = 7;
    std::string tr_model_out;
    tr->add_option("--dataset", tr_dataset, "Featurized dataset (JSON lines with labels)")
        ->required();
    tr->add_option("--classifier", tr_classifier,
                   "Classifier: linear, adaboost, svm-smo or svm-sgd")
        ->capture_default_str();
    tr->add_option("--seed", tr_seed, "Training seed")->capture_default_str();
    tr->add_option("--model-out", tr_model_out, "Model file to write")->required();

    // --- detect
    auto* dt = app.add_subcommand("detect", "Classify sentences as human or machine");
    BackendOptions dt_backend;
    std::string dt_model;
    std::string dt_input;
    std::string dt_input_lang = "en";
    std::string dt_intermediate = "fr";
    std::string dt_out;
    dt->add_option("--model", dt_model, "Trained model file")->required();
    dt->add_option("--input", dt_input, "Input file, one sentence per line")->required();
    dt->add_option("--input-lang", dt_input_lang, "Language of the input sentences")
        ->capture_default_str();
    dt->add_option("--intermediate-lang", dt_intermediate, "Pivot language for detection")
        ->capture_default_str();
    dt->add_option("--out", dt_out, "Output file (default: stdout)");
    add_backend_options(dt, dt_backend);

    // --- experiment
    auto* ex = app.add_subcommand("experiment", "Run the full train/test pipeline");
    BackendOptions ex_backend;
    ExperimentFlags ex_flags;
    std::string ex_config;
    ex->add_option("--config", ex_config, "Config file (key=value lines)");
    ex->add_option("--task", ex_flags.task, "translation or backtranslation")
        ->capture_default_str();
    ex->add_option("--corpus-human", ex_flags.corpus_human,
                   "Human side of the parallel corpus (translation task)");
    ex->add_option("--corpus-foreign", ex_flags.corpus_foreign,
                   "Foreign side of the parallel corpus (translation task)");
    ex->add_option("--sentiment-corpus", ex_flags.sentiment_corpus,
                   "Sentiment TSV (backtranslation task)");
    ex->add_option("--human-lang", ex_flags.human_lang, "Human text language")
        ->capture_default_str();
    ex->add_option("--foreign-lang", ex_flags.foreign_lang,
                   "Foreign side language (translation task)")
        ->capture_default_str();
    ex->add_option("--generator-lang", ex_flags.generator_lang,
                   "Generator pivot language (backtranslation task)")
        ->capture_default_str();
    ex->add_option("--detector-lang", ex_flags.detector_lang, "Detector pivot language")
        ->capture_default_str();
    ex->add_option("--pairs", ex_flags.pairs, "Sentence pairs to use")->capture_default_str();
    ex->add_option("--train-fraction", ex_flags.train_fraction, "Train split fraction")
        ->capture_default_str();
    ex->add_option("--seed", ex_flags.seed, "Experiment seed")->capture_default_str();
    ex->add_option("--classifiers", ex_flags.classifiers, "Classifiers to train")
        ->delimiter(',')
        ->capture_default_str();
    ex->add_option("--out-dir", ex_flags.out_dir, "Report output directory")
        ->capture_default_str();
    ex->add_flag("--dump-datasets", ex_flags.dump_datasets,
                 "Also write the featurized train/test splits");
    ex->add_flag("--smooth", ex_flags.smooth, "Smooth zero n-gram counts");
    add_backend_options(ex, ex_backend);

    // --- gen-corpus
    auto* gc = app.add_subcommand("gen-corpus",
                                  "Generate deterministic sample corpora for offline runs");
    std::string gc_out_dir = ".";
    std::size_t gc_pairs = 600;
    std::size_t gc_per_class = 300;
    std::uint64_t gc_seed = 1;
    std::string gc_home = "en";
    std::string gc_foreign = "fr";
    std::uint64_t gc_fixture_seed = 42;
    gc->add_option("--out-dir", gc_out_dir, "Output directory")->capture_default_str();
    gc->add_option("--pairs", gc_pairs, "Parallel pairs to generate")->capture_default_str();
    gc->add_option("--per-class", gc_per_class, "Sentiment sentences per polarity")
        ->capture_default_str();
    gc->add_option("--seed", gc_seed, "Corpus seed")->capture_default_str();
    gc->add_option("--home-lang", gc_home, "Human language")->capture_default_str();
    gc->add_option("--foreign-lang", gc_foreign, "Foreign language")->capture_default_str();
    gc->add_option("--fixture-seed", gc_fixture_seed, "Fixture backend seed")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (bt->parsed()) {
            apply_environment(bt_backend);
            return cmd_backtranslate(bt_backend, bt_input, bt_original, bt_intermediate, bt_out,
                                     bt_passes);
        }
        if (ft->parsed()) return cmd_featurize(ft_records, ft_out, ft_smooth);
        if (tr->parsed()) return cmd_train(tr_dataset, tr_classifier, tr_seed, tr_model_out);
        if (dt->parsed()) {
            apply_environment(dt_backend);
            return cmd_detect(dt_backend, dt_model, dt_input, dt_input_lang, dt_intermediate,
                              dt_out);
        }
        if (ex->parsed()) {
            if (!ex_config.empty()) apply_config_file(ex, ex_config);
            apply_environment(ex_backend);
            return cmd_experiment(ex_backend, ex_flags);
        }
        if (gc->parsed()) {
            return cmd_gen_corpus(gc_out_dir, gc_pairs, gc_per_class, gc_seed, gc_home,
                                  gc_foreign, gc_fixture_seed);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTotal;
    }
    return kExitConfig;
}
