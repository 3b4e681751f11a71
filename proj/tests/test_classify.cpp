#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "btdetect/classify.hpp"
#include "btdetect/io.hpp"
#include "btdetect/random.hpp"
#include "support/classify_oracle.hpp"

using namespace btdetect;
using namespace btdetect::classify;
namespace fs = std::filesystem;

namespace {

constexpr ClassifierKind kAllKinds[] = {ClassifierKind::linear, ClassifierKind::adaboost,
                                        ClassifierKind::svm_smo, ClassifierKind::svm_sgd};

fs::path temp_dir(const std::string& tag) {
    const fs::path dir =
        fs::temp_directory_path() / ("btdetect_classify_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

FeatureVector random_features(std::mt19937_64& gen) {
    FeatureVector fv;
    for (double& v : fv.values) v = rng::unit_real(gen);
    return fv;
}

// Balanced set separable on kCum4 with a margin of at least 0.2: machine
// examples sit in [0.6, 1], human in [0, 0.4]. Other features are noise.
std::vector<Example> separable_set(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<Example> examples;
    examples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Example example;
        example.features = random_features(gen);
        example.label = i % 2 == 0 ? Label::machine : Label::human;
        const double band = 0.4 * rng::unit_real(gen);
        example.features.values[kCum4] = example.label == Label::machine ? 1.0 - band : band;
        examples.push_back(example);
    }
    return examples;
}

// Two informative features, diagonal boundary x0 + x1 >= 1 with a kept-out
// band: no single stump is perfect, so boosting needs several rounds.
std::vector<Example> diagonal_set(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<Example> examples;
    while (examples.size() < count) {
        const double a = rng::unit_real(gen);
        const double b = rng::unit_real(gen);
        if (std::fabs(a + b - 1.0) < 0.15) continue;
        Example example;
        example.features.values.fill(0.5);
        example.features.values[kInd1] = a;
        example.features.values[kInd2] = b;
        example.label = a + b >= 1.0 ? Label::machine : Label::human;
        examples.push_back(example);
    }
    return examples;
}

double training_accuracy(const TrainedModel& model, const std::vector<Example>& examples) {
    std::size_t correct = 0;
    for (const Example& example : examples) {
        if (predict(model, example.features).label == example.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<double> as_vector(const FeatureVector& fv) {
    return std::vector<double>(fv.values.begin(), fv.values.end());
}

std::vector<oracle::StumpRef> as_oracle(const std::vector<Stump>& stumps) {
    std::vector<oracle::StumpRef> out;
    for (const Stump& s : stumps) {
        out.push_back(oracle::StumpRef{s.feature, s.threshold, s.polarity, s.weight});
    }
    return out;
}

}  // namespace

TEST_CASE("all four classifiers separate a margin-0.2 set perfectly") {
    const auto train_set = separable_set(200, 11);
    const auto test_set = separable_set(200, 12);

    for (ClassifierKind kind : kAllKinds) {
        CAPTURE(to_string(kind));
        const TrainedModel model = train(kind, train_set, 7);
        CHECK(model.kind == kind);
        CHECK(training_accuracy(model, train_set) == 1.0);
        CHECK(training_accuracy(model, test_set) == 1.0);
    }
}

TEST_CASE("predict agrees with the reference scorer") {
    const auto train_set = separable_set(120, 21);
    std::mt19937_64 gen(22);

    for (ClassifierKind kind : kAllKinds) {
        CAPTURE(to_string(kind));
        const TrainedModel model = train(kind, train_set, 7);
        for (int i = 0; i < 200; ++i) {
            const FeatureVector fv = random_features(gen);
            const Prediction p = predict(model, fv);
            double expected;
            if (kind == ClassifierKind::adaboost) {
                expected = oracle::ensemble_score(as_oracle(model.stumps), as_vector(fv));
            } else {
                const std::vector<double> weights(model.weights.begin(), model.weights.end());
                expected = oracle::linear_score(weights, model.bias, as_vector(fv));
            }
            CHECK(p.score == doctest::Approx(expected).epsilon(1e-12));
            CHECK((p.label == Label::machine) == oracle::positive(p.score));
        }
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    const auto train_set = separable_set(100, 31);
    for (ClassifierKind kind : kAllKinds) {
        CAPTURE(to_string(kind));
        const TrainedModel a = train(kind, train_set, 1234);
        const TrainedModel b = train(kind, train_set, 1234);
        CHECK(a.bias == b.bias);
        for (std::size_t d = 0; d < FeatureVector::kSize; ++d) CHECK(a.weights[d] == b.weights[d]);
        REQUIRE(a.stumps.size() == b.stumps.size());
        for (std::size_t s = 0; s < a.stumps.size(); ++s) {
            CHECK(a.stumps[s].feature == b.stumps[s].feature);
            CHECK(a.stumps[s].threshold == b.stumps[s].threshold);
            CHECK(a.stumps[s].polarity == b.stumps[s].polarity);
            CHECK(a.stumps[s].weight == b.stumps[s].weight);
        }
    }
}

TEST_CASE("degenerate and invalid training sets") {
    SUBCASE("empty set") {
        for (ClassifierKind kind : kAllKinds) {
            CHECK_THROWS_AS(train(kind, {}, 7), TrainingError);
        }
    }

    SUBCASE("single-class set") {
        auto examples = separable_set(20, 41);
        for (Example& e : examples) e.label = Label::machine;
        for (ClassifierKind kind : kAllKinds) {
            CHECK_THROWS_AS(train(kind, examples, 7), TrainingError);
        }
    }

    SUBCASE("non-finite feature") {
        auto examples = separable_set(20, 42);
        examples[3].features.values[2] = std::numeric_limits<double>::quiet_NaN();
        for (ClassifierKind kind : kAllKinds) {
            CHECK_THROWS_AS(train(kind, examples, 7), TrainingError);
        }
    }

    SUBCASE("mixed feature schemas") {
        auto examples = separable_set(20, 43);
        examples[5].features.schema_version = "something-else";
        for (ClassifierKind kind : kAllKinds) {
            CHECK_THROWS_AS(train(kind, examples, 7), SchemaError);
        }
    }

    SUBCASE("identical features with balanced labels still yields a model") {
        std::vector<Example> examples;
        for (int i = 0; i < 10; ++i) {
            Example e;
            e.features.values.fill(0.5);
            e.label = i % 2 == 0 ? Label::machine : Label::human;
            examples.push_back(e);
        }
        for (ClassifierKind kind : kAllKinds) {
            CAPTURE(to_string(kind));
            const TrainedModel model = train(kind, examples, 7);
            const Prediction p = predict(model, examples[0].features);
            CHECK(std::isfinite(p.score));
        }
    }

    SUBCASE("hyperparameter validation") {
        const auto examples = separable_set(10, 44);
        CHECK_THROWS_AS(train_linear(examples, LinearHyperparameters{-1.0, 100, 1e-4, 7}),
                        ConfigError);
        CHECK_THROWS_AS(train_adaboost(examples, AdaBoostHyperparameters{0}), ConfigError);
        CHECK_THROWS_AS(train_svm_smo(examples, SmoHyperparameters{0.0, 1e-3, 10, 7}), ConfigError);
        CHECK_THROWS_AS(train_svm_sgd(examples, SgdHyperparameters{0.0, 10, 7}), ConfigError);
    }
}

TEST_CASE("adaboost stops after one stump when a perfect split exists") {
    const auto train_set = separable_set(80, 51);
    const TrainedModel model = train_adaboost(train_set, AdaBoostHyperparameters{25});
    REQUIRE(model.stumps.size() == 1);
    REQUIRE(model.round_errors.size() == 1);
    CHECK(model.round_errors[0] == 0.0);
    CHECK(model.stumps[0].feature == kCum4);
    CHECK(training_accuracy(model, train_set) == 1.0);
}

TEST_CASE("adaboost first round matches the exhaustive stump search") {
    const auto train_set = diagonal_set(150, 61);
    const TrainedModel model = train_adaboost(train_set, AdaBoostHyperparameters{1});

    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    for (const Example& e : train_set) {
        points.push_back(as_vector(e.features));
        labels.push_back(e.label == Label::machine ? 1 : -1);
    }
    const std::vector<double> uniform(points.size(), 1.0 / static_cast<double>(points.size()));

    REQUIRE(model.round_errors.size() == 1);
    CHECK(model.round_errors[0] ==
          doctest::Approx(oracle::best_stump_error(points, labels, uniform)).epsilon(1e-12));
    CHECK(model.round_errors[0] > 0.0);
    CHECK(model.round_errors[0] < 0.5);
}

TEST_CASE("adaboost training error stays under the exponential bound") {
    const auto train_set = diagonal_set(200, 62);
    const TrainedModel model = train_adaboost(train_set, AdaBoostHyperparameters{12});
    REQUIRE(model.stumps.size() >= 3);

    double bound = 1.0;
    double previous = 2.0;
    for (double error : model.round_errors) {
        CHECK(error < 0.5);  // every kept round beats chance
        bound *= 2.0 * std::sqrt(error * (1.0 - error));
        CHECK(bound < previous);
        previous = bound;
    }

    const double training_error = 1.0 - training_accuracy(model, train_set);
    CHECK(training_error <= bound + 1e-12);
}

TEST_CASE("smo exits with a feasible dual") {
    const auto train_set = separable_set(200, 71);
    SmoHyperparameters hyper;
    const TrainedModel model = train_svm_smo(train_set, hyper);

    REQUIRE(model.dual_coefficients.size() == train_set.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < model.dual_coefficients.size(); ++i) {
        const double signed_alpha = model.dual_coefficients[i];
        // alpha_i = |signed coefficient| must respect the box [0, C].
        CHECK(std::fabs(signed_alpha) <= hyper.regularization_c + 1e-9);
        const double y = train_set[i].label == Label::machine ? 1.0 : -1.0;
        CHECK(signed_alpha * y >= -1e-12);  // sign carries the label
        sum += signed_alpha;
    }
    CHECK(std::fabs(sum) <= 1e-6);
}

TEST_CASE("smo and sgd agree on almost every decision") {
    const auto train_set = separable_set(200, 81);
    const auto probe_set = separable_set(400, 82);
    const TrainedModel smo = train_svm_smo(train_set, SmoHyperparameters{});
    const TrainedModel sgd = train_svm_sgd(train_set, SgdHyperparameters{});

    std::size_t agree = 0;
    for (const Example& example : probe_set) {
        if (predict(smo, example.features).label == predict(sgd, example.features).label) ++agree;
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(probe_set.size()) >= 0.99);
}

TEST_CASE("sgd objective of the averaged iterate does not increase") {
    const auto train_set = diagonal_set(150, 91);
    SgdHyperparameters hyper;
    // Step sizes are 1/(lambda*t): keep lambda large enough that the noisy
    // warm-up is over within the first epoch, where averaging kicks in.
    hyper.lambda = 0.01;
    hyper.epochs = 40;
    const TrainedModel model = train_svm_sgd(train_set, hyper);

    REQUIRE(model.epoch_objectives.size() == 40);
    for (std::size_t t = 1; t < model.epoch_objectives.size(); ++t) {
        CHECK(model.epoch_objectives[t] <= model.epoch_objectives[t - 1] + 1e-3);
    }

    // The recorded final objective matches an independent evaluation.
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    for (const Example& e : train_set) {
        points.push_back(as_vector(e.features));
        labels.push_back(e.label == Label::machine ? 1 : -1);
    }
    const std::vector<double> weights(model.weights.begin(), model.weights.end());
    CHECK(model.epoch_objectives.back() ==
          doctest::Approx(oracle::svm_objective(weights, model.bias, hyper.lambda, points, labels))
              .epsilon(1e-9));
}

TEST_CASE("ties and hand-built models follow the decision rule") {
    TrainedModel model;
    model.kind = ClassifierKind::linear;
    model.feature_schema_version = kFeatureSchemaVersion;
    model.weights.fill(0.0);
    model.bias = 0.0;

    FeatureVector fv;
    CHECK(predict(model, fv).label == Label::machine);  // score 0 is machine
    CHECK(predict(model, fv).score == 0.0);

    model.weights[kInd1] = 1.0;
    model.bias = -0.5;
    fv.values[kInd1] = 0.3;
    CHECK(predict(model, fv).label == Label::human);
    CHECK(predict(model, fv).score == doctest::Approx(-0.2));
    fv.values[kInd1] = 0.6;
    CHECK(predict(model, fv).label == Label::machine);
    CHECK(predict(model, fv).score == doctest::Approx(0.1));

    TrainedModel ensemble;
    ensemble.kind = ClassifierKind::adaboost;
    ensemble.feature_schema_version = kFeatureSchemaVersion;
    ensemble.stumps = {Stump{kInd3, 0.5, 1, 1.0}, Stump{kInd1, 0.2, -1, 0.3}};
    std::mt19937_64 gen(101);
    for (int i = 0; i < 50; ++i) {
        const FeatureVector probe = random_features(gen);
        CHECK(predict(ensemble, probe).score ==
              oracle::ensemble_score(as_oracle(ensemble.stumps), as_vector(probe)));
    }
}

TEST_CASE("predict rejects a feature schema the model was not trained on") {
    const TrainedModel model = train_linear(separable_set(40, 111));
    FeatureVector fv;
    fv.schema_version = "bleu9.v2";
    CHECK_THROWS_AS(predict(model, fv), SchemaError);
}

TEST_CASE("scaling a linear model by a positive constant keeps every decision") {
    const auto train_set = separable_set(120, 121);
    TrainedModel model = train_linear(train_set);
    TrainedModel scaled = model;
    for (double& w : scaled.weights) w *= 3.75;
    scaled.bias *= 3.75;

    std::mt19937_64 gen(122);
    for (int i = 0; i < 300; ++i) {
        const FeatureVector fv = random_features(gen);
        CHECK(predict(model, fv).label == predict(scaled, fv).label);
    }
}

TEST_CASE("adaboost is invariant to a positive rescaling of the features") {
    const auto train_set = diagonal_set(120, 131);
    auto scaled_set = train_set;
    for (Example& e : scaled_set) {
        for (double& v : e.features.values) v *= 0.25;
    }

    const TrainedModel original = train_adaboost(train_set, AdaBoostHyperparameters{8});
    const TrainedModel rescaled = train_adaboost(scaled_set, AdaBoostHyperparameters{8});

    REQUIRE(original.stumps.size() == rescaled.stumps.size());
    for (std::size_t s = 0; s < original.stumps.size(); ++s) {
        CHECK(original.stumps[s].feature == rescaled.stumps[s].feature);
        CHECK(original.stumps[s].polarity == rescaled.stumps[s].polarity);
        CHECK(original.stumps[s].weight == doctest::Approx(rescaled.stumps[s].weight));
    }
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        CHECK(predict(original, train_set[i].features).label ==
              predict(rescaled, scaled_set[i].features).label);
    }
}

TEST_CASE("models survive a save/load round trip") {
    const auto train_set = separable_set(150, 141);
    const fs::path dir = temp_dir("models");
    std::mt19937_64 gen(142);
    std::vector<FeatureVector> probes;
    for (int i = 0; i < 1000; ++i) probes.push_back(random_features(gen));

    for (ClassifierKind kind : kAllKinds) {
        CAPTURE(to_string(kind));
        const TrainedModel model = train(kind, train_set, 7);
        const fs::path path = dir / (std::string(to_string(kind)) + ".json");
        save_model(model, path);
        const TrainedModel loaded = load_model(path);

        CHECK(loaded.kind == model.kind);
        CHECK(loaded.feature_schema_version == model.feature_schema_version);
        for (const FeatureVector& probe : probes) {
            const Prediction a = predict(model, probe);
            const Prediction b = predict(loaded, probe);
            CHECK(a.label == b.label);
            CHECK(a.score == b.score);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("corrupt and foreign model files are rejected") {
    const fs::path dir = temp_dir("badmodels");
    const TrainedModel model = train_linear(separable_set(40, 151));
    const fs::path good = dir / "model.json";
    save_model(model, good);

    const std::string body = io::read_file(good);
    const fs::path truncated = dir / "truncated.json";
    io::write_atomic(truncated, body.substr(0, 40));
    CHECK_THROWS_AS(load_model(truncated), FormatError);

    const fs::path foreign = dir / "foreign.json";
    io::write_atomic(foreign,
                     "{\"schema\": \"btdetect-model/v99\", \"kind\": \"linear\","
                     " \"feature_schema_version\": \"x\", \"hyperparameters\": {},"
                     " \"parameters\": {\"weights\": [0,0,0,0,0,0,0], \"bias\": 0}}\n");
    CHECK_THROWS_AS(load_model(foreign), SchemaError);
    fs::remove_all(dir);
}

TEST_CASE("classifier kinds round-trip through their names") {
    for (ClassifierKind kind : kAllKinds) {
        CHECK(classifier_kind_from_string(to_string(kind)) == kind);
    }
    CHECK(classifier_kind_from_string("svm-smo") == ClassifierKind::svm_smo);
    CHECK_THROWS_AS(classifier_kind_from_string("perceptron"), ConfigError);
}
