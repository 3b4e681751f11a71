#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "btdetect/bleu.hpp"
#include "btdetect/label.hpp"

namespace btdetect::classify {

enum class ClassifierKind { linear, adaboost, svm_smo, svm_sgd };

const char* to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(const std::string& name);

struct Example {
    FeatureVector features;
    Label label = Label::human;
};

// Depth-1 threshold rule: vote = polarity * sign(feature >= threshold).
struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int polarity = 1;
    double weight = 0.0;
};

struct LinearHyperparameters {
    double regularization_c = 1.0;
    int max_iterations = 1000;
    double tolerance = 1e-4;
    std::uint64_t seed = 7;
};

struct AdaBoostHyperparameters {
    int rounds = 50;
};

struct SmoHyperparameters {
    double regularization_c = 1.0;
    double tolerance = 1e-3;
    int max_passes = 10;
    std::uint64_t seed = 7;
};

struct SgdHyperparameters {
    double lambda = 1e-4;
    int epochs = 100;
    std::uint64_t seed = 7;
};

struct TrainedModel {
    ClassifierKind kind = ClassifierKind::linear;
    std::string feature_schema_version;

    // Linear kinds (linear, svm_smo, svm_sgd).
    std::array<double, FeatureVector::kSize> weights{};
    double bias = 0.0;

    // AdaBoost.
    std::vector<Stump> stumps;

    // Diagnostics. round_errors: AdaBoost weighted error per kept round.
    // epoch_objectives: SGD full-set objective of the averaged iterate per
    // epoch. dual_coefficients: SMO alpha_i * y_i at exit.
    std::vector<double> round_errors;
    std::vector<double> epoch_objectives;
    std::vector<double> dual_coefficients;

    // Hyperparameters echoed as name -> value for the model file.
    std::vector<std::pair<std::string, double>> hyperparameters;
};

struct Prediction {
    Label label = Label::human;
    double score = 0.0;  // machine-positive decision value; ties go to machine
};

TrainedModel train_linear(const std::vector<Example>& train_set,
                          const LinearHyperparameters& hyper = {});
TrainedModel train_adaboost(const std::vector<Example>& train_set,
                            const AdaBoostHyperparameters& hyper = {});
TrainedModel train_svm_smo(const std::vector<Example>& train_set,
                           const SmoHyperparameters& hyper = {});
TrainedModel train_svm_sgd(const std::vector<Example>& train_set,
                           const SgdHyperparameters& hyper = {});

// Dispatch by kind with each trainer's defaults, seed overridden.
TrainedModel train(ClassifierKind kind, const std::vector<Example>& train_set, std::uint64_t seed);

Prediction predict(const TrainedModel& model, const FeatureVector& features);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace btdetect::classify
