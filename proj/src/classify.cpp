#include "btdetect/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "btdetect/io.hpp"
#include "btdetect/random.hpp"

namespace btdetect::classify {

namespace {

using nlohmann::json;

constexpr std::size_t kDim = FeatureVector::kSize;
inline constexpr const char* kModelSchema = "btdetect-model/v1";

// Dense row view of the train set: x in [0,1]^7, y in {-1,+1} with machine
// as the positive class.
struct Rows {
    std::vector<std::array<double, kDim>> x;
    std::vector<double> y;
    std::string schema;
};

Rows check_train_set(const std::vector<Example>& train_set) {
    if (train_set.empty()) throw TrainingError("empty training set");
    Rows rows;
    rows.schema = train_set.front().features.schema_version;
    bool any_machine = false;
    bool any_human = false;
    rows.x.reserve(train_set.size());
    rows.y.reserve(train_set.size());
    for (const Example& example : train_set) {
        if (example.features.schema_version != rows.schema) {
            throw SchemaError("mixed feature schema versions in training set: '" + rows.schema +
                              "' vs '" + example.features.schema_version + "'");
        }
        for (double v : example.features.values) {
            if (!std::isfinite(v)) throw TrainingError("non-finite feature value in training set");
        }
        rows.x.push_back(example.features.values);
        rows.y.push_back(example.label == Label::machine ? 1.0 : -1.0);
        (example.label == Label::machine ? any_machine : any_human) = true;
    }
    if (!any_machine || !any_human) {
        throw TrainingError("training set must contain both labels, got only '" +
                            std::string(any_machine ? "machine" : "human") + "'");
    }
    return rows;
}

double dot(const std::array<double, kDim>& a, const std::array<double, kDim>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) sum += a[i] * b[i];
    return sum;
}

}  // namespace

const char* to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::linear: return "linear";
        case ClassifierKind::adaboost: return "adaboost";
        case ClassifierKind::svm_smo: return "svm_smo";
        case ClassifierKind::svm_sgd: return "svm_sgd";
    }
    return "linear";
}

ClassifierKind classifier_kind_from_string(const std::string& name) {
    if (name == "linear") return ClassifierKind::linear;
    if (name == "adaboost") return ClassifierKind::adaboost;
    if (name == "svm_smo" || name == "svm-smo") return ClassifierKind::svm_smo;
    if (name == "svm_sgd" || name == "svm-sgd") return ClassifierKind::svm_sgd;
    throw ConfigError("unknown classifier '" + name +
                      "' (expected linear, adaboost, svm-smo or svm-sgd)");
}

// Dual coordinate descent for the L2-regularized L1-loss linear SVM, the
// solver family of liblinear. The bias is handled as an augmented constant
// feature, so the dual box constraint stays one-dimensional per example.
TrainedModel train_linear(const std::vector<Example>& train_set,
                          const LinearHyperparameters& hyper) {
    if (hyper.regularization_c <= 0.0) throw ConfigError("regularization C must be positive");
    if (hyper.max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
    const Rows rows = check_train_set(train_set);
    const std::size_t n = rows.x.size();
    const double c_upper = hyper.regularization_c;

    // Augmented weight vector: w[0..kDim-1] feature weights, w[kDim] bias.
    std::vector<double> w(kDim + 1, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> q_diag(n);
    for (std::size_t i = 0; i < n; ++i) q_diag[i] = dot(rows.x[i], rows.x[i]) + 1.0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 gen(hyper.seed);

    for (int iteration = 0; iteration < hyper.max_iterations; ++iteration) {
        rng::shuffle(order, gen);
        double max_violation = 0.0;
        for (std::size_t i : order) {
            double margin = w[kDim];
            for (std::size_t d = 0; d < kDim; ++d) margin += w[d] * rows.x[i][d];
            const double gradient = rows.y[i] * margin - 1.0;
            double projected = gradient;
            if (alpha[i] <= 0.0) {
                projected = std::min(gradient, 0.0);
            } else if (alpha[i] >= c_upper) {
                projected = std::max(gradient, 0.0);
            }
            max_violation = std::max(max_violation, std::fabs(projected));
            if (std::fabs(projected) < 1e-14) continue;
            const double alpha_old = alpha[i];
            alpha[i] = std::clamp(alpha[i] - gradient / q_diag[i], 0.0, c_upper);
            const double delta = (alpha[i] - alpha_old) * rows.y[i];
            if (delta == 0.0) continue;
            for (std::size_t d = 0; d < kDim; ++d) w[d] += delta * rows.x[i][d];
            w[kDim] += delta;
        }
        if (max_violation < hyper.tolerance) break;
    }

    TrainedModel model;
    model.kind = ClassifierKind::linear;
    model.feature_schema_version = rows.schema;
    for (std::size_t d = 0; d < kDim; ++d) model.weights[d] = w[d];
    model.bias = w[kDim];
    model.hyperparameters = {{"C", hyper.regularization_c},
                             {"max_iterations", static_cast<double>(hyper.max_iterations)},
                             {"tolerance", hyper.tolerance},
                             {"seed", static_cast<double>(hyper.seed)}};
    return model;
}

TrainedModel train_adaboost(const std::vector<Example>& train_set,
                            const AdaBoostHyperparameters& hyper) {
    if (hyper.rounds < 1) throw ConfigError("adaboost needs at least 1 round");
    const Rows rows = check_train_set(train_set);
    const std::size_t n = rows.x.size();

    // Midpoint thresholds per feature, plus sentinels so a stump can vote
    // one way on every point.
    std::array<std::vector<double>, kDim> thresholds;
    for (std::size_t f = 0; f < kDim; ++f) {
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) values[i] = rows.x[i][f];
        std::sort(values.begin(), values.end());
        thresholds[f].push_back(values.front() - 0.5);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (values[i] != values[i + 1]) {
                thresholds[f].push_back(0.5 * (values[i] + values[i + 1]));
            }
        }
        thresholds[f].push_back(values.back() + 0.5);
    }

    std::vector<double> sample_weight(n, 1.0 / static_cast<double>(n));
    TrainedModel model;
    model.kind = ClassifierKind::adaboost;
    model.feature_schema_version = rows.schema;
    model.hyperparameters = {{"rounds", static_cast<double>(hyper.rounds)}};

    for (int round = 0; round < hyper.rounds; ++round) {
        Stump best;
        double best_error = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < kDim; ++f) {
            for (double threshold : thresholds[f]) {
                double error_pos = 0.0;  // error of polarity +1
                for (std::size_t i = 0; i < n; ++i) {
                    const double vote = rows.x[i][f] >= threshold ? 1.0 : -1.0;
                    if (vote != rows.y[i]) error_pos += sample_weight[i];
                }
                // Polarity -1 flips every vote: its error is the complement.
                const double error_neg = 1.0 - error_pos;
                if (error_pos < best_error) {
                    best_error = error_pos;
                    best = Stump{static_cast<int>(f), threshold, 1, 0.0};
                }
                if (error_neg < best_error) {
                    best_error = error_neg;
                    best = Stump{static_cast<int>(f), threshold, -1, 0.0};
                }
            }
        }

        if (best_error >= 0.5) break;  // no weak learner left
        const double clamped = std::max(best_error, 1e-12);
        best.weight = 0.5 * std::log((1.0 - clamped) / clamped);
        model.stumps.push_back(best);
        model.round_errors.push_back(best_error);
        if (best_error == 0.0) break;  // perfect stump, further rounds are no-ops

        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double vote =
                best.polarity * (rows.x[i][static_cast<std::size_t>(best.feature)] >=
                                         best.threshold
                                     ? 1.0
                                     : -1.0);
            sample_weight[i] *= std::exp(-best.weight * rows.y[i] * vote);
            total += sample_weight[i];
        }
        for (double& weight : sample_weight) weight /= total;
    }

    if (model.stumps.empty()) {
        // Degenerate data where no stump beats chance (e.g. identical
        // features, balanced labels): keep the model total with a neutral
        // stump whose score is always 0.
        model.stumps.push_back(Stump{0, 0.0, 1, 0.0});
        model.round_errors.push_back(0.5);
    }
    return model;
}

// Simplified SMO with a linear kernel; the weight vector is maintained
// incrementally so kernel evaluations stay O(dim).
TrainedModel train_svm_smo(const std::vector<Example>& train_set, const SmoHyperparameters& hyper) {
    if (hyper.regularization_c <= 0.0) throw ConfigError("regularization C must be positive");
    if (hyper.max_passes < 1) throw ConfigError("max_passes must be at least 1");
    const Rows rows = check_train_set(train_set);
    const std::size_t n = rows.x.size();
    const double c_upper = hyper.regularization_c;

    std::vector<double> alpha(n, 0.0);
    std::array<double, kDim> w{};
    double b = 0.0;
    std::mt19937_64 gen(hyper.seed);

    const auto decision = [&](std::size_t i) { return dot(w, rows.x[i]) + b; };

    int passes = 0;
    int sweeps = 0;
    const int sweep_cap = 1000 * hyper.max_passes;
    double last_violation = 0.0;
    while (passes < hyper.max_passes) {
        if (++sweeps > sweep_cap) {
            throw TrainingError("smo failed to converge after " + std::to_string(sweeps) +
                                " sweeps; worst KKT violation " + std::to_string(last_violation));
        }
        int num_changed = 0;
        last_violation = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double error_i = decision(i) - rows.y[i];
            const double violation = rows.y[i] * error_i;
            if (!((violation < -hyper.tolerance && alpha[i] < c_upper) ||
                  (violation > hyper.tolerance && alpha[i] > 0.0))) {
                continue;
            }
            last_violation = std::max(last_violation, std::fabs(violation));

            std::size_t j = rng::next_below(gen, n - 1);
            if (j >= i) ++j;
            const double error_j = decision(j) - rows.y[j];
            const double alpha_i_old = alpha[i];
            const double alpha_j_old = alpha[j];

            double low;
            double high;
            if (rows.y[i] != rows.y[j]) {
                low = std::max(0.0, alpha[j] - alpha[i]);
                high = std::min(c_upper, c_upper + alpha[j] - alpha[i]);
            } else {
                low = std::max(0.0, alpha[i] + alpha[j] - c_upper);
                high = std::min(c_upper, alpha[i] + alpha[j]);
            }
            if (low == high) continue;

            const double k_ii = dot(rows.x[i], rows.x[i]);
            const double k_jj = dot(rows.x[j], rows.x[j]);
            const double k_ij = dot(rows.x[i], rows.x[j]);
            const double eta = 2.0 * k_ij - k_ii - k_jj;
            if (eta >= 0.0) continue;

            alpha[j] = std::clamp(alpha[j] - rows.y[j] * (error_i - error_j) / eta, low, high);
            if (std::fabs(alpha[j] - alpha_j_old) < 1e-8) continue;
            alpha[i] += rows.y[i] * rows.y[j] * (alpha_j_old - alpha[j]);

            const double b1 = b - error_i - rows.y[i] * (alpha[i] - alpha_i_old) * k_ii -
                              rows.y[j] * (alpha[j] - alpha_j_old) * k_ij;
            const double b2 = b - error_j - rows.y[i] * (alpha[i] - alpha_i_old) * k_ij -
                              rows.y[j] * (alpha[j] - alpha_j_old) * k_jj;
            if (alpha[i] > 0.0 && alpha[i] < c_upper) {
                b = b1;
            } else if (alpha[j] > 0.0 && alpha[j] < c_upper) {
                b = b2;
            } else {
                b = 0.5 * (b1 + b2);
            }

            for (std::size_t d = 0; d < kDim; ++d) {
                w[d] += rows.y[i] * (alpha[i] - alpha_i_old) * rows.x[i][d] +
                        rows.y[j] * (alpha[j] - alpha_j_old) * rows.x[j][d];
            }
            ++num_changed;
        }
        passes = num_changed == 0 ? passes + 1 : 0;
    }

    TrainedModel model;
    model.kind = ClassifierKind::svm_smo;
    model.feature_schema_version = rows.schema;
    model.weights = w;
    model.bias = b;
    model.dual_coefficients.resize(n);
    for (std::size_t i = 0; i < n; ++i) model.dual_coefficients[i] = alpha[i] * rows.y[i];
    model.hyperparameters = {{"C", hyper.regularization_c},
                             {"tolerance", hyper.tolerance},
                             {"max_passes", static_cast<double>(hyper.max_passes)},
                             {"seed", static_cast<double>(hyper.seed)}};
    return model;
}

// Pegasos: hinge-loss SGD with step 1/(lambda*t), projection onto the
// 1/sqrt(lambda) ball, and the averaged iterate as the returned model.
TrainedModel train_svm_sgd(const std::vector<Example>& train_set, const SgdHyperparameters& hyper) {
    if (hyper.lambda <= 0.0) throw ConfigError("lambda must be positive");
    if (hyper.epochs < 1) throw ConfigError("epochs must be at least 1");
    const Rows rows = check_train_set(train_set);
    const std::size_t n = rows.x.size();

    // Bias as an augmented constant feature; dimension kDim+1 throughout.
    std::vector<double> w(kDim + 1, 0.0);
    std::vector<double> w_sum(kDim + 1, 0.0);
    std::size_t updates = 0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 gen(hyper.seed);

    TrainedModel model;
    model.kind = ClassifierKind::svm_sgd;
    model.feature_schema_version = rows.schema;

    const double radius = 1.0 / std::sqrt(hyper.lambda);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng::shuffle(order, gen);
        for (std::size_t i : order) {
            ++updates;
            const double eta = 1.0 / (hyper.lambda * static_cast<double>(updates));
            double margin = w[kDim];
            for (std::size_t d = 0; d < kDim; ++d) margin += w[d] * rows.x[i][d];
            margin *= rows.y[i];

            const double shrink = 1.0 - eta * hyper.lambda;
            for (double& v : w) v *= shrink;
            if (margin < 1.0) {
                for (std::size_t d = 0; d < kDim; ++d) w[d] += eta * rows.y[i] * rows.x[i][d];
                w[kDim] += eta * rows.y[i];
            }

            double norm = 0.0;
            for (double v : w) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > radius) {
                const double scale = radius / norm;
                for (double& v : w) v *= scale;
            }
            for (std::size_t d = 0; d <= kDim; ++d) w_sum[d] += w[d];
        }

        // Objective of the running average on the full set, one entry per
        // epoch; tests assert this is non-increasing within tolerance.
        double objective = 0.0;
        std::vector<double> w_avg(kDim + 1);
        for (std::size_t d = 0; d <= kDim; ++d) {
            w_avg[d] = w_sum[d] / static_cast<double>(updates);
            objective += w_avg[d] * w_avg[d];
        }
        objective *= 0.5 * hyper.lambda;
        double hinge = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double margin = w_avg[kDim];
            for (std::size_t d = 0; d < kDim; ++d) margin += w_avg[d] * rows.x[i][d];
            hinge += std::max(0.0, 1.0 - rows.y[i] * margin);
        }
        objective += hinge / static_cast<double>(n);
        model.epoch_objectives.push_back(objective);
    }

    for (std::size_t d = 0; d < kDim; ++d) {
        model.weights[d] = w_sum[d] / static_cast<double>(updates);
    }
    model.bias = w_sum[kDim] / static_cast<double>(updates);
    model.hyperparameters = {{"lambda", hyper.lambda},
                             {"epochs", static_cast<double>(hyper.epochs)},
                             {"seed", static_cast<double>(hyper.seed)}};
    return model;
}

TrainedModel train(ClassifierKind kind, const std::vector<Example>& train_set,
                   std::uint64_t seed) {
    switch (kind) {
        case ClassifierKind::linear: {
            LinearHyperparameters hyper;
            hyper.seed = seed;
            return train_linear(train_set, hyper);
        }
        case ClassifierKind::adaboost:
            return train_adaboost(train_set, AdaBoostHyperparameters{});
        case ClassifierKind::svm_smo: {
            SmoHyperparameters hyper;
            hyper.seed = seed;
            return train_svm_smo(train_set, hyper);
        }
        case ClassifierKind::svm_sgd: {
            SgdHyperparameters hyper;
            hyper.seed = seed;
            return train_svm_sgd(train_set, hyper);
        }
    }
    throw ConfigError("unknown classifier kind");
}

Prediction predict(const TrainedModel& model, const FeatureVector& features) {
    if (features.schema_version != model.feature_schema_version) {
        throw SchemaError("feature schema '" + features.schema_version +
                          "' does not match model schema '" + model.feature_schema_version + "'");
    }
    double score = 0.0;
    if (model.kind == ClassifierKind::adaboost) {
        for (const Stump& stump : model.stumps) {
            const double raw =
                features.values[static_cast<std::size_t>(stump.feature)] >= stump.threshold ? 1.0
                                                                                            : -1.0;
            score += stump.weight * stump.polarity * raw;
        }
    } else {
        score = model.bias;
        for (std::size_t d = 0; d < kDim; ++d) score += model.weights[d] * features.values[d];
    }
    return Prediction{score >= 0.0 ? Label::machine : Label::human, score};
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    json hyper = json::object();
    for (const auto& [name, value] : model.hyperparameters) hyper[name] = value;

    json j{{"schema", kModelSchema},
           {"kind", to_string(model.kind)},
           {"feature_schema_version", model.feature_schema_version},
           {"hyperparameters", hyper}};
    if (model.kind == ClassifierKind::adaboost) {
        json stumps = json::array();
        for (const Stump& stump : model.stumps) {
            stumps.push_back(json{{"feature", stump.feature},
                                  {"threshold", stump.threshold},
                                  {"polarity", stump.polarity},
                                  {"weight", stump.weight}});
        }
        j["parameters"] = json{{"stumps", stumps}};
        j["diagnostics"] = json{{"round_errors", model.round_errors}};
    } else {
        j["parameters"] = json{{"weights", model.weights}, {"bias", model.bias}};
        json diagnostics = json::object();
        if (!model.epoch_objectives.empty()) diagnostics["epoch_objectives"] = model.epoch_objectives;
        if (!model.dual_coefficients.empty()) diagnostics["dual_coefficients"] = model.dual_coefficients;
        j["diagnostics"] = diagnostics;
    }
    io::write_atomic(path, j.dump(2) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw FormatError("corrupt model file " + path.string() + ": " + e.what());
    }
    try {
        const std::string schema = j.at("schema").get<std::string>();
        if (schema != kModelSchema) {
            throw SchemaError("unsupported model schema '" + schema + "' in " + path.string() +
                              " (expected '" + kModelSchema + "')");
        }
        TrainedModel model;
        model.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
        model.feature_schema_version = j.at("feature_schema_version").get<std::string>();
        for (const auto& [name, value] : j.at("hyperparameters").items()) {
            model.hyperparameters.emplace_back(name, value.get<double>());
        }
        const json& parameters = j.at("parameters");
        if (model.kind == ClassifierKind::adaboost) {
            for (const json& s : parameters.at("stumps")) {
                model.stumps.push_back(Stump{s.at("feature").get<int>(),
                                             s.at("threshold").get<double>(),
                                             s.at("polarity").get<int>(),
                                             s.at("weight").get<double>()});
            }
            model.round_errors =
                j.value("diagnostics", json::object()).value("round_errors", std::vector<double>{});
        } else {
            const auto& weights = parameters.at("weights");
            if (weights.size() != kDim) {
                throw FormatError("model weight vector must have " + std::to_string(kDim) +
                                  " entries, got " + std::to_string(weights.size()));
            }
            for (std::size_t d = 0; d < kDim; ++d) model.weights[d] = weights[d].get<double>();
            model.bias = parameters.at("bias").get<double>();
            const json diagnostics = j.value("diagnostics", json::object());
            model.epoch_objectives = diagnostics.value("epoch_objectives", std::vector<double>{});
            model.dual_coefficients = diagnostics.value("dual_coefficients", std::vector<double>{});
        }
        return model;
    } catch (const json::exception& e) {
        throw FormatError("corrupt model file " + path.string() + ": " + e.what());
    }
}

}  // namespace btdetect::classify
