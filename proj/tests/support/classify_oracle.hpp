#pragma once

// Independent reference computations for classifier tests. Everything here
// is written directly from the textbook definitions and shares no code with
// src/classify.cpp: linear decisions as an explicit dot-product loop, stump
// votes evaluated one comparison at a time, and the regularized hinge
// objective summed term by term.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Decision value of a linear model evaluated the long way round.
inline double linear_score(const std::vector<double>& weights, double bias,
                           const std::vector<double>& features) {
    double sum = bias;
    for (std::size_t i = 0; i < weights.size() && i < features.size(); ++i) {
        sum += weights[i] * features[i];
    }
    return sum;
}

struct StumpRef {
    int feature;
    double threshold;
    int polarity;  // +1: vote +1 when feature >= threshold; -1: inverted
    double weight;
};

inline int stump_vote(const StumpRef& stump, const std::vector<double>& features) {
    const int raw = features[static_cast<std::size_t>(stump.feature)] >= stump.threshold ? 1 : -1;
    return stump.polarity * raw;
}

inline double ensemble_score(const std::vector<StumpRef>& stumps,
                             const std::vector<double>& features) {
    double sum = 0.0;
    for (const StumpRef& stump : stumps) sum += stump.weight * stump_vote(stump, features);
    return sum;
}

// true = positive class (score >= 0).
inline bool positive(double score) { return score >= 0.0; }

// lambda/2 * ||w||^2 + mean hinge loss; labels are +1/-1.
inline double svm_objective(const std::vector<double>& weights, double bias, double lambda,
                            const std::vector<std::vector<double>>& points,
                            const std::vector<int>& labels) {
    double norm_sq = bias * bias;
    for (double w : weights) norm_sq += w * w;
    double hinge = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double margin = labels[i] * linear_score(weights, bias, points[i]);
        hinge += std::max(0.0, 1.0 - margin);
    }
    return 0.5 * lambda * norm_sq + hinge / static_cast<double>(points.size());
}

// Exhaustive best-stump search: every feature, every midpoint threshold,
// both polarities, plus sentinels below/above all values. Returns the
// minimal weighted error achievable by a single stump.
inline double best_stump_error(const std::vector<std::vector<double>>& points,
                               const std::vector<int>& labels,
                               const std::vector<double>& sample_weights) {
    double best = 1.0;
    const std::size_t dims = points.empty() ? 0 : points[0].size();
    for (std::size_t f = 0; f < dims; ++f) {
        std::vector<double> values;
        for (const auto& p : points) values.push_back(p[f]);
        std::vector<double> thresholds;
        std::sort(values.begin(), values.end());
        thresholds.push_back(values.front() - 1.0);
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            if (values[i] != values[i + 1]) thresholds.push_back(0.5 * (values[i] + values[i + 1]));
        }
        thresholds.push_back(values.back() + 1.0);
        for (double threshold : thresholds) {
            for (int polarity : {1, -1}) {
                double err = 0.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const int vote = polarity * (points[i][f] >= threshold ? 1 : -1);
                    if (vote != labels[i]) err += sample_weights[i];
                }
                best = std::min(best, err);
            }
        }
    }
    return best;
}

}  // namespace oracle
