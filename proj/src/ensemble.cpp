#include "qcnn/ensemble.hpp"

#include <cmath>

#include "qcnn/error.hpp"

namespace qcnn::ensemble {

namespace {

int argmax_label(const Prob2& p) {
    return p[1] >= p[0] ? 1 : 0; // exact tie goes to the malignant class
}

void require_models(const PredictionSet& preds, const char* op) {
    if (preds.model_count() < 2) {
        throw ArityError(std::string(op) + " requires at least 2 models, got " +
                         std::to_string(preds.model_count()));
    }
}

} // namespace

void PredictionSet::validate() const {
    if (model_ids.size() != probs.size()) {
        throw ArityError("prediction set has " + std::to_string(model_ids.size()) +
                         " model ids but " + std::to_string(probs.size()) + " probability rows");
    }
    const std::size_t n = sample_count();
    for (std::size_t m = 0; m < probs.size(); ++m) {
        if (probs[m].size() != n) {
            throw ArityError("model " + model_ids[m] + " covers " +
                             std::to_string(probs[m].size()) + " samples, expected " +
                             std::to_string(n));
        }
        for (const Prob2& p : probs[m]) {
            if (p[0] < 0.0 || p[1] < 0.0 || std::abs(p[0] + p[1] - 1.0) > 1e-6) {
                throw ContractError("probability vector [" + std::to_string(p[0]) + ", " +
                                    std::to_string(p[1]) + "] is not a distribution");
            }
        }
    }
    if (truth && truth->size() != n) {
        throw ArityError("truth labels cover " + std::to_string(truth->size()) +
                         " samples, expected " + std::to_string(n));
    }
}

std::vector<std::vector<int>> PredictionSet::argmax_labels() const {
    std::vector<std::vector<int>> labels(probs.size());
    for (std::size_t m = 0; m < probs.size(); ++m) {
        labels[m].reserve(sample_count());
        for (const Prob2& p : probs[m]) labels[m].push_back(argmax_label(p));
    }
    return labels;
}

FusedPrediction majority_vote(const PredictionSet& preds) {
    require_models(preds, "majority_vote");
    preds.validate();
    const auto labels = preds.argmax_labels();
    const std::size_t models = preds.model_count();
    const std::size_t n = preds.sample_count();

    FusedPrediction fused;
    fused.labels.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t ones = 0;
        for (std::size_t m = 0; m < models; ++m) ones += static_cast<std::size_t>(labels[m][s]);
        const std::size_t zeros = models - ones;
        if (ones > zeros) {
            fused.labels.push_back(1);
        } else if (zeros > ones) {
            fused.labels.push_back(0);
        } else {
            // vote tie: decide by the mean probability vector of this sample
            const double inv = 1.0 / static_cast<double>(models);
            Prob2 mean{0.0, 0.0};
            for (std::size_t m = 0; m < models; ++m) {
                mean[0] += inv * preds.probs[m][s][0];
                mean[1] += inv * preds.probs[m][s][1];
            }
            fused.labels.push_back(argmax_label(mean));
        }
    }
    return fused;
}

FusedPrediction average_probability(const PredictionSet& preds) {
    require_models(preds, "average_probability");
    preds.validate();
    const std::size_t models = preds.model_count();
    const std::size_t n = preds.sample_count();

    FusedPrediction fused;
    fused.probs.reserve(n);
    fused.labels.reserve(n);
    // Same accumulation form as weighted_average so the two agree exactly
    // when the weights are uniform.
    const double inv = 1.0 / static_cast<double>(models);
    for (std::size_t s = 0; s < n; ++s) {
        Prob2 mean{0.0, 0.0};
        for (std::size_t m = 0; m < models; ++m) {
            mean[0] += inv * preds.probs[m][s][0];
            mean[1] += inv * preds.probs[m][s][1];
        }
        fused.probs.push_back(mean);
        fused.labels.push_back(argmax_label(mean));
    }
    return fused;
}

std::vector<int> unique_misclassifications(const PredictionSet& preds) {
    require_models(preds, "unique_misclassifications");
    preds.validate();
    if (!preds.truth) {
        throw ContractError("unique_misclassifications requires truth labels");
    }
    const auto labels = preds.argmax_labels();
    const std::vector<int>& truth = *preds.truth;
    const std::size_t models = preds.model_count();

    std::vector<int> counts(models, 0);
    for (std::size_t s = 0; s < preds.sample_count(); ++s) {
        for (std::size_t m = 0; m < models; ++m) {
            if (labels[m][s] == truth[s]) continue;
            bool all_others_right = true;
            for (std::size_t other = 0; other < models; ++other) {
                if (other != m && labels[other][s] != truth[s]) {
                    all_others_right = false;
                    break;
                }
            }
            if (all_others_right) ++counts[m];
        }
    }
    return counts;
}

WeightVector compute_weights(const std::vector<int>& counts) {
    if (counts.empty()) throw ArityError("compute_weights needs at least one count");
    WeightVector wv;
    wv.misclassification_counts = counts;
    wv.weights.reserve(counts.size());
    double total = 0.0;
    for (int e : counts) {
        if (e < 0) throw ContractError("misclassification counts must be non-negative");
        const double raw = 1.0 / (static_cast<double>(e) + 1.0);
        wv.weights.push_back(raw);
        total += raw;
    }
    for (double& w : wv.weights) w /= total;
    return wv;
}

FusedPrediction weighted_average(const PredictionSet& preds, const WeightVector& weights) {
    require_models(preds, "weighted_average");
    preds.validate();
    if (weights.weights.size() != preds.model_count()) {
        throw ArityError("got " + std::to_string(weights.weights.size()) + " weights for " +
                         std::to_string(preds.model_count()) + " models");
    }
    const std::size_t models = preds.model_count();
    const std::size_t n = preds.sample_count();

    FusedPrediction fused;
    fused.probs.reserve(n);
    fused.labels.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        Prob2 acc{0.0, 0.0};
        for (std::size_t m = 0; m < models; ++m) {
            acc[0] += weights.weights[m] * preds.probs[m][s][0];
            acc[1] += weights.weights[m] * preds.probs[m][s][1];
        }
        fused.probs.push_back(acc);
        fused.labels.push_back(argmax_label(acc));
    }
    return fused;
}

} // namespace qcnn::ensemble
