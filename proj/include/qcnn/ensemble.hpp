#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace qcnn::ensemble {

using Prob2 = std::array<double, 2>;

// Aligned per-model, per-sample probability vectors, optionally with ground
// truth. Every model covers the same samples in the same order.
struct PredictionSet {
    std::vector<std::string> model_ids;
    std::vector<std::vector<Prob2>> probs; // [model][sample]
    std::optional<std::vector<int>> truth;

    std::size_t model_count() const { return probs.size(); }
    std::size_t sample_count() const { return probs.empty() ? 0 : probs[0].size(); }

    // Enforces the alignment and normalization invariants.
    void validate() const;

    // Per-model hard labels by argmax (ties to class 1).
    std::vector<std::vector<int>> argmax_labels() const;
};

struct WeightVector {
    std::vector<double> weights;                  // positive, sum to 1
    std::vector<int> misclassification_counts;    // source counts e_i
};

struct FusedPrediction {
    std::vector<Prob2> probs; // empty for majority voting
    std::vector<int> labels;
};

// Label chosen by the most models; ties (even model counts) fall back to
// probability averaging on that sample.
FusedPrediction majority_vote(const PredictionSet& preds);

// Elementwise arithmetic mean across models, argmax labeling, ties to 1.
FusedPrediction average_probability(const PredictionSet& preds);

// e_i = number of samples model i got wrong while every other model got them
// right. With two models this reduces to "the other model was correct".
std::vector<int> unique_misclassifications(const PredictionSet& preds);

// raw_i = 1/(e_i + 1), normalized to sum 1. The +1 keeps zero-error models
// finite while preserving the inverse-proportionality ordering.
WeightVector compute_weights(const std::vector<int>& counts);

// Convex combination per sample with the same argmax/tie rule as averaging.
FusedPrediction weighted_average(const PredictionSet& preds, const WeightVector& weights);

} // namespace qcnn::ensemble
