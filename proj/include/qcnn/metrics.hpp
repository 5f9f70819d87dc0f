#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qcnn::metrics {

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
    int positive_class = 1; // malignant by default

    std::int64_t total() const { return tp + fp + fn + tn; }
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // set when a 0/0 case was pinned to 0 instead of NaN
    bool zero_denominator = false;
};

struct MetricsReport {
    double accuracy = 0.0;
    ClassMetrics positive; // the positive class of the confusion matrix
    ClassMetrics negative; // the other class, treated as positive in turn
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::int64_t sample_count = 0;
};

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth,
                          int positive_class = 1);

MetricsReport report(const ConfusionMatrix& cm);

std::string format_report(const MetricsReport& r);

} // namespace qcnn::metrics
