#include "qcnn/metrics.hpp"

#include <cstdio>

#include "qcnn/error.hpp"

namespace qcnn::metrics {

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth,
                          int positive_class) {
    if (predicted.size() != truth.size()) {
        throw ArityError("confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " truth labels");
    }
    ConfusionMatrix cm;
    cm.positive_class = positive_class;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool pred_pos = predicted[i] == positive_class;
        const bool true_pos = truth[i] == positive_class;
        if (pred_pos && true_pos) {
            ++cm.tp;
        } else if (pred_pos && !true_pos) {
            ++cm.fp;
        } else if (!pred_pos && true_pos) {
            ++cm.fn;
        } else {
            ++cm.tn;
        }
    }
    return cm;
}

namespace {

ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    ClassMetrics m;
    if (tp + fp == 0) {
        m.precision = 0.0;
        m.zero_denominator = true;
    } else {
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn == 0) {
        m.recall = 0.0;
        m.zero_denominator = true;
    } else {
        m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    if (m.precision + m.recall == 0.0) {
        m.f1 = 0.0;
        m.zero_denominator = true;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

} // namespace

MetricsReport report(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) {
        throw ContractError("metrics report requires at least one scored sample");
    }
    MetricsReport r;
    r.sample_count = cm.total();
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    r.positive = class_metrics(cm.tp, cm.fp, cm.fn);
    // negative class as positive: swap roles (tn <-> tp, fn <-> fp)
    r.negative = class_metrics(cm.tn, cm.fn, cm.fp);
    r.macro_precision = (r.positive.precision + r.negative.precision) / 2.0;
    r.macro_recall = (r.positive.recall + r.negative.recall) / 2.0;
    r.macro_f1 = (r.positive.f1 + r.negative.f1) / 2.0;
    return r;
}

std::string format_report(const MetricsReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "samples   %lld\n"
                  "accuracy  %.4f\n"
                  "            precision  recall     f1\n"
                  "positive    %.4f     %.4f     %.4f%s\n"
                  "negative    %.4f     %.4f     %.4f%s\n"
                  "macro       %.4f     %.4f     %.4f\n",
                  static_cast<long long>(r.sample_count), r.accuracy, r.positive.precision,
                  r.positive.recall, r.positive.f1, r.positive.zero_denominator ? "  (0/0)" : "",
                  r.negative.precision, r.negative.recall, r.negative.f1,
                  r.negative.zero_denominator ? "  (0/0)" : "", r.macro_precision, r.macro_recall,
                  r.macro_f1);
    return buf;
}

} // namespace qcnn::metrics
