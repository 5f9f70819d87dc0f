#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <vector>

#include "qcnn/error.hpp"
#include "qcnn/metrics.hpp"
#include "qcnn/rng.hpp"

using namespace qcnn;
using namespace qcnn::metrics;

TEST_CASE("perfect predictions fill the diagonal") {
    const std::vector<int> truth = {1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
    const ConfusionMatrix cm = confusion(truth, truth, 1);
    CHECK(cm.tp == 6);
    CHECK(cm.tn == 4);
    CHECK(cm.fp == 0);
    CHECK(cm.fn == 0);

    const MetricsReport r = report(cm);
    CHECK(r.accuracy == 1.0);
    CHECK(r.positive.precision == 1.0);
    CHECK(r.positive.recall == 1.0);
    CHECK(r.positive.f1 == 1.0);
    CHECK(r.macro_f1 == 1.0);
}

TEST_CASE("all-positive predictor") {
    const std::vector<int> truth = {1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
    const std::vector<int> preds(10, 1);
    const ConfusionMatrix cm = confusion(preds, truth, 1);
    CHECK(cm.tp == 6);
    CHECK(cm.fp == 4);
    CHECK(cm.fn == 0);
    CHECK(cm.tn == 0);
}

TEST_CASE("confusion matches a brute-force tally on random labels") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> preds, truth;
        for (int i = 0; i < 50; ++i) {
            preds.push_back(rng.uniform() < 0.5 ? 0 : 1);
            truth.push_back(rng.uniform() < 0.5 ? 0 : 1);
        }
        const ConfusionMatrix cm = confusion(preds, truth, 1);
        long tp = 0, fp = 0, fn = 0, tn = 0;
        for (int i = 0; i < 50; ++i) {
            tp += preds[i] == 1 && truth[i] == 1;
            fp += preds[i] == 1 && truth[i] == 0;
            fn += preds[i] == 0 && truth[i] == 1;
            tn += preds[i] == 0 && truth[i] == 0;
        }
        CHECK(cm.tp == tp);
        CHECK(cm.fp == fp);
        CHECK(cm.fn == fn);
        CHECK(cm.tn == tn);
        CHECK(cm.total() == 50);
    }
}

TEST_CASE("length mismatch is an arity error") {
    CHECK_THROWS_AS(confusion({1, 0}, {1}, 1), ArityError);
}

TEST_CASE("report hand example: tp=3 fp=1 fn=2 tn=4") {
    ConfusionMatrix cm;
    cm.tp = 3;
    cm.fp = 1;
    cm.fn = 2;
    cm.tn = 4;
    const MetricsReport r = report(cm);
    CHECK(r.accuracy == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(r.positive.precision == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.positive.recall == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(r.positive.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    // negative class treated as positive: tp'=4, fp'=2, fn'=1
    CHECK(r.negative.precision == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    CHECK(r.negative.recall == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.macro_precision ==
          doctest::Approx((0.75 + 4.0 / 6.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("zero-denominator cases are pinned to 0 with a flag") {
    ConfusionMatrix cm;
    cm.tp = 0;
    cm.fp = 0;
    cm.fn = 3;
    cm.tn = 7;
    const MetricsReport r = report(cm);
    CHECK(r.positive.precision == 0.0);
    CHECK(r.positive.recall == 0.0);
    CHECK(r.positive.f1 == 0.0);
    CHECK(r.positive.zero_denominator);
    CHECK(!r.negative.zero_denominator);
}

TEST_CASE("empty confusion matrix is rejected") {
    CHECK_THROWS_AS(report(ConfusionMatrix{}), ContractError);
}

TEST_CASE("f1 lies between precision and recall when both are positive") {
    Rng rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        ConfusionMatrix cm;
        cm.tp = 1 + static_cast<int>(rng.below(20));
        cm.fp = static_cast<int>(rng.below(20));
        cm.fn = static_cast<int>(rng.below(20));
        cm.tn = 1 + static_cast<int>(rng.below(20));
        const MetricsReport r = report(cm);
        if (r.positive.precision > 0.0 && r.positive.recall > 0.0) {
            CHECK(r.positive.f1 >= std::min(r.positive.precision, r.positive.recall) - 1e-12);
            CHECK(r.positive.f1 <= std::max(r.positive.precision, r.positive.recall) + 1e-12);
        }
    }
}

TEST_CASE("swapping the positive class swaps per-class metrics, keeps macro and accuracy") {
    Rng rng(43);
    std::vector<int> preds, truth;
    for (int i = 0; i < 60; ++i) {
        preds.push_back(rng.uniform() < 0.4 ? 0 : 1);
        truth.push_back(rng.uniform() < 0.5 ? 0 : 1);
    }
    const MetricsReport as_one = report(confusion(preds, truth, 1));
    const MetricsReport as_zero = report(confusion(preds, truth, 0));
    CHECK(as_one.accuracy == as_zero.accuracy);
    CHECK(as_one.positive.precision == as_zero.negative.precision);
    CHECK(as_one.positive.recall == as_zero.negative.recall);
    CHECK(as_one.negative.f1 == as_zero.positive.f1);
    CHECK(as_one.macro_precision == doctest::Approx(as_zero.macro_precision).epsilon(1e-15));
    CHECK(as_one.macro_f1 == doctest::Approx(as_zero.macro_f1).epsilon(1e-15));
}

TEST_CASE("report is invariant under sample permutation") {
    Rng rng(44);
    std::vector<int> preds, truth;
    for (int i = 0; i < 30; ++i) {
        preds.push_back(rng.uniform() < 0.5 ? 0 : 1);
        truth.push_back(rng.uniform() < 0.5 ? 0 : 1);
    }
    std::vector<std::size_t> order(30);
    for (std::size_t i = 0; i < 30; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<int> preds_p, truth_p;
    for (std::size_t i : order) {
        preds_p.push_back(preds[i]);
        truth_p.push_back(truth[i]);
    }
    const MetricsReport a = report(confusion(preds, truth, 1));
    const MetricsReport b = report(confusion(preds_p, truth_p, 1));
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.positive.f1 == b.positive.f1);
    CHECK(a.macro_recall == b.macro_recall);
}
