#include "qcnn/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qcnn/adam.hpp"
#include "qcnn/error.hpp"
#include "qcnn/ops.hpp"
#include "qcnn/rng.hpp"

namespace qcnn::train {

void TrainConfig::validate() const {
    if (epochs < 1) throw UsageError("epochs must be >= 1");
    if (batch_size < 1) throw UsageError("batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be > 0");
    parse_head_mode(head_mode, seed);
}

hybrid::HeadMode parse_head_mode(const std::string& text, std::uint64_t seed) {
    if (text == "analytic") return hybrid::HeadMode::analytic();
    if (text.rfind("shots:", 0) == 0) {
        const std::string count = text.substr(6);
        if (!count.empty() && std::all_of(count.begin(), count.end(), [](unsigned char c) {
                return std::isdigit(c);
            })) {
            const unsigned long long shots = std::stoull(count);
            if (shots >= 1) {
                return hybrid::HeadMode::with_shots(shots, Rng::mix(seed, 0x5107));
            }
        }
    }
    throw UsageError("head mode must be 'analytic' or 'shots:N', got '" + text + "'");
}

// ---- sources ----

DiskSource::DiskSource(std::filesystem::path root, std::vector<data::SampleRecord> records,
                       int target_size, bool cache)
    : root_(std::move(root)),
      records_(std::move(records)),
      target_size_(target_size),
      cache_(cache) {
    infos_.reserve(records_.size());
    for (const data::SampleRecord& r : records_) {
        infos_.push_back({r.path, data::label_index(r.label)});
    }
    if (cache_) cached_.resize(records_.size());
}

nn::Tensor DiskSource::image(std::size_t index) const {
    if (cache_ && cached_[index]) return *cached_[index];
    nn::Tensor t = data::load_image(root_, records_[index], target_size_);
    if (cache_) cached_[index] = t;
    return t;
}

MemorySource::MemorySource(std::vector<data::SyntheticSample> samples)
    : samples_(std::move(samples)) {
    infos_.reserve(samples_.size());
    for (const data::SyntheticSample& s : samples_) {
        infos_.push_back({s.id, s.label});
    }
}

std::pair<std::unique_ptr<DiskSource>, IndexSplit> disk_split_source(
    const std::filesystem::path& root, const data::Split& split, int target_size, bool cache) {
    std::vector<data::SampleRecord> records;
    IndexSplit idx;
    for (const auto& r : split.train) {
        idx.train.push_back(records.size());
        records.push_back(r);
    }
    for (const auto& r : split.val) {
        idx.val.push_back(records.size());
        records.push_back(r);
    }
    for (const auto& r : split.test) {
        idx.test.push_back(records.size());
        records.push_back(r);
    }
    return {std::make_unique<DiskSource>(root, std::move(records), target_size, cache), idx};
}

// ---- training ----

namespace {

int predicted_label(const std::array<double, 2>& probs) {
    return probs[1] >= probs[0] ? 1 : 0; // tie to the malignant class
}

struct ValStats {
    double mean_loss = 0.0;
    double accuracy = 0.0;
};

ValStats eval_split(hybrid::HybridModel& model, const SampleSource& source,
                    const std::vector<std::size_t>& indices) {
    ValStats stats;
    if (indices.empty()) return stats;
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t index : indices) {
        hybrid::HybridModel::Context ctx;
        const auto probs = model.forward(source.image(index), ctx, nn::Mode::Eval);
        const int truth = source.info(index).label;
        loss_sum += nn::nll_loss(probs, truth);
        if (predicted_label(probs) == truth) ++correct;
    }
    stats.mean_loss = loss_sum / static_cast<double>(indices.size());
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
    return stats;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

TrainResult train(const TrainConfig& config, const SampleSource& source, const IndexSplit& split) {
    config.validate();
    if (split.train.empty()) {
        throw DataError("training split is empty");
    }

    hybrid::HybridModel model = hybrid::build_model(config.model_id, config.seed);
    model.set_head(hybrid::QuantumHead(parse_head_mode(config.head_mode, config.seed)));

    nn::AdamConfig adam_cfg;
    adam_cfg.lr = static_cast<float>(config.learning_rate);
    nn::AdamOptimizer optimizer(model.parameters(), adam_cfg);

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order = split.train;
    std::uint64_t sample_counter = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(config.seed, 0xE70C, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double train_loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            optimizer.zero_grad();

            for (std::size_t i = start; i < end; ++i) {
                const std::size_t index = order[i];
                Rng dropout_rng(Rng::mix(config.seed, 0xD807, sample_counter));
                hybrid::HybridModel::Context ctx;
                const auto probs = model.forward(source.image(index), ctx, nn::Mode::Train,
                                                 &dropout_rng, sample_counter);
                const int truth = source.info(index).label;
                const double loss = nn::nll_loss(probs, truth);
                if (!std::isfinite(loss)) {
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                                       ", batch " + std::to_string(start / config.batch_size + 1) +
                                       ", sample '" + source.info(index).id + "'");
                }
                train_loss_sum += loss;

                auto upstream = nn::nll_loss_backward(probs, truth);
                upstream[0] *= inv_batch;
                upstream[1] *= inv_batch;
                model.backward(upstream, ctx);
                ++sample_counter;
            }
            optimizer.step();
        }

        EpochStats stats;
        stats.train_loss = train_loss_sum / static_cast<double>(order.size());
        const std::vector<std::size_t>& val_indices =
            split.val.empty() ? split.train : split.val;
        const ValStats val = eval_split(model, source, val_indices);
        stats.val_loss = val.mean_loss;
        stats.val_accuracy = val.accuracy;
        result.history.push_back(stats);

        if (!std::isfinite(stats.val_loss)) {
            throw NumericError("non-finite validation loss after epoch " +
                               std::to_string(epoch + 1));
        }

        // strict improvement; ties keep the earlier checkpoint
        if (stats.val_loss < result.best_val_loss) {
            result.best_val_loss = stats.val_loss;
            result.best_epoch = epoch;
            std::map<std::string, std::string> meta;
            meta["epoch"] = std::to_string(epoch + 1);
            meta["val_loss"] = format_double(stats.val_loss);
            meta["val_accuracy"] = format_double(stats.val_accuracy);
            meta["seed"] = std::to_string(config.seed);
            meta["model_id"] = config.model_id;
            meta["config.epochs"] = std::to_string(config.epochs);
            meta["config.lr"] = format_double(config.learning_rate);
            meta["config.batch"] = std::to_string(config.batch_size);
            meta["config.head"] = config.head_mode;
            for (const auto& [key, value] : config.config_echo) {
                meta["config." + key] = value;
            }
            result.best = checkpoint_from_model(model, std::move(meta));
        }

        if (config.early_stop_val_accuracy &&
            stats.val_accuracy >= *config.early_stop_val_accuracy) {
            break;
        }
    }
    return result;
}

// ---- evaluation ----

EvalResult evaluate(const Checkpoint& ckpt, const SampleSource& source,
                    const std::vector<std::size_t>& indices, const std::string& head_mode) {
    if (ckpt.model_id != "m1" && ckpt.model_id != "m2" && ckpt.model_id != "m3" &&
        ckpt.model_id != "toy") {
        throw CheckpointError("checkpoint names unknown model '" + ckpt.model_id + "'");
    }
    hybrid::HybridModel model = hybrid::build_model(ckpt.model_id, 0);
    load_into_model(ckpt, model);
    model.set_head(hybrid::QuantumHead(parse_head_mode(head_mode, 0)));

    EvalResult result;
    result.records.reserve(indices.size());
    std::vector<int> preds, truths;
    for (std::size_t index : indices) {
        hybrid::HybridModel::Context ctx;
        const auto probs = model.forward(source.image(index), ctx, nn::Mode::Eval, nullptr,
                                         static_cast<std::uint64_t>(index));
        PredictionRecord rec;
        rec.id = source.info(index).id;
        rec.truth = source.info(index).label;
        rec.p0 = probs[0];
        rec.p1 = probs[1];
        rec.predicted = predicted_label(probs);
        preds.push_back(rec.predicted);
        truths.push_back(rec.truth);
        result.records.push_back(std::move(rec));
    }
    result.report = metrics::report(metrics::confusion(preds, truths, 1));
    return result;
}

void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write predictions " + path.string());
    out << "# id\ttruth\tp0\tp1\tpred\n";
    char buf[128];
    for (const PredictionRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "\t%d\t%.17g\t%.17g\t%d\n", r.truth, r.p0, r.p1,
                      r.predicted);
        out << r.id << buf;
    }
    if (!out) throw DataError("failed writing predictions " + path.string());
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read predictions " + path.string());
    std::vector<PredictionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        PredictionRecord r;
        std::string truth, p0, p1, pred;
        if (!std::getline(fields, r.id, '\t') || !std::getline(fields, truth, '\t') ||
            !std::getline(fields, p0, '\t') || !std::getline(fields, p1, '\t') ||
            !std::getline(fields, pred)) {
            throw DataError("prediction file " + path.string() + " line " +
                            std::to_string(line_no) + ": expected 5 tab-separated fields");
        }
        try {
            r.truth = std::stoi(truth);
            r.p0 = std::stod(p0);
            r.p1 = std::stod(p1);
            r.predicted = std::stoi(pred);
        } catch (const std::exception&) {
            throw DataError("prediction file " + path.string() + " line " +
                            std::to_string(line_no) + ": malformed numeric field");
        }
        records.push_back(std::move(r));
    }
    return records;
}

// ---- ensemble orchestration ----

namespace {

// All files must list identical sample ids in identical order with matching
// truth labels.
void check_alignment(const std::vector<std::vector<PredictionRecord>>& model_predictions,
                     const char* what) {
    if (model_predictions.size() < 2) {
        throw ArityError(std::string(what) + " needs at least 2 prediction files, got " +
                         std::to_string(model_predictions.size()));
    }
    const auto& first = model_predictions[0];
    for (std::size_t m = 1; m < model_predictions.size(); ++m) {
        const auto& other = model_predictions[m];
        if (other.size() != first.size()) {
            throw DataError(std::string(what) + ": file 1 has " + std::to_string(first.size()) +
                            " records, file " + std::to_string(m + 1) + " has " +
                            std::to_string(other.size()));
        }
        for (std::size_t s = 0; s < first.size(); ++s) {
            if (other[s].id != first[s].id) {
                throw DataError(std::string(what) + ": files diverge at record " +
                                std::to_string(s + 1) + ": '" + first[s].id + "' vs '" +
                                other[s].id + "'");
            }
            if (other[s].truth != first[s].truth) {
                throw DataError(std::string(what) + ": truth disagrees for sample '" +
                                first[s].id + "'");
            }
        }
    }
}

ensemble::PredictionSet to_prediction_set(
    const std::vector<std::vector<PredictionRecord>>& model_predictions) {
    ensemble::PredictionSet set;
    std::vector<int> truth;
    for (std::size_t m = 0; m < model_predictions.size(); ++m) {
        set.model_ids.push_back("model" + std::to_string(m + 1));
        std::vector<ensemble::Prob2> row;
        row.reserve(model_predictions[m].size());
        for (const PredictionRecord& r : model_predictions[m]) {
            row.push_back({r.p0, r.p1});
        }
        set.probs.push_back(std::move(row));
    }
    for (const PredictionRecord& r : model_predictions[0]) truth.push_back(r.truth);
    set.truth = std::move(truth);
    return set;
}

} // namespace

EnsembleEvalResult ensemble_eval(
    const std::vector<std::vector<PredictionRecord>>& model_predictions,
    const std::string& method, const std::vector<std::vector<PredictionRecord>>* weight_source) {
    check_alignment(model_predictions, "ensemble");
    const ensemble::PredictionSet set = to_prediction_set(model_predictions);

    EnsembleEvalResult result;
    ensemble::FusedPrediction fused;
    if (method == "majority") {
        fused = ensemble::majority_vote(set);
        fused.probs = ensemble::average_probability(set).probs; // informational
    } else if (method == "average") {
        fused = ensemble::average_probability(set);
    } else if (method == "weighted") {
        if (weight_source == nullptr || weight_source->empty()) {
            throw UsageError("the weighted method requires validation prediction files");
        }
        if (weight_source->size() != model_predictions.size()) {
            throw ArityError("got " + std::to_string(weight_source->size()) +
                             " validation files for " + std::to_string(model_predictions.size()) +
                             " models");
        }
        check_alignment(*weight_source, "weight source");
        const ensemble::PredictionSet val_set = to_prediction_set(*weight_source);
        result.weights =
            ensemble::compute_weights(ensemble::unique_misclassifications(val_set));
        fused = ensemble::weighted_average(set, *result.weights);
    } else {
        throw UsageError("unknown ensemble method '" + method +
                         "' (expected majority, average, or weighted)");
    }

    std::vector<int> preds, truths;
    const auto& first = model_predictions[0];
    for (std::size_t s = 0; s < first.size(); ++s) {
        PredictionRecord rec;
        rec.id = first[s].id;
        rec.truth = first[s].truth;
        rec.p0 = fused.probs.empty() ? 0.0 : fused.probs[s][0];
        rec.p1 = fused.probs.empty() ? 0.0 : fused.probs[s][1];
        rec.predicted = fused.labels[s];
        preds.push_back(rec.predicted);
        truths.push_back(rec.truth);
        result.fused.push_back(std::move(rec));
    }
    result.report = metrics::report(metrics::confusion(preds, truths, 1));
    return result;
}

} // namespace qcnn::train
