#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qcnn/checkpoint.hpp"
#include "qcnn/data.hpp"
#include "qcnn/ensemble.hpp"
#include "qcnn/hybrid.hpp"
#include "qcnn/metrics.hpp"

namespace qcnn::train {

struct TrainConfig {
    std::string model_id = "m1";
    int epochs = 100;
    double learning_rate = 0.001;
    int batch_size = 4;
    std::uint64_t seed = 0;
    std::string head_mode = "analytic"; // "analytic" or "shots:N"
    // When set, training stops after the epoch whose validation accuracy
    // reaches this value (used by overfit experiments).
    std::optional<double> early_stop_val_accuracy;
    // Echoed into checkpoint metadata under "config." keys.
    std::map<std::string, std::string> config_echo;

    void validate() const;
};

hybrid::HeadMode parse_head_mode(const std::string& text, std::uint64_t seed);

// ---- sample access ----

struct SampleInfo {
    std::string id;
    int label = 0;
};

// Uniform view over dataset images, already sized for the target model.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual const SampleInfo& info(std::size_t index) const = 0;
    virtual nn::Tensor image(std::size_t index) const = 0;
};

// Loads (and optionally caches) images from disk.
class DiskSource : public SampleSource {
public:
    DiskSource(std::filesystem::path root, std::vector<data::SampleRecord> records,
               int target_size, bool cache = true);

    std::size_t size() const override { return records_.size(); }
    const SampleInfo& info(std::size_t index) const override { return infos_[index]; }
    nn::Tensor image(std::size_t index) const override;

private:
    std::filesystem::path root_;
    std::vector<data::SampleRecord> records_;
    std::vector<SampleInfo> infos_;
    int target_size_;
    bool cache_;
    mutable std::vector<std::optional<nn::Tensor>> cached_;
};

// Wraps in-memory (synthetic) samples.
class MemorySource : public SampleSource {
public:
    explicit MemorySource(std::vector<data::SyntheticSample> samples);

    std::size_t size() const override { return samples_.size(); }
    const SampleInfo& info(std::size_t index) const override { return infos_[index]; }
    nn::Tensor image(std::size_t index) const override { return samples_[index].image; }

private:
    std::vector<data::SyntheticSample> samples_;
    std::vector<SampleInfo> infos_;
};

// Index lists into one SampleSource.
struct IndexSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

// Concatenates the split's records into one DiskSource (train, then val,
// then test) and returns the matching index lists.
std::pair<std::unique_ptr<DiskSource>, IndexSplit> disk_split_source(
    const std::filesystem::path& root, const data::Split& split, int target_size,
    bool cache = true);

// ---- training ----

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochStats> history;
    int best_epoch = -1; // 0-based; -1 when validation never improved
    double best_val_loss = 0.0;
};

// End-to-end loop: seeded shuffle per epoch, minibatch Adam on the mean NLL,
// validation after every epoch, checkpoint on strict improvement.
TrainResult train(const TrainConfig& config, const SampleSource& source, const IndexSplit& split);

// ---- evaluation ----

struct PredictionRecord {
    std::string id;
    int truth = 0;
    double p0 = 0.0;
    double p1 = 0.0;
    int predicted = 0;
};

struct EvalResult {
    metrics::MetricsReport report;
    std::vector<PredictionRecord> records;
};

EvalResult evaluate(const Checkpoint& ckpt, const SampleSource& source,
                    const std::vector<std::size_t>& indices,
                    const std::string& head_mode = "analytic");

// One "id\ttruth\tp0\tp1\tpred" line per sample; probabilities round-trip
// exactly through %.17g.
void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

// ---- ensemble orchestration ----

struct EnsembleEvalResult {
    metrics::MetricsReport report;
    std::vector<PredictionRecord> fused;
    std::optional<ensemble::WeightVector> weights; // set for the weighted method
};

// `method` is one of majority | average | weighted. The weighted method
// derives weights from `weight_source` (per-model validation predictions,
// same model order).
EnsembleEvalResult ensemble_eval(
    const std::vector<std::vector<PredictionRecord>>& model_predictions,
    const std::string& method,
    const std::vector<std::vector<PredictionRecord>>* weight_source = nullptr);

} // namespace qcnn::train
