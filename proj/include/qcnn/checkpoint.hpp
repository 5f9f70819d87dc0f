#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qcnn/hybrid.hpp"
#include "qcnn/tensor.hpp"

namespace qcnn::train {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Portable container of named parameter tensors plus training metadata.
// Binary layout (all integers little-endian):
//   magic "QCNNCKPT", u32 version, model id, metadata (sorted key/value
//   strings), tensors (name, dims, raw float32 payload), u64 FNV-1a digest
//   of everything before it.
struct Checkpoint {
    std::uint32_t format_version = kCheckpointFormatVersion;
    std::string model_id;
    std::map<std::string, std::string> metadata;
    std::vector<std::pair<std::string, nn::Tensor>> tensors;

    const nn::Tensor* find(const std::string& name) const;
};

// Snapshots the model's parameters under their layer-qualified names.
Checkpoint checkpoint_from_model(const hybrid::HybridModel& model,
                                 std::map<std::string, std::string> metadata);

// Copies checkpoint tensors into the model. The model id and every tensor
// name/shape must match, otherwise a CheckpointError is thrown.
void load_into_model(const Checkpoint& ckpt, hybrid::HybridModel& model);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Digest of an arbitrary file, as used for the checkpoint integrity check.
std::uint64_t fnv1a_digest(const std::filesystem::path& path);

} // namespace qcnn::train
