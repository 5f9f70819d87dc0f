#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcnn/tensor.hpp"

namespace qcnn::data {

enum class Label { Benign = 0, Malignant = 1 };

inline int label_index(Label l) { return static_cast<int>(l); }
inline Label label_from_index(int i) { return i == 1 ? Label::Malignant : Label::Benign; }
std::string label_name(Label l);
std::optional<Label> label_from_name(const std::string& name);

// One dataset image, identified by its path relative to the dataset root.
// Filename convention: SOB_<B|M>_<subtype>-<slide>-<magnification>-<sequence>.
struct SampleRecord {
    std::string path; // relative to the dataset root, '/' separators
    std::string subtype;
    Label label = Label::Benign;
    int magnification = 0;
    std::string slide_id;
    int sequence = 0;
};

// Parses one file name (no directories). Returns nullopt when the name does
// not follow the convention.
std::optional<SampleRecord> parse_filename(const std::string& filename);

// Inverse of parse_filename for the stem + given extension.
std::string render_filename(const SampleRecord& record, const std::string& extension = ".png");

struct ScanResult {
    std::vector<SampleRecord> records; // lexicographically ordered by path
    std::vector<std::pair<std::string, std::string>> skipped; // (path, reason)
};

// Walks `root` recursively and collects every image whose name parses and
// whose magnification matches. Files that do not qualify are reported in
// `skipped`, never silently dropped.
ScanResult scan_dataset(const std::filesystem::path& root, int magnification = 400);

// Fixed 3:1:1 ratios; only the shuffle seed varies.
struct SplitSpec {
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<SampleRecord> train;
    std::vector<SampleRecord> val;
    std::vector<SampleRecord> test;
};

// Per class: seeded shuffle, then train = floor(3n/5), val = floor(n/5),
// test = remainder. Identical inputs and seed give identical splits.
Split stratified_split(const std::vector<SampleRecord>& records, const SplitSpec& spec);

// ---- manifest (one "<relative-path>\t<label>\t<split>" line per record) ----

struct ManifestEntry {
    std::string path;
    Label label = Label::Benign;
    std::string split; // train | val | test
};

void write_manifest(const Split& split, const std::filesystem::path& out_path);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
Split split_from_manifest(const std::vector<ManifestEntry>& entries);

// ---- image loading ----

// Decodes an 8-bit image (RGB or grayscale; grayscale is replicated to three
// channels), bilinearly resizes to target x target, and scales to [0, 1].
// The result is a 3 x target x target tensor.
nn::Tensor load_image(const std::filesystem::path& file, int target_size);

inline nn::Tensor load_image(const std::filesystem::path& root, const SampleRecord& record,
                             int target_size) {
    return load_image(root / record.path, target_size);
}

// ---- synthetic data (test fixture replacing the licensed dataset) ----

struct SyntheticSample {
    std::string id;
    int label = 0; // 0 = smooth low-frequency, 1 = high-frequency texture
    nn::Tensor image;
};

// Deterministic generator: class 0 images are smooth low-frequency waves,
// class 1 images are high-frequency texture; both have matched pixel means
// so raw intensity alone does not separate them, but a small CNN can.
std::vector<SyntheticSample> synthesize_dataset(int n_per_class, std::uint64_t seed,
                                                int image_size, int channels = 3);

} // namespace qcnn::data
