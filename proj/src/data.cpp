#include "qcnn/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "qcnn/error.hpp"
#include "qcnn/rng.hpp"

namespace qcnn::data {

namespace fs = std::filesystem;

std::string label_name(Label l) {
    return l == Label::Malignant ? "malignant" : "benign";
}

std::optional<Label> label_from_name(const std::string& name) {
    if (name == "benign") return Label::Benign;
    if (name == "malignant") return Label::Malignant;
    return std::nullopt;
}

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream in(s);
    while (std::getline(in, token, sep)) out.push_back(token);
    return out;
}

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".tif" || ext == ".tiff";
}

} // namespace

std::optional<SampleRecord> parse_filename(const std::string& filename) {
    const fs::path p(filename);
    const std::string stem = p.stem().string();

    const std::vector<std::string> dash = split_on(stem, '-');
    // SOB_<B|M>_<subtype>, then slide tokens, then magnification, sequence.
    if (dash.size() < 4) return std::nullopt;

    const std::vector<std::string> head = split_on(dash[0], '_');
    if (head.size() != 3 || head[0] != "SOB") return std::nullopt;
    if (head[1] != "B" && head[1] != "M") return std::nullopt;
    if (head[2].empty()) return std::nullopt;

    const std::string& mag_token = dash[dash.size() - 2];
    const std::string& seq_token = dash[dash.size() - 1];
    if (!all_digits(mag_token) || !all_digits(seq_token)) return std::nullopt;

    SampleRecord r;
    r.path = filename;
    r.subtype = head[2];
    r.label = head[1] == "M" ? Label::Malignant : Label::Benign;
    r.magnification = std::stoi(mag_token);
    r.sequence = std::stoi(seq_token);
    std::string slide;
    for (std::size_t i = 1; i + 2 < dash.size(); ++i) {
        if (!slide.empty()) slide += '-';
        slide += dash[i];
    }
    if (slide.empty()) return std::nullopt;
    r.slide_id = slide;
    return r;
}

std::string render_filename(const SampleRecord& record, const std::string& extension) {
    char seq[8];
    std::snprintf(seq, sizeof(seq), "%03d", record.sequence);
    return "SOB_" + std::string(record.label == Label::Malignant ? "M" : "B") + "_" +
           record.subtype + "-" + record.slide_id + "-" + std::to_string(record.magnification) +
           "-" + seq + extension;
}

ScanResult scan_dataset(const fs::path& root, int magnification) {
    std::error_code ec;
    if (!fs::exists(root, ec) || !fs::is_directory(root, ec)) {
        throw DataError("dataset root is not a readable directory: " + root.string());
    }

    ScanResult result;
    try {
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (!entry.is_regular_file()) continue;
            const fs::path& file = entry.path();
            const std::string rel = fs::relative(file, root).generic_string();
            if (!has_image_extension(file)) {
                result.skipped.emplace_back(rel, "not an image file");
                continue;
            }
            std::optional<SampleRecord> record = parse_filename(file.filename().string());
            if (!record) {
                result.skipped.emplace_back(rel, "filename does not match the SOB convention");
                continue;
            }
            if (record->magnification != magnification) {
                result.skipped.emplace_back(
                    rel, "magnification " + std::to_string(record->magnification) + ", want " +
                             std::to_string(magnification));
                continue;
            }
            record->path = rel;
            result.records.push_back(std::move(*record));
        }
    } catch (const fs::filesystem_error& e) {
        throw DataError("failed to scan " + root.string() + ": " + e.what());
    }

    std::sort(result.records.begin(), result.records.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.path < b.path; });
    std::sort(result.skipped.begin(), result.skipped.end());

    if (result.records.empty()) {
        throw DataError("no matching images under " + root.string() + " (" +
                        std::to_string(result.skipped.size()) + " files skipped)");
    }
    return result;
}

Split stratified_split(const std::vector<SampleRecord>& records, const SplitSpec& spec) {
    std::vector<const SampleRecord*> by_class[2];
    for (const SampleRecord& r : records) {
        by_class[label_index(r.label)].push_back(&r);
    }
    for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < 5) {
            throw DataError("stratified_split needs at least 5 records per class, class '" +
                            label_name(label_from_index(c)) + "' has " +
                            std::to_string(by_class[c].size()));
        }
    }

    Split split;
    for (int c = 0; c < 2; ++c) {
        const std::size_t n = by_class[c].size();
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(order);

        const std::size_t n_train = 3 * n / 5; // floor(0.6 n)
        const std::size_t n_val = n / 5;       // floor(0.2 n)
        for (std::size_t i = 0; i < n; ++i) {
            const SampleRecord& r = *by_class[c][order[i]];
            if (i < n_train) {
                split.train.push_back(r);
            } else if (i < n_train + n_val) {
                split.val.push_back(r);
            } else {
                split.test.push_back(r);
            }
        }
    }
    return split;
}

void write_manifest(const Split& split, const fs::path& out_path) {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write manifest " + out_path.string());
    auto emit = [&out](const std::vector<SampleRecord>& records, const char* name) {
        for (const SampleRecord& r : records) {
            out << r.path << '\t' << label_name(r.label) << '\t' << name << '\n';
        }
    };
    emit(split.train, "train");
    emit(split.val, "val");
    emit(split.test, "test");
    if (!out) throw DataError("failed writing manifest " + out_path.string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read manifest " + path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> cols = split_on(line, '\t');
        if (cols.size() != 3) {
            throw DataError("manifest " + path.string() + " line " + std::to_string(line_no) +
                            ": expected 3 tab-separated fields");
        }
        const std::optional<Label> label = label_from_name(cols[1]);
        if (!label) {
            throw DataError("manifest " + path.string() + " line " + std::to_string(line_no) +
                            ": unknown label '" + cols[1] + "'");
        }
        if (cols[2] != "train" && cols[2] != "val" && cols[2] != "test") {
            throw DataError("manifest " + path.string() + " line " + std::to_string(line_no) +
                            ": unknown split '" + cols[2] + "'");
        }
        entries.push_back({cols[0], *label, cols[2]});
    }
    return entries;
}

Split split_from_manifest(const std::vector<ManifestEntry>& entries) {
    Split split;
    for (const ManifestEntry& e : entries) {
        SampleRecord r;
        if (auto parsed = parse_filename(fs::path(e.path).filename().string())) {
            r = *parsed;
        }
        r.path = e.path;
        r.label = e.label;
        if (e.split == "train") {
            split.train.push_back(std::move(r));
        } else if (e.split == "val") {
            split.val.push_back(std::move(r));
        } else {
            split.test.push_back(std::move(r));
        }
    }
    return split;
}

namespace {

// Bilinear interpolation with half-pixel centers, per channel.
void resize_bilinear(const std::vector<float>& src, int src_h, int src_w, float* dst, int dst_h,
                     int dst_w) {
    const double scale_y = static_cast<double>(src_h) / dst_h;
    const double scale_x = static_cast<double>(src_w) / dst_w;
    for (int y = 0; y < dst_h; ++y) {
        double sy = (y + 0.5) * scale_y - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(src_h - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, src_h - 1);
        const float wy = static_cast<float>(sy - y0);
        for (int x = 0; x < dst_w; ++x) {
            double sx = (x + 0.5) * scale_x - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(src_w - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, src_w - 1);
            const float wx = static_cast<float>(sx - x0);

            const float v00 = src[static_cast<std::size_t>(y0) * src_w + x0];
            const float v01 = src[static_cast<std::size_t>(y0) * src_w + x1];
            const float v10 = src[static_cast<std::size_t>(y1) * src_w + x0];
            const float v11 = src[static_cast<std::size_t>(y1) * src_w + x1];
            const float top = v00 + wx * (v01 - v00);
            const float bottom = v10 + wx * (v11 - v10);
            dst[static_cast<std::size_t>(y) * dst_w + x] = top + wy * (bottom - top);
        }
    }
}

} // namespace

nn::Tensor load_image(const fs::path& file, int target_size) {
    if (target_size < 1) throw ContractError("target size must be positive");
    const cv::Mat raw = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) {
        throw DataError("cannot decode image " + file.string());
    }
    if (raw.depth() != CV_8U) {
        throw DataError("image " + file.string() + " is not 8-bit per channel");
    }
    const int channels = raw.channels();
    if (channels != 1 && channels != 3) {
        throw DataError("image " + file.string() + " has " + std::to_string(channels) +
                        " channels; expected RGB or grayscale");
    }

    const int h = raw.rows, w = raw.cols;
    // planar RGB in [0,1]; OpenCV stores BGR, grayscale is replicated
    std::vector<std::vector<float>> planes(3, std::vector<float>(static_cast<std::size_t>(h) * w));
    for (int y = 0; y < h; ++y) {
        const unsigned char* row = raw.ptr<unsigned char>(y);
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (channels == 1) {
                const float v = row[x] / 255.0f;
                planes[0][i] = planes[1][i] = planes[2][i] = v;
            } else {
                planes[0][i] = row[3 * x + 2] / 255.0f; // R
                planes[1][i] = row[3 * x + 1] / 255.0f; // G
                planes[2][i] = row[3 * x + 0] / 255.0f; // B
            }
        }
    }

    nn::Tensor out({3, target_size, target_size});
    for (int c = 0; c < 3; ++c) {
        resize_bilinear(planes[c], h, w,
                        out.data() + static_cast<std::size_t>(c) * target_size * target_size,
                        target_size, target_size);
    }
    return out;
}

std::vector<SyntheticSample> synthesize_dataset(int n_per_class, std::uint64_t seed,
                                                int image_size, int channels) {
    if (n_per_class < 1) throw ContractError("synthesize_dataset needs n_per_class >= 1");
    if (image_size < 4) throw ContractError("synthesize_dataset needs image_size >= 4");

    constexpr double kTau = 6.28318530717958647692;
    const int low_max = std::max(1, image_size / 16);
    const int high_lo = std::max(2, image_size / 4);
    const int high_hi = std::max(3, image_size / 2);

    std::vector<SyntheticSample> samples;
    samples.reserve(static_cast<std::size_t>(2 * n_per_class));
    for (int label = 0; label < 2; ++label) {
        for (int idx = 0; idx < n_per_class; ++idx) {
            Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(label),
                             static_cast<std::uint64_t>(idx)));
            SyntheticSample s;
            char id[32];
            std::snprintf(id, sizeof(id), "SYN_%c_%04d", label == 0 ? 'B' : 'M', idx);
            s.id = id;
            s.label = label;
            s.image = nn::Tensor({channels, image_size, image_size});
            for (int c = 0; c < channels; ++c) {
                int fx, fy;
                if (label == 0) {
                    fx = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(low_max)));
                    fy = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(low_max)));
                } else {
                    fx = high_lo +
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(high_hi - high_lo + 1)));
                    fy = high_lo +
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(high_hi - high_lo + 1)));
                }
                const double phase = rng.uniform(0.0, kTau);
                for (int y = 0; y < image_size; ++y) {
                    for (int x = 0; x < image_size; ++x) {
                        const double wave =
                            std::sin(kTau * (fx * x + fy * y) / image_size + phase);
                        const double noise = 0.08 * (rng.uniform() - 0.5);
                        const double v = 0.5 + 0.35 * wave + noise;
                        s.image.at3(c, y, x, image_size, image_size) =
                            static_cast<float>(std::clamp(v, 0.0, 1.0));
                    }
                }
            }
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

} // namespace qcnn::data
