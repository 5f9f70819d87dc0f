#include "qcnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "qcnn/error.hpp"

namespace qcnn::train {

namespace {

constexpr char kMagic[8] = {'Q', 'C', 'N', 'N', 'C', 'K', 'P', 'T'};

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n,
                    std::uint64_t state = kFnvOffset) {
    for (std::size_t i = 0; i < n; ++i) {
        state ^= data[i];
        state *= kFnvPrime;
    }
    return state;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > size) {
            throw CheckpointError("checkpoint truncated: needed " + std::to_string(n) +
                                  " bytes at offset " + std::to_string(pos));
        }
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::string string() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
};

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, ckpt.format_version);
    put_string(out, ckpt.model_id);

    put_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
    for (const auto& [key, value] : ckpt.metadata) {
        put_string(out, key);
        put_string(out, value);
    }

    put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, tensor] : ckpt.tensors) {
        put_string(out, name);
        put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t d = 0; d < tensor.rank(); ++d) {
            put_u32(out, static_cast<std::uint32_t>(tensor.dim(d)));
        }
        for (std::size_t i = 0; i < tensor.numel(); ++i) {
            put_u32(out, std::bit_cast<std::uint32_t>(tensor[i]));
        }
    }

    put_u64(out, fnv1a(out.data(), out.size()));
    return out;
}

} // namespace

const nn::Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [tname, tensor] : tensors) {
        if (tname == name) return &tensor;
    }
    return nullptr;
}

Checkpoint checkpoint_from_model(const hybrid::HybridModel& model,
                                 std::map<std::string, std::string> metadata) {
    Checkpoint ckpt;
    ckpt.model_id = model.id();
    ckpt.metadata = std::move(metadata);
    for (const nn::Parameter* p : model.parameters()) {
        ckpt.tensors.emplace_back(p->name, p->value);
    }
    return ckpt;
}

void load_into_model(const Checkpoint& ckpt, hybrid::HybridModel& model) {
    if (ckpt.model_id != model.id()) {
        throw CheckpointError("checkpoint holds model '" + ckpt.model_id +
                              "', cannot load into '" + model.id() + "'");
    }
    for (nn::Parameter* p : model.parameters()) {
        const nn::Tensor* stored = ckpt.find(p->name);
        if (stored == nullptr) {
            throw CheckpointError("checkpoint is missing tensor '" + p->name + "'");
        }
        if (stored->shape() != p->value.shape()) {
            throw CheckpointError("checkpoint tensor '" + p->name + "' has shape " +
                                  stored->shape_string() + ", model expects " +
                                  p->value.shape_string());
        }
        p->value = *stored;
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    if (bytes.size() < 8 + 4 + 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw CheckpointError(path.string() + " is not a checkpoint file");
    }
    const std::uint64_t want = fnv1a(bytes.data(), bytes.size() - 8);
    Reader tail{bytes.data(), bytes.size(), bytes.size() - 8};
    const std::uint64_t stored = tail.u64();
    if (want != stored) {
        throw CheckpointError("checkpoint " + path.string() + " failed the integrity digest");
    }

    Reader r{bytes.data(), bytes.size() - 8, 8};
    Checkpoint ckpt;
    ckpt.format_version = r.u32();
    if (ckpt.format_version != kCheckpointFormatVersion) {
        throw CheckpointError("checkpoint format version " +
                              std::to_string(ckpt.format_version) + " is unsupported (expected " +
                              std::to_string(kCheckpointFormatVersion) + ")");
    }
    ckpt.model_id = r.string();

    const std::uint32_t n_meta = r.u32();
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string key = r.string();
        std::string value = r.string();
        ckpt.metadata.emplace(std::move(key), std::move(value));
    }

    const std::uint32_t n_tensors = r.u32();
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
        std::string name = r.string();
        const std::uint32_t rank = r.u32();
        std::vector<int> shape;
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = r.u32();
            shape.push_back(static_cast<int>(dim));
            numel *= dim;
        }
        std::vector<float> values;
        values.reserve(numel);
        for (std::size_t i = 0; i < numel; ++i) {
            values.push_back(std::bit_cast<float>(r.u32()));
        }
        ckpt.tensors.emplace_back(std::move(name), nn::Tensor(std::move(shape), std::move(values)));
    }
    if (r.pos != r.size) {
        throw CheckpointError("checkpoint " + path.string() + " has trailing bytes");
    }
    return ckpt;
}

std::uint64_t fnv1a_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read " + path.string());
    std::uint64_t state = kFnvOffset;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        state = fnv1a(reinterpret_cast<const std::uint8_t*>(buf),
                      static_cast<std::size_t>(in.gcount()), state);
    }
    return state;
}

} // namespace qcnn::train
