#include "checkpoint.h"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace canonify {
namespace {

constexpr char kMagic[8] = {'C', 'N', 'F', 'Y', 'C', 'K', 'P', 'T'};

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t read_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void append_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    append_u32(out, bits);
}

float read_f32(const std::uint8_t* p) {
    const std::uint32_t bits = read_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

void save_checkpoint(const std::string& path, const CheckpointData& ckpt) {
    nlohmann::json meta = ckpt.meta;
    nlohmann::json tensor_list = nlohmann::json::array();
    for (const auto& [name, t] : ckpt.tensors.items) {
        tensor_list.push_back({{"name", name}, {"shape", t->shape}});
    }
    meta["tensors"] = std::move(tensor_list);
    meta["format_version"] = kCheckpointVersion;
    const std::string json_text = meta.dump();

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    append_u32(out, kCheckpointVersion);
    append_u64(out, json_text.size());
    out.insert(out.end(), json_text.begin(), json_text.end());
    for (const auto& [name, t] : ckpt.tensors.items) {
        for (real v : t->data) append_f32(out, static_cast<float>(v));
    }
    append_u64(out, fnv1a64(out.data(), out.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());

    if (bytes.size() < 8 + 4 + 8 + 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
    }
    const std::uint64_t stored_digest = read_u64(bytes.data() + bytes.size() - 8);
    const std::uint64_t digest = fnv1a64(bytes.data(), bytes.size() - 8);
    if (stored_digest != digest) {
        throw std::runtime_error("checkpoint: digest mismatch in " + path +
                                 " (corrupt or truncated file)");
    }
    const std::uint32_t version = read_u32(bytes.data() + 8);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                                 " in " + path);
    }
    const std::uint64_t json_len = read_u64(bytes.data() + 12);
    if (20 + json_len + 8 > bytes.size()) {
        throw std::runtime_error("checkpoint: truncated metadata in " + path);
    }
    CheckpointData ckpt;
    ckpt.meta = nlohmann::json::parse(bytes.begin() + 20,
                                      bytes.begin() + 20 + static_cast<std::ptrdiff_t>(json_len));

    size_t offset = 20 + json_len;
    for (const auto& entry : ckpt.meta.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        auto t = make_tensor(shape);
        const size_t bytes_needed = t->data.size() * 4;
        if (offset + bytes_needed + 8 > bytes.size()) {
            throw std::runtime_error("checkpoint: truncated payload for tensor '" + name + "'");
        }
        for (size_t i = 0; i < t->data.size(); ++i) {
            t->data[i] = static_cast<real>(read_f32(bytes.data() + offset + i * 4));
        }
        offset += bytes_needed;
        ckpt.tensors.add(name, t);
    }
    if (offset + 8 != bytes.size()) {
        throw std::runtime_error("checkpoint: trailing bytes in " + path);
    }
    return ckpt;
}

}  // namespace canonify
