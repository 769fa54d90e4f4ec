#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/nn.h"

namespace canonify {

// Single-file checkpoint: 8-byte magic, u32 version, u64 JSON length, JSON
// metadata, then contiguous little-endian f32 payloads in metadata order, and
// a trailing 64-bit FNV-1a digest of everything before it.
struct CheckpointData {
    nlohmann::json meta;    // includes a "tensors" array of {name, shape}
    NamedTensors tensors;   // payload order matches meta["tensors"]
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const CheckpointData& ckpt);
CheckpointData load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n,
                      std::uint64_t seed = 14695981039346656037ull);

}  // namespace canonify
