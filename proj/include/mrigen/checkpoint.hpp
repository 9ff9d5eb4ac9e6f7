#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mrigen {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Fixed-size head of a checkpoint file. On disk (little-endian):
/// magic "MRCK", version u32, config-hash 32 bytes, epoch u64,
/// rng seed/stream/counter u64 each, image_size u32, adam step counters
/// u64 each, tensor count u32, then the named-tensor table
/// (name length u16, name bytes, rank u8, dims u32 each, float32 payload).
struct CheckpointHeader {
    std::array<std::uint8_t, 32> config_hash{};
    std::uint64_t epoch = 0;
    std::uint64_t rng_seed = 0;
    std::uint64_t rng_stream = 0;
    std::uint64_t rng_counter = 0;
    std::uint32_t image_size = 0;
    std::uint64_t adam_t_g = 0;
    std::uint64_t adam_t_d = 0;
};

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
};

struct Checkpoint {
    CheckpointHeader header;
    std::vector<NamedTensor> tensors;

    const NamedTensor& require(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mrigen
