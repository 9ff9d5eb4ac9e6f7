#include "mrigen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mrigen/errors.hpp"

namespace mrigen {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <class U>
void put(std::ofstream& f, U v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class U>
U get(std::ifstream& f, const std::string& path) {
    U v;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!f)
        fail(Errc::corrupt_checkpoint, path + ": file ended early");
    return v;
}

}  // namespace

const NamedTensor& Checkpoint::require(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    fail(Errc::corrupt_checkpoint, "checkpoint is missing tensor \"" + name + "\"");
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        fail(Errc::io_error, path + ": cannot open for writing");

    f.write("MRCK", 4);
    put<std::uint32_t>(f, kCheckpointVersion);
    f.write(reinterpret_cast<const char*>(ck.header.config_hash.data()), 32);
    put<std::uint64_t>(f, ck.header.epoch);
    put<std::uint64_t>(f, ck.header.rng_seed);
    put<std::uint64_t>(f, ck.header.rng_stream);
    put<std::uint64_t>(f, ck.header.rng_counter);
    put<std::uint32_t>(f, ck.header.image_size);
    put<std::uint64_t>(f, ck.header.adam_t_g);
    put<std::uint64_t>(f, ck.header.adam_t_d);
    put<std::uint32_t>(f, static_cast<std::uint32_t>(ck.tensors.size()));

    for (const auto& t : ck.tensors) {
        put<std::uint16_t>(f, static_cast<std::uint16_t>(t.name.size()));
        f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<std::uint8_t>(f, static_cast<std::uint8_t>(t.dims.size()));
        std::uint64_t count = 1;
        for (auto d : t.dims) {
            put<std::uint32_t>(f, d);
            count *= d;
        }
        if (count != t.values.size())
            fail(Errc::shape_mismatch, t.name + ": dims do not cover the payload");
        f.write(reinterpret_cast<const char*>(t.values.data()),
                static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    }
    if (!f)
        fail(Errc::io_error, path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        fail(Errc::io_error, path + ": cannot open");

    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "MRCK", 4) != 0)
        fail(Errc::corrupt_checkpoint, path + ": not a checkpoint file (bad magic)");
    const auto version = get<std::uint32_t>(f, path);
    if (version != kCheckpointVersion)
        fail(Errc::corrupt_checkpoint,
             path + ": checkpoint version " + std::to_string(version) + " unknown");

    Checkpoint ck;
    f.read(reinterpret_cast<char*>(ck.header.config_hash.data()), 32);
    if (!f)
        fail(Errc::corrupt_checkpoint, path + ": file ended early");
    ck.header.epoch = get<std::uint64_t>(f, path);
    ck.header.rng_seed = get<std::uint64_t>(f, path);
    ck.header.rng_stream = get<std::uint64_t>(f, path);
    ck.header.rng_counter = get<std::uint64_t>(f, path);
    ck.header.image_size = get<std::uint32_t>(f, path);
    ck.header.adam_t_g = get<std::uint64_t>(f, path);
    ck.header.adam_t_d = get<std::uint64_t>(f, path);
    const auto count = get<std::uint32_t>(f, path);

    ck.tensors.resize(count);
    for (auto& t : ck.tensors) {
        const auto name_len = get<std::uint16_t>(f, path);
        t.name.resize(name_len);
        f.read(t.name.data(), name_len);
        if (!f)
            fail(Errc::corrupt_checkpoint, path + ": file ended early");
        const auto rank = get<std::uint8_t>(f, path);
        std::uint64_t n = 1;
        t.dims.resize(rank);
        for (auto& d : t.dims) {
            d = get<std::uint32_t>(f, path);
            n *= d;
        }
        t.values.resize(n);
        f.read(reinterpret_cast<char*>(t.values.data()),
               static_cast<std::streamsize>(n * sizeof(float)));
        if (!f)
            fail(Errc::corrupt_checkpoint, path + ": tensor \"" + t.name + "\" truncated");
    }
    return ck;
}

}  // namespace mrigen
