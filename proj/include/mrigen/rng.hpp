#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mrigen {

/// Deterministic counter-based random stream. Every draw is a pure hash of
/// (seed, stream, counter), so a stream can be split, replayed from a saved
/// counter, and consumed from data-parallel loops without locks: element i of
/// a bulk fill reads slot base+i regardless of thread count.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0)
        : seed_(seed), stream_(stream), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

    /// Claims n consecutive draw slots and returns the first one.
    std::uint64_t reserve(std::uint64_t n) {
        std::uint64_t base = counter_;
        counter_ += n;
        return base;
    }

    std::uint64_t next_u64() { return raw(seed_, stream_, 2 * reserve(1)); }

    /// Uniform in [0, 1).
    double uniform() { return uniform_at(seed_, stream_, reserve(1)); }

    /// Standard normal via Box-Muller; one slot per draw.
    double normal() { return normal_at(seed_, stream_, reserve(1)); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Stateless slot accessors used by kernels so bulk fills can be
    // parallelized with bitwise-reproducible results.
    static std::uint64_t raw(std::uint64_t seed, std::uint64_t stream, std::uint64_t idx) {
        return mix64(mix64(mix64(seed ^ 0x9e3779b97f4a7c15ull) + stream) + idx);
    }

    static double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t slot) {
        return to_unit(raw(seed, stream, 2 * slot));
    }

    static double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t slot) {
        double u1 = to_unit(raw(seed, stream, 2 * slot));
        double u2 = to_unit(raw(seed, stream, 2 * slot + 1));
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 33;
        z *= 0xff51afd7ed558ccdull;
        z ^= z >> 33;
        z *= 0xc4ceb9fe1a85ec53ull;
        z ^= z >> 33;
        return z;
    }

    static double to_unit(std::uint64_t r) {
        return static_cast<double>(r >> 11) * 0x1.0p-53;
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
};

/// Identifies a reserved block of slots on some stream; enough to replay a
/// stochastic kernel (dropout mask, noise fill) without storing the mask.
struct RngSlice {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t base = 0;

    static RngSlice take(RngStream& s, std::uint64_t n) {
        return RngSlice{s.seed(), s.stream(), s.reserve(n)};
    }

    double uniform(std::uint64_t i) const { return RngStream::uniform_at(seed, stream, base + i); }
    double normal(std::uint64_t i) const { return RngStream::normal_at(seed, stream, base + i); }
};

}  // namespace mrigen
