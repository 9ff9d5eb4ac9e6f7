#pragma once

// Test-side fixture builders. The NIfTI byte builder lays fields out by hand
// from the format tables so it stays independent of the parser it checks;
// the Adam reference is likewise a from-the-update-rule reimplementation.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "mrigen/rng.hpp"
#include "mrigen/slice.hpp"

namespace fixtures {

// ------------------------------------------------------------- NIfTI-1 ---

struct NiftiSpec {
    std::vector<std::int16_t> dims;  // spatial extents, 1..7 entries
    std::int16_t datatype = 16;     // default float32
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
    float vox_offset = 352.0f;
    bool big_endian = false;
    bool paired_magic = false;       // "ni1" instead of "n+1"
};

inline int type_bits(std::int16_t code) {
    switch (code) {
        case 2: return 8;
        case 4: return 16;
        case 8: return 32;
        case 16: return 32;
        case 64: return 64;
        default: return 0;
    }
}

inline void put16(std::vector<std::uint8_t>& b, std::size_t off, std::uint16_t v, bool be) {
    if (be) {
        b[off] = static_cast<std::uint8_t>(v >> 8);
        b[off + 1] = static_cast<std::uint8_t>(v);
    } else {
        b[off] = static_cast<std::uint8_t>(v);
        b[off + 1] = static_cast<std::uint8_t>(v >> 8);
    }
}

inline void put32(std::vector<std::uint8_t>& b, std::size_t off, std::uint32_t v, bool be) {
    if (be) {
        for (int k = 0; k < 4; ++k) b[off + k] = static_cast<std::uint8_t>(v >> (8 * (3 - k)));
    } else {
        for (int k = 0; k < 4; ++k) b[off + k] = static_cast<std::uint8_t>(v >> (8 * k));
    }
}

inline void put64(std::vector<std::uint8_t>& b, std::size_t off, std::uint64_t v, bool be) {
    if (be) {
        for (int k = 0; k < 8; ++k) b[off + k] = static_cast<std::uint8_t>(v >> (8 * (7 - k)));
    } else {
        for (int k = 0; k < 8; ++k) b[off + k] = static_cast<std::uint8_t>(v >> (8 * k));
    }
}

inline void putf32(std::vector<std::uint8_t>& b, std::size_t off, float v, bool be) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    put32(b, off, u, be);
}

/// 348 header bytes with only the consumed fields set, rest zero.
inline std::vector<std::uint8_t> nifti_header_bytes(const NiftiSpec& s) {
    std::vector<std::uint8_t> b(348, 0);
    const bool be = s.big_endian;
    put32(b, 0, 348, be);  // sizeof_hdr
    put16(b, 40, static_cast<std::uint16_t>(s.dims.size()), be);
    for (std::size_t k = 0; k < s.dims.size(); ++k)
        put16(b, 40 + 2 * (k + 1), static_cast<std::uint16_t>(s.dims[k]), be);
    put16(b, 70, static_cast<std::uint16_t>(s.datatype), be);
    put16(b, 72, static_cast<std::uint16_t>(type_bits(s.datatype)), be);
    putf32(b, 108, s.vox_offset, be);
    putf32(b, 112, s.scl_slope, be);
    putf32(b, 116, s.scl_inter, be);
    const char* magic = s.paired_magic ? "ni1" : "n+1";
    std::memcpy(b.data() + 344, magic, 4);
    return b;
}

/// Full .nii byte stream; `raw(i)` supplies the flat-index raw voxel value.
template <class F>
std::vector<std::uint8_t> nifti_bytes(const NiftiSpec& s, F raw) {
    auto b = nifti_header_bytes(s);
    b.resize(static_cast<std::size_t>(s.vox_offset), 0);

    std::int64_t count = 1;
    for (auto d : s.dims) count *= d;
    const bool be = s.big_endian;
    const std::size_t elem = static_cast<std::size_t>(type_bits(s.datatype)) / 8;
    const std::size_t base = b.size();
    b.resize(base + static_cast<std::size_t>(count) * elem, 0);

    for (std::int64_t i = 0; i < count; ++i) {
        const double v = raw(i);
        const std::size_t off = base + static_cast<std::size_t>(i) * elem;
        switch (s.datatype) {
            case 2: b[off] = static_cast<std::uint8_t>(v); break;
            case 4: put16(b, off, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)), be); break;
            case 8: put32(b, off, static_cast<std::uint32_t>(static_cast<std::int32_t>(v)), be); break;
            case 16: putf32(b, off, static_cast<float>(v), be); break;
            case 64: {
                std::uint64_t u;
                const double d = v;
                std::memcpy(&u, &d, 8);
                put64(b, off, u, be);
                break;
            }
        }
    }
    return b;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline void write_gzip_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    gzFile f = gzopen(path.c_str(), "wb");
    gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// ------------------------------------------------------- Adam reference ---

struct AdamRefState {
    std::vector<double> m, v;
    std::uint64_t t = 0;
};

/// Straight transcription of the Adam update rule.
inline void adam_ref_step(std::vector<double>& theta, const std::vector<double>& grad,
                          AdamRefState& st, double lr, double beta1 = 0.5,
                          double beta2 = 0.999, double eps = 1e-8) {
    if (st.m.empty()) {
        st.m.assign(theta.size(), 0.0);
        st.v.assign(theta.size(), 0.0);
    }
    st.t += 1;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * grad[i];
        st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / (1.0 - std::pow(beta1, static_cast<double>(st.t)));
        const double vhat = st.v[i] / (1.0 - std::pow(beta2, static_cast<double>(st.t)));
        theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

// --------------------------------------------------------- slice images ---

/// Slice with a centered blob of signal inside an otherwise zero border, so
/// center crops never trip the content check.
inline mrigen::SliceImage blob_image(std::int64_t h, std::int64_t w, double radius_frac = 0.2,
                                     float peak = 100.0f) {
    mrigen::SliceImage img(h, w);
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    const double r = radius_frac * static_cast<double>(std::min(h, w));
    for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
            const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
            img.at(y, x) = peak * static_cast<float>(std::exp(-d2 / (2.0 * r * r)));
        }
    return img;
}

inline mrigen::SliceImage random_image(std::int64_t h, std::int64_t w, mrigen::RngStream& rng) {
    mrigen::SliceImage img(h, w);
    for (auto& v : img.pixels) v = static_cast<float>(rng.uniform() * 200.0 - 50.0);
    return img;
}

/// Unique scratch directory under the system temp root.
inline std::string temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("mrigen_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace fixtures
