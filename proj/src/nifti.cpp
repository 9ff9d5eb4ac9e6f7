#include "mrigen/nifti.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "mrigen/errors.hpp"

namespace mrigen::nifti {

namespace {

// Standard NIfTI-1 field offsets.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffMagic = 344;

std::uint16_t bswap16(std::uint16_t v) { return static_cast<std::uint16_t>((v >> 8) | (v << 8)); }

std::uint32_t bswap32(std::uint32_t v) {
    return ((v & 0xff000000u) >> 24) | ((v & 0x00ff0000u) >> 8) |
           ((v & 0x0000ff00u) << 8) | ((v & 0x000000ffu) << 24);
}

std::uint64_t bswap64(std::uint64_t v) {
    return (static_cast<std::uint64_t>(bswap32(static_cast<std::uint32_t>(v))) << 32) |
           bswap32(static_cast<std::uint32_t>(v >> 32));
}

bool host_is_little() { return std::endian::native == std::endian::little; }

bool needs_swap(Endian e) {
    return (e == Endian::little) != host_is_little();
}

template <class U>
U load_raw(const std::uint8_t* p) {
    U v;
    std::memcpy(&v, p, sizeof(U));
    return v;
}

std::int16_t load_i16(const std::uint8_t* p, bool swap) {
    auto v = load_raw<std::uint16_t>(p);
    if (swap) v = bswap16(v);
    return static_cast<std::int16_t>(v);
}

std::int32_t load_i32(const std::uint8_t* p, bool swap) {
    auto v = load_raw<std::uint32_t>(p);
    if (swap) v = bswap32(v);
    return static_cast<std::int32_t>(v);
}

float load_f32(const std::uint8_t* p, bool swap) {
    auto v = load_raw<std::uint32_t>(p);
    if (swap) v = bswap32(v);
    return std::bit_cast<float>(v);
}

double load_f64(const std::uint8_t* p, bool swap) {
    auto v = load_raw<std::uint64_t>(p);
    if (swap) v = bswap64(v);
    return std::bit_cast<double>(v);
}

void store_i16(std::uint8_t* p, std::int16_t v, bool swap) {
    auto u = static_cast<std::uint16_t>(v);
    if (swap) u = bswap16(u);
    std::memcpy(p, &u, sizeof(u));
}

void store_i32(std::uint8_t* p, std::int32_t v, bool swap) {
    auto u = static_cast<std::uint32_t>(v);
    if (swap) u = bswap32(u);
    std::memcpy(p, &u, sizeof(u));
}

void store_f32(std::uint8_t* p, float v, bool swap) {
    auto u = std::bit_cast<std::uint32_t>(v);
    if (swap) u = bswap32(u);
    std::memcpy(p, &u, sizeof(u));
}

bool magic_ok(const std::array<char, 4>& m) {
    return (m[0] == 'n' && (m[1] == '+' || m[1] == 'i') && m[2] == '1' && m[3] == '\0');
}

}  // namespace

bool datatype_supported(int code) {
    switch (code) {
        case kUint8:
        case kInt16:
        case kInt32:
        case kFloat32:
        case kFloat64:
            return true;
        default:
            return false;
    }
}

int datatype_bits(int code) {
    switch (code) {
        case kUint8: return 8;
        case kInt16: return 16;
        case kInt32: return 32;
        case kFloat32: return 32;
        case kFloat64: return 64;
        default: return 0;
    }
}

const char* datatype_name(int code) {
    switch (code) {
        case kUint8: return "uint8";
        case kInt16: return "int16";
        case kInt32: return "int32";
        case kFloat32: return "float32";
        case kFloat64: return "float64";
        default: return "unknown";
    }
}

Header parse_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize)
        fail(Errc::truncated, "header shorter than 348 bytes");

    // dim[0] decides byte order: try little-endian first, then big.
    Endian endianness = Endian::little;
    std::int16_t rank = load_i16(bytes.data() + kOffDim, needs_swap(Endian::little));
    if (rank < 1 || rank > 7) {
        std::int16_t rank_be = load_i16(bytes.data() + kOffDim, needs_swap(Endian::big));
        if (rank_be < 1 || rank_be > 7)
            fail(Errc::bad_dims, "dim[0] outside [1,7] under both byte orders");
        endianness = Endian::big;
        rank = rank_be;
    }
    const bool swap = needs_swap(endianness);

    Header h;
    h.endianness = endianness;
    h.sizeof_hdr = load_i32(bytes.data() + kOffSizeofHdr, swap);
    if (h.sizeof_hdr != 348)
        fail(Errc::bad_header, "sizeof_hdr != 348 after endian correction");

    for (int k = 0; k < 8; ++k)
        h.dim[k] = load_i16(bytes.data() + kOffDim + 2 * k, swap);
    for (int k = 1; k <= h.dim[0]; ++k) {
        if (h.dim[k] < 1)
            fail(Errc::bad_dims, "dim[" + std::to_string(k) + "] < 1");
    }

    std::memcpy(h.magic.data(), bytes.data() + kOffMagic, 4);
    if (!magic_ok(h.magic))
        fail(Errc::bad_magic, "magic is neither \"n+1\" nor \"ni1\"");

    h.datatype = load_i16(bytes.data() + kOffDatatype, swap);
    h.bitpix = load_i16(bytes.data() + kOffBitpix, swap);
    if (!datatype_supported(h.datatype))
        fail(Errc::unsupported_datatype,
             "datatype code " + std::to_string(h.datatype) + " not supported");
    if (h.bitpix != datatype_bits(h.datatype))
        fail(Errc::unsupported_datatype,
             "bitpix " + std::to_string(h.bitpix) + " inconsistent with datatype " +
                 std::to_string(h.datatype));

    h.vox_offset = load_f32(bytes.data() + kOffVoxOffset, swap);
    h.scl_slope = load_f32(bytes.data() + kOffSclSlope, swap);
    h.scl_inter = load_f32(bytes.data() + kOffSclInter, swap);
    return h;
}

std::array<std::uint8_t, kHeaderSize> encode_header(const Header& h) {
    std::array<std::uint8_t, kHeaderSize> out{};
    const bool swap = needs_swap(h.endianness);
    store_i32(out.data() + kOffSizeofHdr, h.sizeof_hdr, swap);
    for (int k = 0; k < 8; ++k)
        store_i16(out.data() + kOffDim + 2 * k, h.dim[k], swap);
    store_i16(out.data() + kOffDatatype, h.datatype, swap);
    store_i16(out.data() + kOffBitpix, h.bitpix, swap);
    store_f32(out.data() + kOffVoxOffset, h.vox_offset, swap);
    store_f32(out.data() + kOffSclSlope, h.scl_slope, swap);
    store_f32(out.data() + kOffSclInter, h.scl_inter, swap);
    std::memcpy(out.data() + kOffMagic, h.magic.data(), 4);
    return out;
}

float Volume::voxel_at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    if (x < 0 || x >= extent[0] || y < 0 || y >= extent[1] || z < 0 || z >= extent[2])
        fail(Errc::out_of_bounds, "voxel (" + std::to_string(x) + "," + std::to_string(y) +
                                      "," + std::to_string(z) + ") outside volume");
    return data[static_cast<std::size_t>(x + extent[0] * (y + extent[1] * z))];
}

Volume decode_volume(std::span<const std::uint8_t> bytes, const std::string& source) {
    Header h = parse_header(bytes);

    if (!h.single_file_magic())
        fail(Errc::unsupported_format,
             source + ": paired .hdr/.img (magic \"ni1\") is not supported; use single-file .nii");

    // Only the first three dims are materialized; higher dims must be singleton.
    for (int k = 4; k <= h.dim[0]; ++k) {
        if (h.dim[k] > 1)
            fail(Errc::unsupported_4d,
                 source + ": dim[" + std::to_string(k) + "]=" + std::to_string(h.dim[k]) +
                     " — only 3D volumes (or singleton higher dims) are supported");
    }

    Volume vol;
    vol.header = h;
    vol.source_path = source;
    for (int k = 0; k < 3; ++k)
        vol.extent[k] = (h.dim[0] > k) ? h.dim[k + 1] : 1;

    const std::int64_t count = vol.voxels();
    const std::size_t elem = static_cast<std::size_t>(datatype_bits(h.datatype)) / 8;
    if (h.vox_offset < static_cast<float>(kHeaderSize))
        fail(Errc::bad_header, source + ": vox_offset points inside the header");
    const std::size_t offset = static_cast<std::size_t>(h.vox_offset);
    if (bytes.size() < offset + static_cast<std::size_t>(count) * elem)
        fail(Errc::truncated, source + ": payload shorter than dim product");

    const bool swap = needs_swap(h.endianness);
    const std::uint8_t* p = bytes.data() + offset;

    vol.data.resize(static_cast<std::size_t>(count));
    // scl_slope of 0 or 1 means the stored values are used as-is.
    const bool scaled = (h.scl_slope != 0.0f && h.scl_slope != 1.0f);
    const float slope = h.scl_slope, inter = h.scl_inter;

    auto emit = [&](std::size_t i, double raw) {
        double v = scaled ? raw * slope + inter : raw;
        if (!std::isfinite(v))
            fail(Errc::non_finite, source + ": non-finite voxel value after decode");
        vol.data[i] = static_cast<float>(v);
    };

    switch (h.datatype) {
        case kUint8:
            for (std::int64_t i = 0; i < count; ++i) emit(i, p[i]);
            break;
        case kInt16:
            for (std::int64_t i = 0; i < count; ++i) emit(i, load_i16(p + 2 * i, swap));
            break;
        case kInt32:
            for (std::int64_t i = 0; i < count; ++i) emit(i, load_i32(p + 4 * i, swap));
            break;
        case kFloat32:
            for (std::int64_t i = 0; i < count; ++i) emit(i, load_f32(p + 4 * i, swap));
            break;
        case kFloat64:
            for (std::int64_t i = 0; i < count; ++i) emit(i, load_f64(p + 8 * i, swap));
            break;
        default:
            fail(Errc::unsupported_datatype, "unreachable");
    }
    return vol;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> in) {
    z_stream zs{};
    // 15+32: accept both gzip and zlib wrappers.
    if (inflateInit2(&zs, 15 + 32) != Z_OK)
        fail(Errc::io_error, "inflateInit2 failed");

    std::vector<std::uint8_t> out;
    out.reserve(in.size() * 4);
    std::array<std::uint8_t, 1 << 16> buf;

    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            fail(Errc::truncated, "gzip stream corrupt or truncated");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
    inflateEnd(&zs);
    if (rc != Z_STREAM_END)
        fail(Errc::truncated, "gzip stream ended early");
    return out;
}

Volume read_volume(const std::string& path) {
    namespace fs = std::filesystem;
    if (!fs::exists(path))
        fail(Errc::io_error, path + ": no such file");

    const bool gz = path.size() > 3 && path.ends_with(".gz");
    if (!gz && (path.ends_with(".hdr") || path.ends_with(".img")))
        fail(Errc::unsupported_format,
             path + ": paired .hdr/.img is not supported; use single-file .nii or .nii.gz");

    std::ifstream f(path, std::ios::binary);
    if (!f)
        fail(Errc::io_error, path + ": cannot open");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());

    if (gz)
        bytes = gunzip(bytes);
    return decode_volume(bytes, path);
}

}  // namespace mrigen::nifti
