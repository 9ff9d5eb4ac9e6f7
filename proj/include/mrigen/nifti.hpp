#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mrigen::nifti {

inline constexpr std::size_t kHeaderSize = 348;

enum class Endian { little, big };

/// Supported NIfTI-1 datatype codes.
enum Datatype : std::int16_t {
    kUint8 = 2,
    kInt16 = 4,
    kInt32 = 8,
    kFloat32 = 16,
    kFloat64 = 64,
};

bool datatype_supported(int code);
int datatype_bits(int code);
const char* datatype_name(int code);

/// The subset of the 348-byte NIfTI-1 header this pipeline consumes.
/// Fields sit at the standard offsets; everything else is preserved as zero.
struct Header {
    std::int32_t sizeof_hdr = 348;
    std::array<std::int16_t, 8> dim{};   // dim[0]=rank, dim[1..3]=spatial extents
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    float vox_offset = 352.0f;
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
    std::array<char, 4> magic{'n', '+', '1', '\0'};
    Endian endianness = Endian::little;  // inferred at parse time, not stored

    bool single_file_magic() const { return magic[0] == 'n' && magic[1] == '+'; }
};

/// Decodes a 348-byte header. Endianness is inferred by testing whether
/// dim[0] lands in [1,7] under little-endian first, big-endian second.
Header parse_header(std::span<const std::uint8_t> bytes);

/// Emits the 348-byte on-disk form of a header in its recorded endianness.
/// Fields not tracked by Header are written as zero.
std::array<std::uint8_t, kHeaderSize> encode_header(const Header& h);

/// A fully decoded 3D volume. Voxels are stored x-fastest (column-major in
/// NIfTI terms) with scl_slope/scl_inter already applied.
struct Volume {
    Header header;
    std::array<std::int64_t, 3> extent{0, 0, 0};
    std::vector<float> data;
    std::string source_path;

    std::int64_t voxels() const { return extent[0] * extent[1] * extent[2]; }

    /// Bounds-checked accessor; throws OutOfBounds.
    float voxel_at(std::int64_t x, std::int64_t y, std::int64_t z) const;
};

/// Decodes a complete in-memory .nii byte stream (header + payload).
Volume decode_volume(std::span<const std::uint8_t> bytes, const std::string& source);

/// Reads a ".nii" or ".nii.gz" file. Paired ".hdr/.img" is rejected.
Volume read_volume(const std::string& path);

/// Inflates a gzip stream (used for ".nii.gz"; exposed for tests).
std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> in);

}  // namespace mrigen::nifti
