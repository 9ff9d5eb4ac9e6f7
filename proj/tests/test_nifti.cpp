#include <cstring>
#include <filesystem>

#include <functional>

#include "doctest.h"
#include "mrigen/errors.hpp"
#include "mrigen/nifti.hpp"
#include "support/fixtures.hpp"

using namespace mrigen;
using fixtures::NiftiSpec;

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::io_error;
}

}  // namespace

TEST_CASE("little-endian header parses field for field") {
    NiftiSpec s;
    s.dims = {224, 224, 176};
    s.datatype = 16;
    const auto bytes = fixtures::nifti_header_bytes(s);
    const auto h = nifti::parse_header(bytes);

    CHECK(h.sizeof_hdr == 348);
    CHECK(h.endianness == nifti::Endian::little);
    CHECK(h.dim[0] == 3);
    CHECK(h.dim[1] == 224);
    CHECK(h.dim[2] == 224);
    CHECK(h.dim[3] == 176);
    CHECK(h.datatype == 16);
    CHECK(h.bitpix == 32);
    CHECK(h.vox_offset == 352.0f);
    CHECK(std::memcmp(h.magic.data(), "n+1\0", 4) == 0);
}

TEST_CASE("byte-swapped header parses to the same fields, endianness big") {
    NiftiSpec s;
    s.dims = {224, 224, 176};
    s.scl_slope = 2.0f;
    s.scl_inter = 0.5f;
    NiftiSpec sbe = s;
    sbe.big_endian = true;

    const auto hle = nifti::parse_header(fixtures::nifti_header_bytes(s));
    const auto hbe = nifti::parse_header(fixtures::nifti_header_bytes(sbe));

    CHECK(hbe.endianness == nifti::Endian::big);
    CHECK(hbe.dim == hle.dim);
    CHECK(hbe.datatype == hle.datatype);
    CHECK(hbe.bitpix == hle.bitpix);
    CHECK(hbe.scl_slope == hle.scl_slope);
    CHECK(hbe.scl_inter == hle.scl_inter);
    CHECK(hbe.vox_offset == hle.vox_offset);
}

TEST_CASE("header round-trips byte-identically through encode") {
    for (bool be : {false, true}) {
        NiftiSpec s;
        s.dims = {64, 48, 32};
        s.datatype = 4;
        s.scl_slope = 1.5f;
        s.scl_inter = -2.0f;
        s.big_endian = be;
        const auto bytes = fixtures::nifti_header_bytes(s);
        const auto h = nifti::parse_header(bytes);
        const auto again = nifti::encode_header(h);
        CHECK(std::memcmp(again.data(), bytes.data(), nifti::kHeaderSize) == 0);
    }
}

TEST_CASE("zero buffer fails with BadDims") {
    std::vector<std::uint8_t> zeros(348, 0);
    CHECK(code_of([&] { nifti::parse_header(zeros); }) == Errc::bad_dims);
}

TEST_CASE("corrupt magic fails with BadMagic") {
    NiftiSpec s;
    s.dims = {4, 4, 4};
    auto bytes = fixtures::nifti_header_bytes(s);
    std::memcpy(bytes.data() + 344, "xyz", 4);
    CHECK(code_of([&] { nifti::parse_header(bytes); }) == Errc::bad_magic);
}

TEST_CASE("unsupported datatype code is rejected") {
    NiftiSpec s;
    s.dims = {4, 4, 4};
    const auto base = fixtures::nifti_header_bytes(s);
    auto bytes = base;
    bytes[70] = 32;  // complex64, not in the supported set
    CHECK(code_of([&] { nifti::parse_header(bytes); }) == Errc::unsupported_datatype);

    bytes = base;
    bytes[72] = 16;  // bitpix inconsistent with float32
    CHECK(code_of([&] { nifti::parse_header(bytes); }) == Errc::unsupported_datatype);
}

TEST_CASE("scl_slope/inter applied exactly when slope not in {0,1}") {
    NiftiSpec s;
    s.dims = {6, 5, 4};
    s.datatype = 16;
    s.scl_slope = 2.0f;
    s.scl_inter = 0.5f;
    const auto bytes = fixtures::nifti_bytes(s, [](std::int64_t) { return 1.0; });
    const auto vol = nifti::decode_volume(bytes, "mem");
    for (float v : vol.data) CHECK(v == 2.5f);
}

TEST_CASE("scl_slope of zero means no scaling") {
    NiftiSpec s;
    s.dims = {3, 3, 3};
    s.datatype = 4;
    s.scl_slope = 0.0f;
    s.scl_inter = 7.0f;  // must be ignored
    const auto bytes = fixtures::nifti_bytes(s, [](std::int64_t) { return 100.0; });
    const auto vol = nifti::decode_volume(bytes, "mem");
    for (float v : vol.data) CHECK(v == 100.0f);
}

TEST_CASE("voxel_at follows x-fastest flat order and checks bounds") {
    NiftiSpec s;
    s.dims = {5, 4, 3};
    s.datatype = 16;
    const auto bytes =
        fixtures::nifti_bytes(s, [](std::int64_t i) { return static_cast<double>(i); });
    const auto vol = nifti::decode_volume(bytes, "mem");

    CHECK(vol.voxel_at(0, 0, 0) == 0.0f);
    CHECK(vol.voxel_at(1, 0, 0) == 1.0f);
    CHECK(vol.voxel_at(0, 1, 0) == 5.0f);   // x + 5*(y + 4*z)
    CHECK(vol.voxel_at(0, 0, 1) == 20.0f);
    CHECK(vol.voxel_at(4, 3, 2) == 59.0f);
    CHECK(code_of([&] { vol.voxel_at(5, 0, 0); }) == Errc::out_of_bounds);
    CHECK(code_of([&] { vol.voxel_at(0, -1, 0); }) == Errc::out_of_bounds);
}

TEST_CASE("payload truncated by one byte fails with Truncated") {
    NiftiSpec s;
    s.dims = {4, 4, 4};
    s.datatype = 16;
    auto bytes = fixtures::nifti_bytes(s, [](std::int64_t) { return 1.0; });
    bytes.pop_back();
    CHECK(code_of([&] { nifti::decode_volume(bytes, "mem"); }) == Errc::truncated);
}

TEST_CASE("decode(encode(v)) round-trips every supported datatype") {
    struct Case {
        std::int16_t code;
        std::vector<double> values;
    };
    const std::vector<Case> cases = {
        {2, {0, 1, 127, 255}},
        {4, {-32768, -1, 0, 1, 32767}},
        {8, {-2147483648.0, -7, 0, 7, 2147483647.0}},
        {16, {-1.5, 0.0, 0.25, 3.0e6}},
        {64, {-1.5, 0.0, 0.25, 3.0e6}},
    };
    for (const auto& c : cases) {
        for (bool be : {false, true}) {
            NiftiSpec s;
            s.dims = {static_cast<std::int16_t>(c.values.size()), 1, 1};
            s.datatype = c.code;
            s.big_endian = be;
            const auto bytes = fixtures::nifti_bytes(
                s, [&](std::int64_t i) { return c.values[static_cast<std::size_t>(i)]; });
            const auto vol = nifti::decode_volume(bytes, "mem");
            for (std::size_t i = 0; i < c.values.size(); ++i)
                CHECK(vol.data[i] == static_cast<float>(c.values[i]));
        }
    }
}

TEST_CASE("gzip and plain variants decode to identical volumes") {
    const auto dir = fixtures::temp_dir("nifti_gz");
    NiftiSpec s;
    s.dims = {10, 8, 6};
    s.datatype = 16;
    const auto bytes =
        fixtures::nifti_bytes(s, [](std::int64_t i) { return std::sin(0.1 * i) * 50.0; });

    const auto plain = dir + "/vol.nii";
    const auto gz = dir + "/vol.nii.gz";
    fixtures::write_file(plain, bytes);
    fixtures::write_gzip_file(gz, bytes);

    const auto a = nifti::read_volume(plain);
    const auto b = nifti::read_volume(gz);
    CHECK(a.extent == b.extent);
    CHECK(a.data == b.data);
    std::filesystem::remove_all(dir);
}

TEST_CASE("4D with singleton fourth dim is accepted, true 4D is not") {
    NiftiSpec ok;
    ok.dims = {4, 4, 4, 1};
    ok.datatype = 16;
    const auto vol = nifti::decode_volume(
        fixtures::nifti_bytes(ok, [](std::int64_t) { return 1.0; }), "mem");
    CHECK(vol.extent == std::array<std::int64_t, 3>{4, 4, 4});

    NiftiSpec bad;
    bad.dims = {4, 4, 4, 2};
    bad.datatype = 16;
    const auto bytes = fixtures::nifti_bytes(bad, [](std::int64_t) { return 1.0; });
    CHECK(code_of([&] { nifti::decode_volume(bytes, "mem"); }) == Errc::unsupported_4d);
}

TEST_CASE("paired .hdr/.img magic is rejected with a clear error") {
    NiftiSpec s;
    s.dims = {4, 4, 4};
    s.paired_magic = true;
    const auto bytes = fixtures::nifti_bytes(s, [](std::int64_t) { return 1.0; });
    CHECK(code_of([&] { nifti::decode_volume(bytes, "mem"); }) == Errc::unsupported_format);
}

TEST_CASE("non-finite payload is refused") {
    NiftiSpec s;
    s.dims = {2, 2, 2};
    s.datatype = 16;
    const auto bytes = fixtures::nifti_bytes(s, [](std::int64_t i) {
        return i == 3 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
    });
    CHECK(code_of([&] { nifti::decode_volume(bytes, "mem"); }) == Errc::non_finite);
}
