#include "mrigen/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mrigen/errors.hpp"

namespace mrigen {

namespace {

static_assert(std::endian::native == std::endian::little,
              "dataset writer assumes a little-endian host");

template <class U>
void put(std::ofstream& f, U v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class U>
U get(std::ifstream& f, const std::string& path) {
    U v;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!f)
        fail(Errc::truncated, path + ": dataset file ended early");
    return v;
}

}  // namespace

void save_dataset(const DatasetTensor& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        fail(Errc::io_error, path + ": cannot open for writing");
    f.write("MRIT", 4);
    put<std::uint32_t>(f, kDatasetVersion);
    put<std::uint64_t>(f, static_cast<std::uint64_t>(ds.n));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(ds.height));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(ds.width));
    f.write(reinterpret_cast<const char*>(ds.values.data()),
            static_cast<std::streamsize>(ds.values.size() * sizeof(float)));
    if (!f)
        fail(Errc::io_error, path + ": write failed");
}

DatasetTensor pack_dataset(const std::vector<SliceImage>& images, const std::string& path,
                           std::int64_t height, std::int64_t width) {
    DatasetTensor ds;
    ds.n = static_cast<std::int64_t>(images.size());
    ds.height = height;
    ds.width = width;
    ds.values.reserve(static_cast<std::size_t>(ds.n * height * width));

    for (const auto& img : images) {
        if (img.height != height || img.width != width)
            fail(Errc::shape_mismatch,
                 img.source + ": slice is " + std::to_string(img.height) + "x" +
                     std::to_string(img.width) + ", expected " + std::to_string(height) + "x" +
                     std::to_string(width));
        for (float v : img.pixels) {
            if (!(v >= -1.0f && v <= 1.0f))
                fail(Errc::range_violation,
                     img.source + ": value " + std::to_string(v) + " outside [-1,1]");
        }
        ds.values.insert(ds.values.end(), img.pixels.begin(), img.pixels.end());
    }
    save_dataset(ds, path);
    return ds;
}

DatasetTensor load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        fail(Errc::io_error, path + ": cannot open");

    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "MRIT", 4) != 0)
        fail(Errc::unsupported_format, path + ": not a dataset tensor file (bad magic)");
    const auto version = get<std::uint32_t>(f, path);
    if (version != kDatasetVersion)
        fail(Errc::unsupported_format,
             path + ": dataset format version " + std::to_string(version) + " unknown");

    DatasetTensor ds;
    ds.n = static_cast<std::int64_t>(get<std::uint64_t>(f, path));
    ds.height = get<std::uint32_t>(f, path);
    ds.width = get<std::uint32_t>(f, path);

    const std::size_t count = static_cast<std::size_t>(ds.n * ds.height * ds.width);
    ds.values.resize(count);
    f.read(reinterpret_cast<char*>(ds.values.data()),
           static_cast<std::streamsize>(count * sizeof(float)));
    if (!f)
        fail(Errc::truncated, path + ": payload shorter than header promises");
    return ds;
}

DatasetTensor downscale2x(const DatasetTensor& ds) {
    if (ds.height % 2 != 0 || ds.width % 2 != 0)
        fail(Errc::odd_extent, "cannot halve odd extents " + std::to_string(ds.height) + "x" +
                                   std::to_string(ds.width));
    DatasetTensor out;
    out.n = ds.n;
    out.height = ds.height / 2;
    out.width = ds.width / 2;
    out.values.resize(static_cast<std::size_t>(out.n * out.height * out.width));

    for (std::int64_t i = 0; i < ds.n; ++i) {
        const float* src = ds.image(i);
        float* dst = out.values.data() + i * out.height * out.width;
        for (std::int64_t r = 0; r < out.height; ++r)
            for (std::int64_t c = 0; c < out.width; ++c) {
                const std::int64_t r2 = 2 * r, c2 = 2 * c;
                dst[r * out.width + c] =
                    (src[r2 * ds.width + c2] + src[r2 * ds.width + c2 + 1] +
                     src[(r2 + 1) * ds.width + c2] + src[(r2 + 1) * ds.width + c2 + 1]) *
                    0.25f;
            }
    }
    return out;
}

}  // namespace mrigen
