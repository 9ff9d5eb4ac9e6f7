#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrigen/slice.hpp"

namespace mrigen {

/// Packed stack of conformed, normalized slices. On disk (little-endian):
/// magic "MRIT", version u32=1, n u64, height u32, width u32, then n*h*w
/// float32 values in [-1,1], image-major, row-major within an image.
struct DatasetTensor {
    std::int64_t n = 0;
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<float> values;

    const float* image(std::int64_t i) const { return values.data() + i * height * width; }
};

inline constexpr std::uint32_t kDatasetVersion = 1;

/// Validates shapes and the [-1,1] range, writes the file, and returns the
/// in-memory tensor.
DatasetTensor pack_dataset(const std::vector<SliceImage>& images, const std::string& path,
                           std::int64_t height = 256, std::int64_t width = 256);

void save_dataset(const DatasetTensor& ds, const std::string& path);
DatasetTensor load_dataset(const std::string& path);

/// Halves both extents by 2x2 average pooling (desk-scale loader reduction).
DatasetTensor downscale2x(const DatasetTensor& ds);

}  // namespace mrigen
