#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mrigen::pngio {

struct Gray8 {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

/// Writes an 8-bit grayscale, non-interlaced PNG.
void write_gray8(const std::string& path, std::int64_t height, std::int64_t width,
                 const std::vector<std::uint8_t>& pixels);

/// Reads a PNG written by this toolkit. Anything other than 8-bit grayscale
/// is rejected.
Gray8 read_gray8(const std::string& path);

}  // namespace mrigen::pngio
