#include "mrigen/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "mrigen/errors.hpp"

namespace mrigen::pngio {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_gray8(const std::string& path, std::int64_t height, std::int64_t width,
                 const std::vector<std::uint8_t>& pixels) {
    if (height <= 0 || width <= 0 ||
        pixels.size() != static_cast<std::size_t>(height * width))
        fail(Errc::shape_mismatch, path + ": pixel buffer does not match extents");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        fail(Errc::io_error, path + ": cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(Errc::io_error, "libpng allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(Errc::io_error, path + ": libpng write error");
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::int64_t r = 0; r < height; ++r)
        png_write_row(png, const_cast<png_bytep>(pixels.data() + r * width));
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

Gray8 read_gray8(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        fail(Errc::io_error, path + ": cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(Errc::io_error, "libpng allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(Errc::io_error, path + ": not a readable PNG");
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);
    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const auto depth = png_get_bit_depth(png, info);
    const auto color = png_get_color_type(png, info);
    if (depth != 8 || color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(Errc::unsupported_format, path + ": expected 8-bit grayscale PNG");
    }

    Gray8 img;
    img.height = height;
    img.width = width;
    img.pixels.resize(static_cast<std::size_t>(height) * width);
    for (std::int64_t r = 0; r < img.height; ++r)
        png_read_row(png, img.pixels.data() + r * img.width, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace mrigen::pngio
