#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mrigen/nifti.hpp"

namespace mrigen {

enum class Plane { sagittal, coronal, axial };

const char* plane_name(Plane p);
Plane plane_from_name(const std::string& name);

/// Per-(dataset, plane) orientation correction.
enum class OrientAction { none, rot90cw, rot90ccw, rot180, flip_h, flip_v };

const char* orient_name(OrientAction a);
OrientAction orient_from_name(const std::string& name);

/// One 2D grayscale slice with provenance.
struct SliceImage {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<float> pixels;  // row-major (height, width)
    Plane plane = Plane::sagittal;
    std::int64_t slice_index = 0;
    std::string source;

    SliceImage() = default;
    SliceImage(std::int64_t h, std::int64_t w)
        : height(h), width(w), pixels(static_cast<std::size_t>(h * w), 0.0f) {}

    float& at(std::int64_t r, std::int64_t c) {
        return pixels[static_cast<std::size_t>(r * width + c)];
    }
    float at(std::int64_t r, std::int64_t c) const {
        return pixels[static_cast<std::size_t>(r * width + c)];
    }
};

struct DimensionReport {
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> counts;

    std::set<std::pair<std::int64_t, std::int64_t>> sizes() const;
    std::int64_t total() const;
    std::string to_string() const;
};

/// Extracts `count` slices centered on floor(extent/2) along the plane's cut
/// axis, in ascending index order. Sagittal cuts along x (y×z images),
/// coronal along y (x×z), axial along z (x×y).
std::vector<SliceImage> extract_slices(const nifti::Volume& vol, Plane plane, int count = 15);

SliceImage rotate(const SliceImage& img, OrientAction action);

/// Zero-pads symmetrically (floor before, ceil after) up to target extents.
SliceImage pad_to_rect(const SliceImage& img, std::int64_t target_h, std::int64_t target_w);
SliceImage pad_to(const SliceImage& img, std::int64_t target = 256);

/// Center-crops down to target extents; fails with ContentLoss if the
/// removed margin carries more than `content_tolerance` of the image's total
/// absolute intensity.
SliceImage crop_to_rect(const SliceImage& img, std::int64_t target_h, std::int64_t target_w,
                        double content_tolerance = 0.001);
SliceImage crop_to(const SliceImage& img, std::int64_t target = 256,
                   double content_tolerance = 0.001);

/// Pads or crops each axis independently so the result is exactly
/// target×target.
SliceImage conform(const SliceImage& img, std::int64_t target = 256,
                   double content_tolerance = 0.001);

/// Min-max normalization to [-1, 1] over the single image; a constant image
/// maps to all -1 (background).
SliceImage normalize(const SliceImage& img);

DimensionReport verify_sizes(const std::vector<SliceImage>& images);

/// Writes a normalized slice as an 8-bit grayscale PNG,
/// pixel = round((v+1)/2 * 255).
void export_png(const SliceImage& img, const std::string& path);

}  // namespace mrigen
