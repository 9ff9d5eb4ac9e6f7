#include "mrigen/slice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mrigen/errors.hpp"
#include "mrigen/png_io.hpp"

namespace mrigen {

const char* plane_name(Plane p) {
    switch (p) {
        case Plane::sagittal: return "sagittal";
        case Plane::coronal: return "coronal";
        case Plane::axial: return "axial";
    }
    return "?";
}

Plane plane_from_name(const std::string& name) {
    if (name == "sagittal") return Plane::sagittal;
    if (name == "coronal") return Plane::coronal;
    if (name == "axial") return Plane::axial;
    fail(Errc::bad_config, "unknown plane \"" + name + "\"");
}

const char* orient_name(OrientAction a) {
    switch (a) {
        case OrientAction::none: return "none";
        case OrientAction::rot90cw: return "rot90cw";
        case OrientAction::rot90ccw: return "rot90ccw";
        case OrientAction::rot180: return "rot180";
        case OrientAction::flip_h: return "flip_h";
        case OrientAction::flip_v: return "flip_v";
    }
    return "?";
}

OrientAction orient_from_name(const std::string& name) {
    if (name == "none") return OrientAction::none;
    if (name == "rot90cw") return OrientAction::rot90cw;
    if (name == "rot90ccw") return OrientAction::rot90ccw;
    if (name == "rot180") return OrientAction::rot180;
    if (name == "flip_h") return OrientAction::flip_h;
    if (name == "flip_v") return OrientAction::flip_v;
    fail(Errc::bad_config, "unknown orientation action \"" + name + "\"");
}

std::set<std::pair<std::int64_t, std::int64_t>> DimensionReport::sizes() const {
    std::set<std::pair<std::int64_t, std::int64_t>> s;
    for (const auto& [k, _] : counts) s.insert(k);
    return s;
}

std::int64_t DimensionReport::total() const {
    std::int64_t t = 0;
    for (const auto& [_, n] : counts) t += n;
    return t;
}

std::string DimensionReport::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, n] : counts) {
        if (!first) os << ", ";
        os << "(" << k.first << "," << k.second << ")x" << n;
        first = false;
    }
    return os.str();
}

std::vector<SliceImage> extract_slices(const nifti::Volume& vol, Plane plane, int count) {
    if (count <= 0 || count % 2 == 0)
        fail(Errc::even_count, "slice count must be odd and positive, got " +
                                   std::to_string(count));

    const std::int64_t ex = vol.extent[0], ey = vol.extent[1], ez = vol.extent[2];
    const std::int64_t axis_extent = (plane == Plane::sagittal) ? ex
                                   : (plane == Plane::coronal)  ? ey
                                                                : ez;
    if (axis_extent < count)
        fail(Errc::too_thin, vol.source_path + ": extent " + std::to_string(axis_extent) +
                                 " along " + plane_name(plane) + " axis is below slice count " +
                                 std::to_string(count));

    const std::int64_t mid = axis_extent / 2;
    const std::int64_t lo = mid - (count - 1) / 2;

    auto flat = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
        return vol.data[static_cast<std::size_t>(x + ex * (y + ey * z))];
    };

    std::vector<SliceImage> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = lo; i < lo + count; ++i) {
        SliceImage img;
        img.plane = plane;
        img.slice_index = i;
        img.source = vol.source_path;
        switch (plane) {
            case Plane::sagittal:
                img.height = ey;
                img.width = ez;
                img.pixels.resize(static_cast<std::size_t>(ey * ez));
                for (std::int64_t y = 0; y < ey; ++y)
                    for (std::int64_t z = 0; z < ez; ++z)
                        img.at(y, z) = flat(i, y, z);
                break;
            case Plane::coronal:
                img.height = ex;
                img.width = ez;
                img.pixels.resize(static_cast<std::size_t>(ex * ez));
                for (std::int64_t x = 0; x < ex; ++x)
                    for (std::int64_t z = 0; z < ez; ++z)
                        img.at(x, z) = flat(x, i, z);
                break;
            case Plane::axial:
                img.height = ex;
                img.width = ey;
                img.pixels.resize(static_cast<std::size_t>(ex * ey));
                for (std::int64_t x = 0; x < ex; ++x)
                    for (std::int64_t y = 0; y < ey; ++y)
                        img.at(x, y) = flat(x, y, i);
                break;
        }
        out.push_back(std::move(img));
    }
    return out;
}

SliceImage rotate(const SliceImage& img, OrientAction action) {
    const std::int64_t h = img.height, w = img.width;
    SliceImage out;
    out.plane = img.plane;
    out.slice_index = img.slice_index;
    out.source = img.source;

    auto fill = [&](std::int64_t oh, std::int64_t ow, auto map) {
        out.height = oh;
        out.width = ow;
        out.pixels.resize(static_cast<std::size_t>(oh * ow));
        for (std::int64_t r = 0; r < h; ++r)
            for (std::int64_t c = 0; c < w; ++c) {
                auto [nr, nc] = map(r, c);
                out.at(nr, nc) = img.at(r, c);
            }
    };

    switch (action) {
        case OrientAction::none:
            out = img;
            break;
        case OrientAction::rot90cw:
            // (r,c) of h×w -> (c, h-1-r) of w×h
            fill(w, h, [&](std::int64_t r, std::int64_t c) { return std::pair{c, h - 1 - r}; });
            break;
        case OrientAction::rot90ccw:
            fill(w, h, [&](std::int64_t r, std::int64_t c) { return std::pair{w - 1 - c, r}; });
            break;
        case OrientAction::rot180:
            fill(h, w, [&](std::int64_t r, std::int64_t c) {
                return std::pair{h - 1 - r, w - 1 - c};
            });
            break;
        case OrientAction::flip_h:
            fill(h, w, [&](std::int64_t r, std::int64_t c) { return std::pair{r, w - 1 - c}; });
            break;
        case OrientAction::flip_v:
            fill(h, w, [&](std::int64_t r, std::int64_t c) { return std::pair{h - 1 - r, c}; });
            break;
    }
    return out;
}

SliceImage pad_to_rect(const SliceImage& img, std::int64_t target_h, std::int64_t target_w) {
    if (img.height > target_h || img.width > target_w)
        fail(Errc::too_large, "image " + std::to_string(img.height) + "x" +
                                  std::to_string(img.width) + " exceeds pad target " +
                                  std::to_string(target_h) + "x" + std::to_string(target_w));

    const std::int64_t top = (target_h - img.height) / 2;
    const std::int64_t left = (target_w - img.width) / 2;

    SliceImage out(target_h, target_w);
    out.plane = img.plane;
    out.slice_index = img.slice_index;
    out.source = img.source;
    for (std::int64_t r = 0; r < img.height; ++r)
        for (std::int64_t c = 0; c < img.width; ++c)
            out.at(top + r, left + c) = img.at(r, c);
    return out;
}

SliceImage pad_to(const SliceImage& img, std::int64_t target) {
    return pad_to_rect(img, target, target);
}

SliceImage crop_to_rect(const SliceImage& img, std::int64_t target_h, std::int64_t target_w,
                        double content_tolerance) {
    if (img.height < target_h || img.width < target_w)
        fail(Errc::too_small, "image " + std::to_string(img.height) + "x" +
                                  std::to_string(img.width) + " below crop target " +
                                  std::to_string(target_h) + "x" + std::to_string(target_w));

    const std::int64_t top = (img.height - target_h) / 2;
    const std::int64_t left = (img.width - target_w) / 2;

    double total = 0.0, kept = 0.0;
    for (std::int64_t r = 0; r < img.height; ++r)
        for (std::int64_t c = 0; c < img.width; ++c) {
            const double a = std::abs(static_cast<double>(img.at(r, c)));
            total += a;
            if (r >= top && r < top + target_h && c >= left && c < left + target_w)
                kept += a;
        }
    const double removed = total - kept;
    if (removed > content_tolerance * total)
        fail(Errc::content_loss,
             img.source + ": crop margin carries " + std::to_string(removed) + " of " +
                 std::to_string(total) + " total absolute intensity (tolerance " +
                 std::to_string(content_tolerance) + ")");

    SliceImage out(target_h, target_w);
    out.plane = img.plane;
    out.slice_index = img.slice_index;
    out.source = img.source;
    for (std::int64_t r = 0; r < target_h; ++r)
        for (std::int64_t c = 0; c < target_w; ++c)
            out.at(r, c) = img.at(top + r, left + c);
    return out;
}

SliceImage crop_to(const SliceImage& img, std::int64_t target, double content_tolerance) {
    return crop_to_rect(img, target, target, content_tolerance);
}

SliceImage conform(const SliceImage& img, std::int64_t target, double content_tolerance) {
    // Each axis independently: crop what is above target, then pad what is
    // below. Crop first so mixed shapes (one axis over, one under) work.
    SliceImage cur = img;
    const std::int64_t ch = std::min(cur.height, target);
    const std::int64_t cw = std::min(cur.width, target);
    if (ch != cur.height || cw != cur.width)
        cur = crop_to_rect(cur, ch, cw, content_tolerance);
    if (cur.height != target || cur.width != target)
        cur = pad_to_rect(cur, target, target);
    return cur;
}

SliceImage normalize(const SliceImage& img) {
    SliceImage out = img;
    if (img.pixels.empty()) return out;
    const auto [mn_it, mx_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const float mn = *mn_it, mx = *mx_it;
    if (mn == mx) {
        std::fill(out.pixels.begin(), out.pixels.end(), -1.0f);
        return out;
    }
    const float range = mx - mn;
    for (auto& v : out.pixels)
        v = 2.0f * ((v - mn) / range) - 1.0f;
    return out;
}

DimensionReport verify_sizes(const std::vector<SliceImage>& images) {
    DimensionReport rep;
    for (const auto& img : images)
        ++rep.counts[{img.height, img.width}];
    return rep;
}

void export_png(const SliceImage& img, const std::string& path) {
    std::vector<std::uint8_t> px(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const float v = img.pixels[i];
        if (v < -1.0f || v > 1.0f || !std::isfinite(v))
            fail(Errc::range_violation,
                 path + ": pixel value " + std::to_string(v) + " outside [-1,1]; normalize first");
        px[i] = static_cast<std::uint8_t>(std::lround((v + 1.0) * 0.5 * 255.0));
    }
    pngio::write_gray8(path, img.height, img.width, px);
}

}  // namespace mrigen
