#include "mrigen/slice_store.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mrigen/errors.hpp"
#include "mrigen/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mrigen {

OrientAction OrientConfig::PlaneFixes::for_plane(Plane p) const {
    switch (p) {
        case Plane::sagittal: return sagittal;
        case Plane::coronal: return coronal;
        case Plane::axial: return axial;
    }
    return OrientAction::none;
}

OrientAction OrientConfig::lookup(const std::string& dataset, Plane plane) const {
    const PlaneFixes* fallback = nullptr;
    for (const auto& [name, fixes] : entries) {
        if (name == dataset) return fixes.for_plane(plane);
        if (name == "default") fallback = &fixes;
    }
    return fallback ? fallback->for_plane(plane) : OrientAction::none;
}

OrientConfig load_orient_config(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        fail(Errc::io_error, path + ": cannot open orientation config");
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        fail(Errc::bad_config, path + ": " + e.what());
    }
    if (!j.is_object())
        fail(Errc::bad_config, path + ": expected an object of dataset entries");

    OrientConfig cfg;
    for (const auto& [dataset, fixes] : j.items()) {
        OrientConfig::PlaneFixes pf;
        if (!fixes.is_object())
            fail(Errc::bad_config, path + ": entry \"" + dataset + "\" must be an object");
        for (const auto& [plane, action] : fixes.items()) {
            const auto act = orient_from_name(action.get<std::string>());
            switch (plane_from_name(plane)) {
                case Plane::sagittal: pf.sagittal = act; break;
                case Plane::coronal: pf.coronal = act; break;
                case Plane::axial: pf.axial = act; break;
            }
        }
        cfg.entries.emplace_back(dataset, pf);
    }
    return cfg;
}

static std::string index_path(const std::string& dir) {
    return (fs::path(dir) / "index.json").string();
}

void write_store_index(const std::string& dir, const std::vector<StoreRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) {
        arr.push_back({{"file", r.file},
                       {"source", r.source},
                       {"plane", plane_name(r.plane)},
                       {"slice_index", r.slice_index},
                       {"min", r.raw_min},
                       {"max", r.raw_max}});
    }
    std::ofstream f(index_path(dir));
    if (!f)
        fail(Errc::io_error, index_path(dir) + ": cannot write");
    f << arr.dump(2) << "\n";
}

std::vector<StoreRecord> read_store_index(const std::string& dir) {
    std::ifstream f(index_path(dir));
    if (!f)
        fail(Errc::io_error, index_path(dir) + ": no slice-store index here");
    json arr;
    try {
        f >> arr;
    } catch (const json::parse_error& e) {
        fail(Errc::bad_config, index_path(dir) + ": " + e.what());
    }
    std::vector<StoreRecord> out;
    for (const auto& j : arr) {
        StoreRecord r;
        r.file = j.at("file").get<std::string>();
        r.source = j.at("source").get<std::string>();
        r.plane = plane_from_name(j.at("plane").get<std::string>());
        r.slice_index = j.at("slice_index").get<std::int64_t>();
        r.raw_min = j.at("min").get<double>();
        r.raw_max = j.at("max").get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

StoreRecord store_write_slice(const std::string& dir, const std::string& name,
                              const SliceImage& raw) {
    const auto [mn_it, mx_it] = std::minmax_element(raw.pixels.begin(), raw.pixels.end());
    const double mn = raw.pixels.empty() ? 0.0 : *mn_it;
    const double mx = raw.pixels.empty() ? 0.0 : *mx_it;

    std::vector<std::uint8_t> px(raw.pixels.size(), 0);
    if (mx > mn) {
        const double range = mx - mn;
        for (std::size_t i = 0; i < raw.pixels.size(); ++i)
            px[i] = static_cast<std::uint8_t>(
                std::lround((raw.pixels[i] - mn) / range * 255.0));
    }
    pngio::write_gray8((fs::path(dir) / name).string(), raw.height, raw.width, px);

    StoreRecord rec;
    rec.file = name;
    rec.source = raw.source;
    rec.plane = raw.plane;
    rec.slice_index = raw.slice_index;
    rec.raw_min = mn;
    rec.raw_max = mx;
    return rec;
}

SliceImage store_read_slice(const std::string& dir, const StoreRecord& rec) {
    if (rec.raw_max < rec.raw_min)
        fail(Errc::range_violation, rec.file + ": sidecar range is inverted (" +
                                        std::to_string(rec.raw_min) + " > " +
                                        std::to_string(rec.raw_max) + ")");
    const auto img = pngio::read_gray8((fs::path(dir) / rec.file).string());
    SliceImage out(img.height, img.width);
    out.plane = rec.plane;
    out.slice_index = rec.slice_index;
    out.source = rec.source;
    const double range = rec.raw_max - rec.raw_min;
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.pixels[i] = static_cast<float>(rec.raw_min + img.pixels[i] / 255.0 * range);
    return out;
}

SliceImage store_read_normalized(const std::string& dir, const StoreRecord& rec) {
    auto img = store_read_slice(dir, rec);
    if (rec.raw_max == rec.raw_min) {
        std::fill(img.pixels.begin(), img.pixels.end(), -1.0f);
        return img;
    }
    const float mn = static_cast<float>(rec.raw_min);
    const float range = static_cast<float>(rec.raw_max - rec.raw_min);
    for (auto& v : img.pixels) v = 2.0f * ((v - mn) / range) - 1.0f;
    return img;
}

}  // namespace mrigen
