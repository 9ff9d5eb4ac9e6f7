#include <cmath>
#include <filesystem>

#include <functional>

#include "doctest.h"
#include "mrigen/dataset.hpp"
#include "mrigen/errors.hpp"
#include "mrigen/png_io.hpp"
#include "mrigen/slice.hpp"
#include "mrigen/slice_store.hpp"
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

nifti::Volume make_volume(std::int16_t ex, std::int16_t ey, std::int16_t ez) {
    NiftiSpec s;
    s.dims = {ex, ey, ez};
    s.datatype = 16;
    const auto bytes =
        fixtures::nifti_bytes(s, [](std::int64_t i) { return static_cast<double>(i % 251); });
    return nifti::decode_volume(bytes, "vol.nii");
}

SliceImage from_rows(std::vector<std::vector<float>> rows) {
    SliceImage img(static_cast<std::int64_t>(rows.size()),
                   static_cast<std::int64_t>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            img.at(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c)) = rows[r][c];
    return img;
}

bool same_pixels(const SliceImage& a, const SliceImage& b) {
    return a.height == b.height && a.width == b.width && a.pixels == b.pixels;
}

}  // namespace

TEST_CASE("sagittal middle window on a 224-extent axis is 105..119") {
    const auto vol = make_volume(224, 16, 15);
    const auto slices = extract_slices(vol, Plane::sagittal, 15);
    REQUIRE(slices.size() == 15);
    CHECK(slices.front().slice_index == 105);
    CHECK(slices[7].slice_index == 112);
    CHECK(slices.back().slice_index == 119);
    CHECK(slices[0].height == 16);  // y extent
    CHECK(slices[0].width == 15);   // z extent
    // contiguous ascending indices
    for (std::size_t k = 1; k < slices.size(); ++k)
        CHECK(slices[k].slice_index == slices[k - 1].slice_index + 1);
}

TEST_CASE("axial middle of a 176-extent axis is 88") {
    const auto vol = make_volume(15, 16, 176);
    const auto slices = extract_slices(vol, Plane::axial, 15);
    CHECK(slices[7].slice_index == 88);
}

TEST_CASE("extent equal to count uses the whole axis") {
    const auto vol = make_volume(15, 16, 17);
    const auto slices = extract_slices(vol, Plane::sagittal, 15);
    CHECK(slices.front().slice_index == 0);
    CHECK(slices.back().slice_index == 14);
}

TEST_CASE("slice values come from the right plane") {
    const auto vol = make_volume(20, 16, 18);
    const auto sag = extract_slices(vol, Plane::sagittal, 3);
    CHECK(sag[0].at(5, 7) == vol.voxel_at(sag[0].slice_index, 5, 7));
    const auto cor = extract_slices(vol, Plane::coronal, 3);
    CHECK(cor[0].at(5, 7) == vol.voxel_at(5, cor[0].slice_index, 7));
    const auto axi = extract_slices(vol, Plane::axial, 3);
    CHECK(axi[0].at(5, 7) == vol.voxel_at(5, 7, axi[0].slice_index));
}

TEST_CASE("too-thin axis and even count are rejected") {
    const auto vol = make_volume(8, 16, 17);
    CHECK(code_of([&] { extract_slices(vol, Plane::sagittal, 15); }) == Errc::too_thin);
    CHECK(code_of([&] { extract_slices(vol, Plane::coronal, 4); }) == Errc::even_count);
}

TEST_CASE("rot90cw maps a 2x3 example exactly") {
    const auto img = from_rows({{1, 2, 3}, {4, 5, 6}});
    const auto r = rotate(img, OrientAction::rot90cw);
    CHECK(r.height == 3);
    CHECK(r.width == 2);
    CHECK(same_pixels(r, from_rows({{4, 1}, {5, 2}, {6, 3}})));
}

TEST_CASE("rotation group laws hold on random images") {
    RngStream rng(11, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto h = static_cast<std::int64_t>(1 + rng.below(7));
        const auto w = static_cast<std::int64_t>(1 + rng.below(7));
        const auto img = fixtures::random_image(h, w, rng);

        auto cw = rotate(img, OrientAction::rot90cw);
        CHECK(same_pixels(rotate(cw, OrientAction::rot90ccw), img));

        auto r4 = img;
        for (int k = 0; k < 4; ++k) r4 = rotate(r4, OrientAction::rot90cw);
        CHECK(same_pixels(r4, img));

        const auto r180 = rotate(img, OrientAction::rot180);
        CHECK(same_pixels(rotate(rotate(img, OrientAction::rot90cw), OrientAction::rot90cw), r180));
        CHECK(same_pixels(rotate(rotate(img, OrientAction::flip_h), OrientAction::flip_v), r180));

        CHECK(same_pixels(rotate(rotate(img, OrientAction::flip_h), OrientAction::flip_h), img));
        CHECK(same_pixels(rotate(rotate(img, OrientAction::flip_v), OrientAction::flip_v), img));
    }
}

TEST_CASE("pad splits 256x146 into 55 zero columns each side") {
    auto img = fixtures::blob_image(256, 146);
    const auto padded = pad_to(img, 256);
    CHECK(padded.height == 256);
    CHECK(padded.width == 256);
    for (std::int64_t r = 0; r < 256; ++r) {
        for (std::int64_t c = 0; c < 55; ++c) CHECK(padded.at(r, c) == 0.0f);
        for (std::int64_t c = 201; c < 256; ++c) CHECK(padded.at(r, c) == 0.0f);
    }
    CHECK(padded.at(128, 55 + 73) == img.at(128, 73));
}

TEST_CASE("pad of 255x255 puts 0 before and 1 after") {
    auto img = fixtures::blob_image(255, 255);
    const auto padded = pad_to(img, 256);
    CHECK(padded.at(0, 0) == img.at(0, 0));  // no leading pad
    for (std::int64_t c = 0; c < 256; ++c) CHECK(padded.at(255, c) == 0.0f);
    for (std::int64_t r = 0; r < 256; ++r) CHECK(padded.at(r, 255) == 0.0f);
}

TEST_CASE("pad at target size is the identity; larger input fails") {
    const auto img = fixtures::blob_image(256, 256);
    CHECK(same_pixels(pad_to(img, 256), img));
    const auto big = fixtures::blob_image(300, 10);
    CHECK(code_of([&] { pad_to(big, 256); }) == Errc::too_large);
}

TEST_CASE("crop keeps the central block when the border is empty") {
    SliceImage img(512, 512);
    for (std::int64_t r = 128; r < 384; ++r)
        for (std::int64_t c = 128; c < 384; ++c) img.at(r, c) = 3.0f;
    const auto cropped = crop_to(img, 256);
    CHECK(cropped.height == 256);
    CHECK(cropped.width == 256);
    for (float v : cropped.pixels) CHECK(v == 3.0f);
}

TEST_CASE("crop refuses to discard signal") {
    SliceImage ones(512, 512);
    std::fill(ones.pixels.begin(), ones.pixels.end(), 1.0f);
    CHECK(code_of([&] { crop_to(ones, 256); }) == Errc::content_loss);

    const auto small = fixtures::blob_image(100, 100);
    CHECK(code_of([&] { crop_to(small, 256); }) == Errc::too_small);

    const auto same = fixtures::blob_image(256, 256);
    CHECK(same_pixels(crop_to(same, 256), same));
}

TEST_CASE("pad then crop back at zero tolerance is the identity") {
    RngStream rng(3, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto h = static_cast<std::int64_t>(1 + rng.below(256));
        const auto w = static_cast<std::int64_t>(1 + rng.below(256));
        const auto img = fixtures::random_image(h, w, rng);
        const auto back = crop_to_rect(pad_to(img, 256), h, w, 0.0);
        CHECK(same_pixels(back, img));
    }
}

TEST_CASE("conform handles mixed shapes and is idempotent") {
    const auto mixed = fixtures::blob_image(512, 186);
    const auto c = conform(mixed, 256);
    CHECK(c.height == 256);
    CHECK(c.width == 256);

    const auto again = conform(c, 256);
    CHECK(same_pixels(again, c));

    const auto small = fixtures::blob_image(100, 50);
    CHECK(same_pixels(conform(pad_to(small, 256), 256), pad_to(small, 256)));
}

TEST_CASE("normalize maps {0,50,100} to {-1,0,1} and is idempotent") {
    const auto img = from_rows({{0, 50, 100}});
    const auto n = normalize(img);
    CHECK(n.at(0, 0) == -1.0f);
    CHECK(n.at(0, 1) == 0.0f);
    CHECK(n.at(0, 2) == 1.0f);

    const auto nn = normalize(n);
    for (std::size_t i = 0; i < n.pixels.size(); ++i)
        CHECK(nn.pixels[i] == doctest::Approx(n.pixels[i]).epsilon(1e-6));
}

TEST_CASE("normalize endpoints are exactly +-1 on any non-constant image") {
    RngStream rng(13, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const auto img = fixtures::random_image(9, 7, rng);
        const auto n = normalize(img);
        const auto [mn, mx] = std::minmax_element(n.pixels.begin(), n.pixels.end());
        CHECK(*mn == -1.0f);
        CHECK(*mx == 1.0f);
    }
}

TEST_CASE("constant image normalizes to all -1") {
    SliceImage img(4, 4);
    std::fill(img.pixels.begin(), img.pixels.end(), 42.0f);
    const auto n = normalize(img);
    for (float v : n.pixels) CHECK(v == -1.0f);
}

TEST_CASE("verify_sizes reports the distinct shape set with counts") {
    CHECK(verify_sizes({}).counts.empty());

    std::vector<SliceImage> corpus;
    corpus.push_back(fixtures::blob_image(256, 146));
    corpus.push_back(fixtures::blob_image(256, 146));
    corpus.push_back(fixtures::blob_image(512, 186));
    const auto rep = verify_sizes(corpus);
    CHECK(rep.sizes() ==
          std::set<std::pair<std::int64_t, std::int64_t>>{{256, 146}, {512, 186}});
    CHECK(rep.counts.at({256, 146}) == 2);
    CHECK(rep.total() == 3);

    std::vector<SliceImage> conformed;
    for (const auto& img : corpus) conformed.push_back(conform(img, 256));
    CHECK(verify_sizes(conformed).sizes() ==
          std::set<std::pair<std::int64_t, std::int64_t>>{{256, 256}});
}

TEST_CASE("png export maps -1/0/1 to 0/128/255 and round-trips within 1/255") {
    const auto dir = fixtures::temp_dir("png");
    auto img = from_rows({{-1.0f, 0.0f}, {1.0f, 0.5f}});
    const auto path = dir + "/t.png";
    export_png(img, path);

    const auto back = pngio::read_gray8(path);
    CHECK(back.height == 2);
    CHECK(back.width == 2);
    CHECK(back.pixels[0] == 0);
    CHECK(back.pixels[1] == 128);
    CHECK(back.pixels[2] == 255);
    for (std::size_t i = 0; i < 4; ++i) {
        const double recon = back.pixels[i] / 255.0 * 2.0 - 1.0;
        CHECK(std::abs(recon - img.pixels[i]) <= 1.0 / 255.0 + 1e-9);
    }

    SliceImage black(3, 3);
    std::fill(black.pixels.begin(), black.pixels.end(), -1.0f);
    export_png(black, dir + "/black.png");
    for (auto p : pngio::read_gray8(dir + "/black.png").pixels) CHECK(p == 0);

    SliceImage bad(2, 2);
    bad.pixels[0] = 1.5f;
    CHECK(code_of([&] { export_png(bad, dir + "/bad.png"); }) == Errc::range_violation);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pack writes 24-byte header plus float payload and round-trips bit-exactly") {
    const auto dir = fixtures::temp_dir("pack");
    const auto path = dir + "/data.mrit";

    RngStream rng(7, 0);
    std::vector<SliceImage> images;
    for (int k = 0; k < 3; ++k)
        images.push_back(normalize(fixtures::random_image(256, 256, rng)));

    const auto ds = pack_dataset(images, path);
    CHECK(ds.n == 3);
    CHECK(std::filesystem::file_size(path) == 24 + 3 * 256 * 256 * 4);

    const auto back = load_dataset(path);
    CHECK(back.n == ds.n);
    CHECK(back.height == 256);
    CHECK(back.width == 256);
    CHECK(back.values == ds.values);

    // write-read-write reproduces identical bytes
    const auto path2 = dir + "/data2.mrit";
    save_dataset(back, path2);
    CHECK(fixtures::read_file(path) == fixtures::read_file(path2));
    std::filesystem::remove_all(dir);
}

TEST_CASE("pack accepts an empty list and rejects bad inputs") {
    const auto dir = fixtures::temp_dir("pack_edge");
    const auto ds = pack_dataset({}, dir + "/empty.mrit");
    CHECK(ds.n == 0);
    const auto back = load_dataset(dir + "/empty.mrit");
    CHECK(back.n == 0);
    CHECK(back.height == 256);

    SliceImage out_of_range = normalize(fixtures::blob_image(256, 256));
    out_of_range.pixels[5] = 1.5f;
    out_of_range.source = "offender.png";
    CHECK(code_of([&] { pack_dataset({out_of_range}, dir + "/x.mrit"); }) ==
          Errc::range_violation);

    const auto wrong_size = normalize(fixtures::blob_image(128, 256));
    CHECK(code_of([&] { pack_dataset({wrong_size}, dir + "/y.mrit"); }) == Errc::shape_mismatch);

    // truncated file fails loudly
    auto bytes = fixtures::read_file(dir + "/empty.mrit");
    bytes.pop_back();
    fixtures::write_file(dir + "/trunc.mrit", bytes);
    CHECK(code_of([&] { load_dataset(dir + "/trunc.mrit"); }) == Errc::truncated);
    std::filesystem::remove_all(dir);
}

TEST_CASE("slice store round-trips raw intensities within quantization error") {
    const auto dir = fixtures::temp_dir("store");
    RngStream rng(5, 0);
    auto raw = fixtures::random_image(40, 30, rng);
    raw.plane = Plane::coronal;
    raw.slice_index = 12;
    raw.source = "vol.nii";

    const auto rec = store_write_slice(dir, "s.png", raw);
    write_store_index(dir, {rec});
    const auto records = read_store_index(dir);
    REQUIRE(records.size() == 1);
    CHECK(records[0].plane == Plane::coronal);
    CHECK(records[0].slice_index == 12);

    const auto back = store_read_slice(dir, records[0]);
    const double quantum = (rec.raw_max - rec.raw_min) / 255.0;
    for (std::size_t i = 0; i < raw.pixels.size(); ++i)
        CHECK(std::abs(back.pixels[i] - raw.pixels[i]) <= quantum * 0.5 + 1e-6);
    std::filesystem::remove_all(dir);
}

TEST_CASE("orientation config lookup honors dataset entries and the default") {
    const auto dir = fixtures::temp_dir("orient");
    const auto path = dir + "/orient.json";
    std::ofstream(path) << R"({
        "ds-a": {"sagittal": "rot90ccw", "coronal": "none", "axial": "flip_h"},
        "default": {"sagittal": "rot180", "coronal": "rot180", "axial": "rot180"}
    })";
    const auto cfg = load_orient_config(path);
    CHECK(cfg.lookup("ds-a", Plane::sagittal) == OrientAction::rot90ccw);
    CHECK(cfg.lookup("ds-a", Plane::axial) == OrientAction::flip_h);
    CHECK(cfg.lookup("other", Plane::coronal) == OrientAction::rot180);
    std::filesystem::remove_all(dir);
}
