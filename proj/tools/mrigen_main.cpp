// mrigen: MRI slice preparation and DCGAN training toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include "mrigen/dataset.hpp"
#include "mrigen/errors.hpp"
#include "mrigen/gradcheck.hpp"
#include "mrigen/nifti.hpp"
#include "mrigen/slice.hpp"
#include "mrigen/slice_store.hpp"
#include "mrigen/train.hpp"
#include "mrigen/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mrigen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerification = 3;

std::optional<std::uint64_t> env_seed_override() {
    if (const char* env = std::getenv("MRIT_SEED"))
        return std::strtoull(env, nullptr, 10);
    return std::nullopt;
}

/// Every subcommand records what it is about to do before writing artifacts.
void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    const std::vector<std::string>& inputs, std::uint64_t seed) {
    fs::create_directories(out_dir);
    json j;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = inputs;
    j["version"] = kVersion;
    j["seed"] = seed;
    std::ofstream f(fs::path(out_dir) / "manifest.json");
    f << j.dump(2) << "\n";
}

std::string stem_of(const std::string& path) {
    auto stem = fs::path(path).stem().string();
    if (stem.ends_with(".nii")) stem = stem.substr(0, stem.size() - 4);
    return stem;
}

SliceImage middle_slice(const nifti::Volume& vol, Plane plane) {
    return extract_slices(vol, plane, 1).front();
}

int cmd_inspect(const std::string& file, const std::string& out_dir) {
    const auto vol = nifti::read_volume(file);
    const auto& h = vol.header;
    std::printf("%s\n", file.c_str());
    std::printf("  dims: %lld x %lld x %lld\n", static_cast<long long>(vol.extent[0]),
                static_cast<long long>(vol.extent[1]), static_cast<long long>(vol.extent[2]));
    std::printf("  datatype: %s (%d), bitpix %d, %s-endian\n", nifti::datatype_name(h.datatype),
                h.datatype, h.bitpix, h.endianness == nifti::Endian::little ? "little" : "big");
    std::printf("  scl_slope %g, scl_inter %g, vox_offset %g\n", h.scl_slope, h.scl_inter,
                h.vox_offset);
    std::printf("  middle indices: sagittal=%lld coronal=%lld axial=%lld\n",
                static_cast<long long>(vol.extent[0] / 2),
                static_cast<long long>(vol.extent[1] / 2),
                static_cast<long long>(vol.extent[2] / 2));

    write_manifest(out_dir, "inspect", {{"out", out_dir}}, {file}, 0);
    for (Plane plane : {Plane::sagittal, Plane::coronal, Plane::axial}) {
        const auto img = middle_slice(vol, plane);
        const auto name = stem_of(file) + "_" + plane_name(plane) + "_" +
                          std::to_string(img.slice_index) + ".png";
        export_png(normalize(img), (fs::path(out_dir) / name).string());
        std::printf("  wrote %s\n", name.c_str());
    }
    return kExitOk;
}

int cmd_slice(const std::vector<std::string>& files, const std::string& plane_name_str,
              int count, const std::string& orient_path, const std::string& dataset,
              const std::string& out_dir) {
    const Plane plane = plane_from_name(plane_name_str);
    OrientConfig orient;
    if (!orient_path.empty()) orient = load_orient_config(orient_path);
    const OrientAction fix = orient.lookup(dataset, plane);

    write_manifest(out_dir, "slice",
                   {{"plane", plane_name_str},
                    {"count", count},
                    {"orient_config", orient_path},
                    {"dataset", dataset},
                    {"out", out_dir}},
                   files, 0);

    std::vector<StoreRecord> records;
    std::int64_t written = 0, skipped = 0;
    for (const auto& file : files) {
        try {
            const auto vol = nifti::read_volume(file);
            const auto slices = extract_slices(vol, plane, count);
            for (const auto& raw : slices) {
                const auto fixed = rotate(raw, fix);
                const auto name = stem_of(file) + "_" + plane_name(plane) + "_" +
                                  std::to_string(raw.slice_index) + ".png";
                records.push_back(store_write_slice(out_dir, name, fixed));
                ++written;
            }
        } catch (const Error& e) {
            if (e.code() == Errc::too_thin) {
                std::fprintf(stderr, "warning: %s skipped: %s\n", file.c_str(), e.what());
                ++skipped;
                continue;
            }
            throw;
        }
    }
    write_store_index(out_dir, records);
    std::printf("%zu volumes, %lld slices written, %lld skipped\n", files.size(),
                static_cast<long long>(written), static_cast<long long>(skipped));
    return kExitOk;
}

int cmd_conform(const std::string& in_dir, const std::string& out_dir, std::int64_t size,
                double tolerance) {
    const auto records = read_store_index(in_dir);
    write_manifest(out_dir, "conform",
                   {{"in", in_dir}, {"out", out_dir}, {"size", size}, {"tolerance", tolerance}},
                   {in_dir}, 0);

    std::vector<SliceImage> before;
    std::vector<StoreRecord> out_records(records.size());
    std::vector<std::string> failures(records.size());

    before.reserve(records.size());
    for (const auto& rec : records) before.push_back(store_read_slice(in_dir, rec));

    const auto report_before = verify_sizes(before);

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(records.size()); ++k) {
        const auto& rec = records[static_cast<std::size_t>(k)];
        try {
            const auto fixed = conform(before[static_cast<std::size_t>(k)], size, tolerance);
            out_records[static_cast<std::size_t>(k)] =
                store_write_slice(out_dir, rec.file, fixed);
        } catch (const Error& e) {
            failures[static_cast<std::size_t>(k)] = rec.file + ": " + e.what();
        }
    }

    std::vector<StoreRecord> kept;
    std::vector<SliceImage> after;
    std::int64_t failed = 0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (!failures[k].empty()) {
            ++failed;
            continue;
        }
        kept.push_back(out_records[k]);
        after.push_back(store_read_slice(out_dir, out_records[k]));
    }
    write_store_index(out_dir, kept);

    std::printf("before: %s\n", report_before.to_string().c_str());
    std::printf("after:  %s\n", verify_sizes(after).to_string().c_str());
    if (failed > 0) {
        std::fprintf(stderr, "%lld file(s) failed:\n", static_cast<long long>(failed));
        for (const auto& f : failures)
            if (!f.empty()) std::fprintf(stderr, "  %s\n", f.c_str());
        return kExitData;
    }
    return kExitOk;
}

int cmd_pack(const std::string& in_dir, const std::string& out_file, std::int64_t size) {
    const auto records = read_store_index(in_dir);
    const auto out_dir = fs::path(out_file).has_parent_path()
                             ? fs::path(out_file).parent_path().string()
                             : std::string(".");
    write_manifest(out_dir, "pack", {{"in", in_dir}, {"out", out_file}, {"size", size}},
                   {in_dir}, 0);

    std::vector<SliceImage> normalized;
    normalized.reserve(records.size());
    for (const auto& rec : records) {
        auto img = store_read_normalized(in_dir, rec);
        img.source = rec.file;
        normalized.push_back(std::move(img));
    }
    const auto ds = pack_dataset(normalized, out_file, size, size);
    std::printf("packed %lld slices of %lldx%lld into %s\n", static_cast<long long>(ds.n),
                static_cast<long long>(ds.height), static_cast<long long>(ds.width),
                out_file.c_str());
    if (ds.n == 0) std::fprintf(stderr, "warning: dataset is empty\n");
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::optional<std::string>& resume) {
    TrainConfig cfg = load_train_config(config_path);
    if (const auto seed = env_seed_override()) cfg.seed = *seed;

    const auto ds = load_dataset(cfg.dataset_path);
    write_manifest(cfg.out_dir, "train", json::parse(config_to_json(cfg)),
                   {config_path, cfg.dataset_path}, cfg.seed);

    const auto result = train(cfg, ds, resume, &std::cout);
    std::printf("final checkpoint: %s\n", result.final_checkpoint.c_str());
    return kExitOk;
}

int cmd_generate(const std::string& ck_path, std::int64_t n, const std::string& out_file,
                 std::uint64_t seed) {
    if (const auto env = env_seed_override()) seed = *env;
    const auto ck = load_checkpoint(ck_path);
    auto [gen, schedule] = generator_from_checkpoint(ck);

    std::int64_t rows = 1;
    while ((rows + 1) * (rows + 1) <= n) ++rows;
    const std::int64_t cols = (n + rows - 1) / rows;

    const auto out_dir = fs::path(out_file).has_parent_path()
                             ? fs::path(out_file).parent_path().string()
                             : std::string(".");
    write_manifest(out_dir, "generate",
                   {{"checkpoint", ck_path}, {"n", n}, {"out", out_file}, {"seed", seed}},
                   {ck_path}, seed);

    sample_grid_png(gen, schedule, rows, cols, seed, out_file);
    std::printf("wrote %lldx%lld grid (%lld samples at %lld px) to %s\n",
                static_cast<long long>(rows), static_cast<long long>(cols),
                static_cast<long long>(rows * cols),
                static_cast<long long>(schedule.image_size), out_file.c_str());
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
    const auto table = gradcheck::run_layer_suite(seed, 5);
    bool all_pass = true;
    std::printf("%-16s %12s %10s %8s  %s\n", "layer", "max rel err", "tolerance", "samples",
                "status");
    for (const auto& rep : table) {
        std::printf("%-16s %12.3e %10.0e %8d  %s\n", rep.name.c_str(), rep.max_rel_err,
                    rep.tolerance, rep.samples, rep.pass() ? "ok" : "FAIL");
        all_pass = all_pass && rep.pass();
    }
    return all_pass ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MRI slice preparation and DCGAN training toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // inspect
    std::string inspect_file, inspect_out = ".";
    auto* inspect = app.add_subcommand("inspect", "Print header info and middle-slice PNGs");
    inspect->add_option("file", inspect_file, "NIfTI file (.nii or .nii.gz)")->required();
    inspect->add_option("--out", inspect_out, "Output directory for PNGs");

    // slice
    std::vector<std::string> slice_files;
    std::string slice_plane, slice_orient, slice_dataset = "default", slice_out;
    int slice_count = 15;
    auto* slice = app.add_subcommand("slice", "Extract centered slices into a slice store");
    slice->add_option("--plane", slice_plane, "sagittal|coronal|axial")->required();
    slice->add_option("--count", slice_count, "Number of slices per volume (odd)");
    slice->add_option("--orient-config", slice_orient, "JSON orientation config");
    slice->add_option("--dataset", slice_dataset, "Dataset name for orientation lookup");
    slice->add_option("--out", slice_out, "Slice-store output directory")->required();
    slice->add_option("files", slice_files, "Input volumes")->required();

    // conform
    std::string conform_in, conform_out;
    std::int64_t conform_size = 256;
    double conform_tol = 0.001;
    auto* conform_cmd = app.add_subcommand("conform", "Pad/crop a slice store to a uniform size");
    conform_cmd->add_option("--in", conform_in, "Input slice store")->required();
    conform_cmd->add_option("--out", conform_out, "Output slice store")->required();
    conform_cmd->add_option("--size", conform_size, "Target extent");
    conform_cmd->add_option("--tolerance", conform_tol, "Crop content tolerance");

    // pack
    std::string pack_in, pack_out;
    std::int64_t pack_size = 256;
    auto* pack = app.add_subcommand("pack", "Normalize a slice store into a dataset tensor");
    pack->add_option("--in", pack_in, "Input slice store")->required();
    pack->add_option("--out", pack_out, "Output .mrit file")->required();
    pack->add_option("--size", pack_size, "Expected slice extent");

    // train
    std::string train_config, train_resume;
    auto* train_cmd = app.add_subcommand("train", "Train the adversarial pair on a dataset");
    train_cmd->add_option("--config", train_config, "Train config JSON")->required();
    train_cmd->add_option("--resume", train_resume, "Checkpoint to resume from");

    // generate
    std::string gen_ck, gen_out = "grid.png";
    std::int64_t gen_n = 9;
    std::uint64_t gen_seed = 42;
    auto* gen = app.add_subcommand("generate", "Sample a grid of images from a checkpoint");
    gen->add_option("--checkpoint", gen_ck, "Checkpoint file")->required();
    gen->add_option("--n", gen_n, "Number of samples");
    gen->add_option("--out", gen_out, "Output PNG");
    gen->add_option("--seed", gen_seed, "Noise seed");

    // gradcheck
    std::uint64_t gc_seed = 1;
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every layer");
    gc->add_option("--seed", gc_seed, "Base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*inspect) return cmd_inspect(inspect_file, inspect_out);
        if (*slice)
            return cmd_slice(slice_files, slice_plane, slice_count, slice_orient, slice_dataset,
                             slice_out);
        if (*conform_cmd) return cmd_conform(conform_in, conform_out, conform_size, conform_tol);
        if (*pack) return cmd_pack(pack_in, pack_out, pack_size);
        if (*train_cmd)
            return cmd_train(train_config, train_resume.empty()
                                               ? std::nullopt
                                               : std::optional<std::string>(train_resume));
        if (*gen) return cmd_generate(gen_ck, gen_n, gen_out, gen_seed);
        if (*gc) return cmd_gradcheck(gc_seed);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
