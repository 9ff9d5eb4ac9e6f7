#include "mrigen/train.hpp"

#include <omp.h>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "mrigen/errors.hpp"
#include "mrigen/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mrigen {

namespace {

// Sub-stream ids of the run seed.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamTrain = 2;
constexpr std::uint64_t kStreamSubsample = 3;
constexpr std::uint64_t kStreamGrid = 4;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::array<std::uint8_t, 32> sha256(const std::string& data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr);
    return out;
}

Tensor<float> draw_noise(RngStream& rng, std::int64_t batch, std::int64_t dim) {
    Tensor<float> z(batch, 1, 1, dim);
    const auto slice = RngSlice::take(rng, static_cast<std::uint64_t>(z.numel()));
    kernels::fill_normal(z, slice);
    return z;
}

Tensor<float> gather_batch(const DatasetTensor& ds, const std::vector<std::int64_t>& order,
                           std::int64_t first, std::int64_t count) {
    Tensor<float> x(count, ds.height, ds.width, 1);
    const std::int64_t stride = ds.height * ds.width;
    for (std::int64_t k = 0; k < count; ++k)
        std::copy_n(ds.image(order[static_cast<std::size_t>(first + k)]), stride,
                    x.data() + k * stride);
    return x;
}

void store_network(Checkpoint& ck, Network<float>& net) {
    for (auto& p : net.params())
        ck.tensors.push_back({p.name, {static_cast<std::uint32_t>(p.value->size())}, *p.value});
    for (auto& s : net.state())
        ck.tensors.push_back({s.name, {static_cast<std::uint32_t>(s.value->size())}, *s.value});
}

void load_network(const Checkpoint& ck, Network<float>& net) {
    for (auto& p : net.params()) {
        const auto& t = ck.require(p.name);
        if (t.values.size() != p.value->size())
            fail(Errc::corrupt_checkpoint, p.name + ": size mismatch against checkpoint");
        *p.value = t.values;
    }
    for (auto& s : net.state()) {
        const auto& t = ck.require(s.name);
        if (t.values.size() != s.value->size())
            fail(Errc::corrupt_checkpoint, s.name + ": size mismatch against checkpoint");
        *s.value = t.values;
    }
}

void store_adam(Checkpoint& ck, Adam<float>& opt, const std::vector<ParamRef<float>>& params) {
    auto& m = opt.first_moments();
    auto& v = opt.second_moments();
    for (std::size_t k = 0; k < params.size(); ++k) {
        ck.tensors.push_back(
            {"m:" + params[k].name, {static_cast<std::uint32_t>(m[k].size())}, m[k]});
        ck.tensors.push_back(
            {"v:" + params[k].name, {static_cast<std::uint32_t>(v[k].size())}, v[k]});
    }
}

void load_adam(const Checkpoint& ck, Adam<float>& opt,
               const std::vector<ParamRef<float>>& params) {
    auto& m = opt.first_moments();
    auto& v = opt.second_moments();
    for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = ck.require("m:" + params[k].name).values;
        v[k] = ck.require("v:" + params[k].name).values;
        if (m[k].size() != params[k].value->size() || v[k].size() != params[k].value->size())
            fail(Errc::corrupt_checkpoint, params[k].name + ": moment size mismatch");
    }
}

}  // namespace

TrainConfig load_train_config(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        fail(Errc::io_error, path + ": cannot open train config");
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        fail(Errc::bad_config, path + ": " + e.what());
    }

    TrainConfig cfg;
    auto take = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("image_size", cfg.image_size);
    take("batch_size", cfg.batch_size);
    take("epochs", cfg.epochs);
    take("lr", cfg.lr);
    take("dataset_path", cfg.dataset_path);
    take("max_images", cfg.max_images);
    take("checkpoint_every", cfg.checkpoint_every);
    take("sample_every", cfg.sample_every);
    if (j.contains("sample_grid")) {
        const auto& g = j.at("sample_grid");
        cfg.sample_rows = g.at(0).get<std::int64_t>();
        cfg.sample_cols = g.at(1).get<std::int64_t>();
    }
    take("seed", cfg.seed);
    take("d_steps_per_g_step", cfg.d_steps_per_g_step);
    take("noise_sigma", cfg.noise_sigma);
    take("dropout_rate", cfg.dropout_rate);
    take("out_dir", cfg.out_dir);
    take("deterministic", cfg.deterministic);
    return cfg;
}

std::string config_to_json(const TrainConfig& cfg) {
    json j;
    j["image_size"] = cfg.image_size;
    j["batch_size"] = cfg.batch_size;
    j["epochs"] = cfg.epochs;
    j["lr"] = cfg.lr;
    j["dataset_path"] = cfg.dataset_path;
    j["max_images"] = cfg.max_images;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["sample_every"] = cfg.sample_every;
    j["sample_grid"] = {cfg.sample_rows, cfg.sample_cols};
    j["seed"] = cfg.seed;
    j["d_steps_per_g_step"] = cfg.d_steps_per_g_step;
    j["noise_sigma"] = cfg.noise_sigma;
    j["dropout_rate"] = cfg.dropout_rate;
    j["out_dir"] = cfg.out_dir;
    j["deterministic"] = cfg.deterministic;
    return j.dump();
}

std::array<std::uint8_t, 32> config_hash(const TrainConfig& cfg) {
    json j;
    j["image_size"] = cfg.image_size;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    j["seed"] = cfg.seed;
    j["max_images"] = cfg.max_images;
    j["d_steps_per_g_step"] = cfg.d_steps_per_g_step;
    j["noise_sigma"] = cfg.noise_sigma;
    j["dropout_rate"] = cfg.dropout_rate;
    return sha256(j.dump());
}

std::string EpochLog::to_json() const {
    return "{\"epoch\":" + std::to_string(epoch) + ",\"d_real\":" + fmt_double(d_real) +
           ",\"d_fake\":" + fmt_double(d_fake) + ",\"g\":" + fmt_double(g) +
           ",\"secs\":" + fmt_double(secs) + "}";
}

void sample_grid_png(Network<float>& gen, const ArchitectureSchedule& schedule,
                     std::int64_t rows, std::int64_t cols, std::uint64_t seed,
                     const std::string& path) {
    const std::int64_t count = rows * cols;
    RngStream rng(seed, kStreamGrid);
    Tensor<float> z = draw_noise(rng, count, schedule.noise_dim);
    Tensor<float> imgs = gen.forward(std::move(z), Mode::infer);

    const std::int64_t S = schedule.image_size;
    std::vector<std::uint8_t> canvas(static_cast<std::size_t>(rows * S * cols * S), 0);
    for (std::int64_t k = 0; k < count; ++k) {
        const std::int64_t gr = (k / cols) * S, gc = (k % cols) * S;
        for (std::int64_t y = 0; y < S; ++y)
            for (std::int64_t x = 0; x < S; ++x) {
                float v = imgs.at(k, y, x, 0);
                v = std::min(1.0f, std::max(-1.0f, v));
                canvas[static_cast<std::size_t>((gr + y) * cols * S + gc + x)] =
                    static_cast<std::uint8_t>(std::lround((v + 1.0) * 0.5 * 255.0));
            }
    }
    pngio::write_gray8(path, rows * S, cols * S, canvas);
}

std::pair<Network<float>, ArchitectureSchedule> generator_from_checkpoint(const Checkpoint& ck) {
    const auto schedule = ArchitectureSchedule::for_size(ck.header.image_size);
    Network<float> gen = build_generator<float>(schedule);
    load_network(ck, gen);
    return {std::move(gen), schedule};
}

TrainResult train(const TrainConfig& cfg, const DatasetTensor& dataset,
                  const std::optional<std::string>& resume_path, std::ostream* echo) {
    if (cfg.batch_size < 2)
        fail(Errc::batch_too_small, "batch_size must be >= 2 (batch norm)");
    if (cfg.epochs < 1)
        fail(Errc::bad_config, "epochs must be >= 1");
    if (cfg.sample_rows < 1 || cfg.sample_cols < 1)
        fail(Errc::bad_config, "sample grid must be at least 1x1");
    if (dataset.n == 0)
        fail(Errc::dataset_empty, cfg.dataset_path + ": dataset holds no images");

    // Desk-scale reduction: halve by average pooling until extents match.
    DatasetTensor reduced;
    const DatasetTensor* ds = &dataset;
    if (dataset.height != cfg.image_size || dataset.width != cfg.image_size) {
        reduced = dataset;
        while (reduced.height > cfg.image_size && reduced.height % 2 == 0 &&
               reduced.width % 2 == 0)
            reduced = downscale2x(reduced);
        if (reduced.height != cfg.image_size || reduced.width != cfg.image_size)
            fail(Errc::shape_mismatch,
                 "dataset is " + std::to_string(dataset.height) + "x" +
                     std::to_string(dataset.width) + ", cannot reach image_size " +
                     std::to_string(cfg.image_size) + " by halving");
        ds = &reduced;
    }

    const int prev_threads = omp_get_max_threads();
    if (cfg.deterministic) omp_set_num_threads(1);

    // Seeded cap at max_images.
    std::vector<std::int64_t> used(static_cast<std::size_t>(ds->n));
    std::iota(used.begin(), used.end(), 0);
    if (ds->n > cfg.max_images) {
        RngStream sub(cfg.seed, kStreamSubsample);
        for (std::int64_t i = ds->n - 1; i > 0; --i)
            std::swap(used[static_cast<std::size_t>(i)],
                      used[static_cast<std::size_t>(sub.below(static_cast<std::uint64_t>(i + 1)))]);
        used.resize(static_cast<std::size_t>(cfg.max_images));
        std::sort(used.begin(), used.end());
    }
    const std::int64_t n_used = static_cast<std::int64_t>(used.size());

    const auto schedule = ArchitectureSchedule::for_size(cfg.image_size);
    RngStream master(cfg.seed, kStreamTrain);

    Network<float> gen = build_generator<float>(schedule);
    Network<float> disc = build_discriminator<float>(schedule, &master,
                                                     static_cast<float>(cfg.noise_sigma),
                                                     static_cast<float>(cfg.dropout_rate));
    auto g_params = gen.params();
    auto d_params = disc.params();

    AdamConfig<float> adam_cfg;
    adam_cfg.lr = static_cast<float>(cfg.lr);
    Adam<float> adam_g(adam_cfg), adam_d(adam_cfg);
    adam_g.attach(g_params);
    adam_d.attach(d_params);

    const auto hash = config_hash(cfg);
    std::int64_t start_epoch = 0;

    if (resume_path) {
        Checkpoint ck = load_checkpoint(*resume_path);
        if (ck.header.config_hash != hash)
            fail(Errc::config_mismatch,
                 *resume_path + ": checkpoint was produced by a different configuration");
        if (ck.header.image_size != cfg.image_size)
            fail(Errc::config_mismatch, *resume_path + ": image_size mismatch");
        load_network(ck, gen);
        load_network(ck, disc);
        load_adam(ck, adam_g, g_params);
        load_adam(ck, adam_d, d_params);
        adam_g.set_step_count(ck.header.adam_t_g);
        adam_d.set_step_count(ck.header.adam_t_d);
        master = RngStream(ck.header.rng_seed, ck.header.rng_stream, ck.header.rng_counter);
        start_epoch = static_cast<std::int64_t>(ck.header.epoch);
    } else {
        RngStream init_rng(cfg.seed, kStreamInit);
        init_params(gen, init_rng);
        init_params(disc, init_rng);
    }

    fs::create_directories(cfg.out_dir);
    std::ofstream log_file(fs::path(cfg.out_dir) / "train_log.jsonl",
                           resume_path ? std::ios::app : std::ios::out);

    auto make_checkpoint = [&](std::int64_t epoch) {
        Checkpoint ck;
        ck.header.config_hash = hash;
        ck.header.epoch = static_cast<std::uint64_t>(epoch);
        ck.header.rng_seed = master.seed();
        ck.header.rng_stream = master.stream();
        ck.header.rng_counter = master.counter();
        ck.header.image_size = static_cast<std::uint32_t>(cfg.image_size);
        ck.header.adam_t_g = adam_g.step_count();
        ck.header.adam_t_d = adam_d.step_count();
        store_network(ck, gen);
        store_network(ck, disc);
        store_adam(ck, adam_g, g_params);
        store_adam(ck, adam_d, d_params);
        return ck;
    };

    TrainResult result;
    for (std::int64_t epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        // Seeded epoch shuffle (consumes the master stream so a resumed run
        // replays the identical order).
        std::vector<std::int64_t> order = used;
        for (std::int64_t i = n_used - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(
                          master.below(static_cast<std::uint64_t>(i + 1)))]);

        double sum_d_real = 0.0, sum_d_fake = 0.0, sum_g = 0.0;
        std::int64_t d_count = 0, g_count = 0;

        for (std::int64_t first = 0; first < n_used; first += cfg.batch_size) {
            const std::int64_t nb = std::min(cfg.batch_size, n_used - first);
            Tensor<float> real = gather_batch(*ds, order, first, nb);

            Tensor<float> fakes;
            for (std::int64_t dstep = 0; dstep < cfg.d_steps_per_g_step; ++dstep) {
                Tensor<float> z = draw_noise(master, nb, schedule.noise_dim);
                fakes = gen.forward(std::move(z), Mode::train);

                disc.zero_grads();
                Tensor<float> p_real = disc.forward(real, Mode::train);
                auto [loss_real, grad_real] = bce_with_grad(p_real, 1.0f);
                disc.backward(std::move(grad_real));

                Tensor<float> p_fake = disc.forward(fakes, Mode::train);
                auto [loss_fake, grad_fake] = bce_with_grad(p_fake, 0.0f);
                disc.backward(std::move(grad_fake));

                adam_d.step(d_params);
                sum_d_real += loss_real;
                sum_d_fake += loss_fake;
                ++d_count;
            }

            // Generator update through the (just updated, now frozen)
            // discriminator, reusing the cached generator forward.
            Tensor<float> p2 = disc.forward(fakes, Mode::train);
            auto [loss_g, grad_g] = bce_with_grad(p2, 1.0f);
            Tensor<float> d_input_grad = disc.backward(std::move(grad_g));
            gen.zero_grads();
            gen.backward(std::move(d_input_grad));
            adam_g.step(g_params);
            sum_g += loss_g;
            ++g_count;
        }

        EpochLog log;
        log.epoch = epoch;
        log.d_real = sum_d_real / static_cast<double>(d_count);
        log.d_fake = sum_d_fake / static_cast<double>(d_count);
        log.g = sum_g / static_cast<double>(g_count);
        log.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        log_file << log.to_json() << "\n";
        log_file.flush();
        if (echo) (*echo) << log.to_json() << std::endl;
        result.logs.push_back(log);
        result.d_updates += d_count;
        result.g_updates += g_count;

        if (cfg.sample_every > 0 && epoch % cfg.sample_every == 0)
            sample_grid_png(gen, schedule, cfg.sample_rows, cfg.sample_cols, cfg.seed,
                            (fs::path(cfg.out_dir) / ("epoch_" + std::to_string(epoch) + ".png"))
                                .string());
        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0)
            save_checkpoint((fs::path(cfg.out_dir) /
                             ("checkpoint_epoch_" + std::to_string(epoch) + ".mrck"))
                                .string(),
                            make_checkpoint(epoch));
    }

    result.final_checkpoint = (fs::path(cfg.out_dir) / "checkpoint_final.mrck").string();
    save_checkpoint(result.final_checkpoint, make_checkpoint(cfg.epochs));

    if (cfg.deterministic) omp_set_num_threads(prev_threads);
    return result;
}

}  // namespace mrigen
