#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mrigen/checkpoint.hpp"
#include "mrigen/dataset.hpp"
#include "mrigen/model.hpp"

namespace mrigen {

struct TrainConfig {
    std::int64_t image_size = 256;
    std::int64_t batch_size = 32;
    std::int64_t epochs = 1;
    double lr = 1e-5;
    std::string dataset_path;
    std::int64_t max_images = 10000;
    std::int64_t checkpoint_every = 50;
    std::int64_t sample_every = 50;
    std::int64_t sample_rows = 3;
    std::int64_t sample_cols = 3;
    std::uint64_t seed = 42;
    std::int64_t d_steps_per_g_step = 1;
    double noise_sigma = 0.1;
    double dropout_rate = 0.25;
    std::string out_dir = "run";
    bool deterministic = false;
};

TrainConfig load_train_config(const std::string& path);
std::string config_to_json(const TrainConfig& cfg);

/// SHA-256 over the trajectory-defining fields (resolution, batch size,
/// learning rate, seed, update ratio, stochastic-layer settings, image cap).
/// Run-length and output-location fields are excluded so a checkpoint can be
/// resumed with more epochs or a different run directory.
std::array<std::uint8_t, 32> config_hash(const TrainConfig& cfg);

struct EpochLog {
    std::int64_t epoch = 0;
    double d_real = 0.0;
    double d_fake = 0.0;
    double g = 0.0;
    double secs = 0.0;

    std::string to_json() const;
};

struct TrainResult {
    std::vector<EpochLog> logs;
    std::string final_checkpoint;
    std::int64_t d_updates = 0;
    std::int64_t g_updates = 0;
};

/// Runs adversarial training over a packed dataset. Emits one JSONL log line
/// per epoch (file train_log.jsonl in out_dir, echoed to `echo` if given),
/// sample grids `epoch_<N>.png` and checkpoints at the configured cadence,
/// and a final checkpoint. Resuming from a checkpoint continues the exact
/// trajectory of an uninterrupted run with the same seed.
TrainResult train(const TrainConfig& cfg, const DatasetTensor& dataset,
                  const std::optional<std::string>& resume_path = std::nullopt,
                  std::ostream* echo = nullptr);

/// rows*cols independent fixed-seed noise draws through the generator in
/// infer mode, tiled into one PNG.
void sample_grid_png(Network<float>& gen, const ArchitectureSchedule& schedule,
                     std::int64_t rows, std::int64_t cols, std::uint64_t seed,
                     const std::string& path);

/// Rebuilds a generator in infer state from a checkpoint (standalone use by
/// the generate subcommand).
std::pair<Network<float>, ArchitectureSchedule> generator_from_checkpoint(
    const Checkpoint& ck);

}  // namespace mrigen
