#pragma once

#include <stdexcept>
#include <string>

namespace mrigen {

/// Failure categories surfaced by the library. The CLI maps these onto
/// its exit-code contract (usage=1, data=2, verification=3).
enum class Errc {
    // nifti
    bad_magic,
    bad_dims,
    bad_header,
    unsupported_datatype,
    unsupported_format,
    truncated,
    unsupported_4d,
    out_of_bounds,
    non_finite,
    // slice pipeline
    too_thin,
    even_count,
    too_large,
    too_small,
    content_loss,
    shape_mismatch,
    range_violation,
    // tensor / model
    odd_extent,
    batch_too_small,
    bad_rate,
    bad_schedule,
    // training / formats
    dataset_empty,
    corrupt_checkpoint,
    config_mismatch,
    bad_config,
    io_error,
};

const char* errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

}  // namespace mrigen
