#include "mrigen/errors.hpp"

namespace mrigen {

const char* errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::bad_magic: return "BadMagic";
        case Errc::bad_dims: return "BadDims";
        case Errc::bad_header: return "BadHeader";
        case Errc::unsupported_datatype: return "UnsupportedDatatype";
        case Errc::unsupported_format: return "UnsupportedFormat";
        case Errc::truncated: return "Truncated";
        case Errc::unsupported_4d: return "Unsupported4D";
        case Errc::out_of_bounds: return "OutOfBounds";
        case Errc::non_finite: return "NonFinite";
        case Errc::too_thin: return "TooThin";
        case Errc::even_count: return "EvenCount";
        case Errc::too_large: return "TooLarge";
        case Errc::too_small: return "TooSmall";
        case Errc::content_loss: return "ContentLoss";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::range_violation: return "RangeViolation";
        case Errc::odd_extent: return "OddExtent";
        case Errc::batch_too_small: return "BatchTooSmall";
        case Errc::bad_rate: return "BadRate";
        case Errc::bad_schedule: return "BadSchedule";
        case Errc::dataset_empty: return "DatasetEmpty";
        case Errc::corrupt_checkpoint: return "CorruptCheckpoint";
        case Errc::config_mismatch: return "ConfigMismatch";
        case Errc::bad_config: return "BadConfig";
        case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

}  // namespace mrigen
