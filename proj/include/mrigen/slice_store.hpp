#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrigen/slice.hpp"

namespace mrigen {

/// One entry of a slice-store directory: an 8-bit PNG plus the raw intensity
/// range it was quantized from, so later stages can recover values without a
/// second quantization pass.
struct StoreRecord {
    std::string file;  // PNG filename, relative to the store directory
    std::string source;
    Plane plane = Plane::sagittal;
    std::int64_t slice_index = 0;
    double raw_min = 0.0;
    double raw_max = 0.0;
};

/// Orientation config: dataset name -> per-plane fix.
struct OrientConfig {
    struct PlaneFixes {
        OrientAction sagittal = OrientAction::none;
        OrientAction coronal = OrientAction::none;
        OrientAction axial = OrientAction::none;

        OrientAction for_plane(Plane p) const;
    };
    std::vector<std::pair<std::string, PlaneFixes>> entries;

    /// Exact dataset-name lookup with a "default" fallback; none otherwise.
    OrientAction lookup(const std::string& dataset, Plane plane) const;
};

OrientConfig load_orient_config(const std::string& path);

void write_store_index(const std::string& dir, const std::vector<StoreRecord>& records);
std::vector<StoreRecord> read_store_index(const std::string& dir);

/// Quantizes a raw-intensity slice to PNG + record. The record's range is the
/// slice's own min/max.
StoreRecord store_write_slice(const std::string& dir, const std::string& name,
                              const SliceImage& raw);

/// Reconstructs raw intensities from a stored slice (inverse of the
/// quantization, up to 1/255 of the recorded range).
SliceImage store_read_slice(const std::string& dir, const StoreRecord& rec);

/// Normalizes a stored slice to [-1,1] using the sidecar-recorded range, so
/// the only quantization in the pipeline is the one at store-write time. A
/// degenerate (constant) range maps to all -1.
SliceImage store_read_normalized(const std::string& dir, const StoreRecord& rec);

}  // namespace mrigen
