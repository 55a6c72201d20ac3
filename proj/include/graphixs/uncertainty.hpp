/// @file uncertainty.hpp
/// @brief Manifest transforms simulating data-uncertainty settings: missing
/// cameras, reduced frame rates, unsynchronized cameras and random camera
/// outages. Every transform is pure, deterministic under its seed, and never
/// touches the holdout camera.

#pragma once

#include "graphixs/types.hpp"

#include <cstdint>
#include <string>

namespace graphixs {

enum class DegradationKind { SparseViews, SparseFrames, Unsync, Faulty };

struct DegradationSpec {
    DegradationKind kind = DegradationKind::SparseViews;
    double fraction = 0.0;        // cameras affected
    double target_fps = 30.0;     // frame-rate changes
    double target_sparsity = 0.0; // Faulty, in [0, 0.9]
    std::uint64_t seed = 0;

    std::string to_string() const;
};

DegradationSpec degradation_from_string(const std::string& text);

/// Removes floor(fraction * non-holdout count) uniformly chosen training
/// cameras with all their frames.
DatasetManifest drop_cameras(const DatasetManifest& m, double fraction,
                             std::uint64_t seed);

/// For each affected camera keeps, per target timestamp k/target_fps, the
/// nearest source frame (ties resolve to the earlier frame), deduplicated.
/// An empty camera list means every camera.
DatasetManifest downsample_fps(const DatasetManifest& m, double target_fps,
                               const std::vector<int>& camera_ids = {});

/// Downsamples exactly floor(fraction * non-holdout count) seeded-uniformly
/// chosen cameras; the rest are untouched.
DatasetManifest unsync_cameras(const DatasetManifest& m, double fraction,
                               double target_fps, std::uint64_t seed);

/// Samples per-camera outage intervals (uniform start, geometric duration
/// with mean 10% of the video, occasional full-camera failure) until the
/// realized training-frame sparsity is within +-0.01 of the target.
DatasetManifest faulty_cameras(const DatasetManifest& m, double target_sparsity,
                               std::uint64_t seed);

/// 1 - degraded training frames / reference training frames; holdout frames
/// excluded on both sides. Throws if degraded is not a subset of reference.
double realized_sparsity(const DatasetManifest& degraded,
                         const DatasetManifest& reference);

DatasetManifest apply_degradation(const DatasetManifest& m, const DegradationSpec& spec);

} // namespace graphixs
