/// @file synth.hpp
/// @brief Synthetic ground-truth scenes and rendered multi-view datasets:
/// component sets sampled in a unit box, hemisphere camera rigs, and frame
/// sequences written through the standard persistence formats, so every
/// experiment is closed-loop verifiable.

#pragma once

#include "graphixs/optimizer.hpp"
#include "graphixs/types.hpp"

#include <json.hpp>

#include <string>

namespace graphixs {

enum class MotionProfile { Static, Linear, Quartic, Mixed };

std::string to_string(MotionProfile profile);
MotionProfile motion_profile_from_string(const std::string& s);

struct SceneSpec {
    int n_components = 30;
    MotionProfile motion = MotionProfile::Mixed;
    int sh_degree = 1;          // color richness
    int n_cameras = 9;          // hemisphere placements; camera 0 is the holdout
    double camera_radius = 3.0;
    double duration = 1.0;
    double fps = 20.0;
    int n_frames = 20;          // per camera
    int image_size = 32;        // square images
    std::uint64_t seed = 1;
    KernelKind kernel_kind = KernelKind::Gaussian;
};

nlohmann::json scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const nlohmann::json& doc);

struct SynthResult {
    ComponentSet set;
    DatasetManifest manifest;
    std::vector<Image> images; // aligned with manifest.frames, 8-bit quantized
};

/// Samples ground-truth components, places cameras on a hemisphere looking
/// at the box center, renders every (camera, timestamp) frame and quantizes
/// to the 8-bit grid. Deterministic under the spec seed.
SynthResult synth_scene(const SceneSpec& spec, const RenderConfig& cfg = {});

/// Writes scene.json, manifest.json and images/ under out_dir.
void write_synth_result(const SynthResult& result, const SceneSpec& spec,
                        const std::string& out_dir);

} // namespace graphixs
