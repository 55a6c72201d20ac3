/// @file io.hpp
/// @brief Persistence for scenes, manifests and images.
///
/// Scenes and manifests are JSON documents; reals round-trip at full double
/// precision. Images interchange as binary PPM (P6), 8-bit RGB; all internal
/// math stays on [0,1] reals and quantization happens only at the file
/// boundary.

#pragma once

#include "graphixs/types.hpp"

#include <json.hpp>

#include <string>

namespace graphixs {

/// Free-form provenance attached to saved artifacts: the config and seed
/// that produced them.
using Provenance = nlohmann::json;

nlohmann::json scene_to_json(const ComponentSet& set,
                             const Provenance& provenance = {});
ComponentSet scene_from_json(const nlohmann::json& doc);

void save_scene(const ComponentSet& set, const std::string& path,
                const Provenance& provenance = {});
ComponentSet load_scene(const std::string& path);
Provenance load_scene_provenance(const std::string& path);

nlohmann::json manifest_to_json(const DatasetManifest& m,
                                const Provenance& provenance = {});
DatasetManifest manifest_from_json(const nlohmann::json& doc);

/// Frame image paths are stored relative to the manifest file; save rewrites
/// them against the new location, load records base_dir for resolution.
void save_manifest(const DatasetManifest& m, const std::string& path,
                   const Provenance& provenance = {});
DatasetManifest load_manifest(const std::string& path);

/// Resolves a frame's image path against the manifest's base directory.
std::string resolve_image_path(const DatasetManifest& m, const FrameObservation& f);
Image load_frame_image(const DatasetManifest& m, const FrameObservation& f);

void save_ppm(const Image& img, const std::string& path);
Image load_ppm(const std::string& path);

/// Quantizes channels to the 8-bit grid: round(clamp(v,0,1)*255)/255.
Image quantize_8bit(const Image& img);

/// FNV-1a over a string; used for result caching keyed on configs.
std::uint64_t content_hash(const std::string& text);

} // namespace graphixs
