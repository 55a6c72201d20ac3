/// @file renderer.hpp
/// @brief Deterministic realization of the generative steps: ray casting,
/// per-image culling, per-pixel intersection, front-to-back compositing.
///
/// Two forward paths produce identical images: a tiled rasterizer and a
/// brute-force per-pixel loop kept as a verification oracle. The backward
/// pass recomputes per-pixel contributor lists and chains analytic partials
/// through compositing, splat response, projection, the motion polynomial
/// and the factored covariance.

#pragma once

#include "graphixs/kernels.hpp"
#include "graphixs/types.hpp"

#include <vector>

namespace graphixs {

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 dir = Vec3::UnitZ(); // unit norm
    int camera_id = 0;
    int px = 0, py = 0;
    double t = 0.0;
};

/// Per-component partials of a scalar loss w.r.t. every component field.
struct ComponentGrad {
    Vec3 mu = Vec3::Zero();
    Vec4 rot = Vec4::Zero();
    Vec3 log_scale = Vec3::Zero();
    double opacity_logit = 0.0;
    std::vector<Vec3> sh;
    double g = 0.0;
    double u = 0.0;
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();
    Vec3 j = Vec3::Zero();
    Vec3 s = Vec3::Zero();
    double nu = 0.0;
};

struct GradientRecord {
    std::vector<ComponentGrad> comps;

    GradientRecord() = default;
    explicit GradientRecord(const ComponentSet& set);

    void add(const GradientRecord& other);
    void scale(double f);
    bool all_finite() const;
    /// L2 norm over every partial of one component.
    double magnitude(std::size_t index) const;
};

Ray cast_ray(const CameraModel& cam, int px, int py, double t);

/// The per-image subset {alpha_i}: components whose projection survives
/// culling and whose alpha-cutoff level set touches the image rectangle.
/// component_index is filled with the source index into the set.
std::vector<Splat2D> cull_per_image(const ComponentSet& set, const CameraModel& cam,
                                    double t, const RenderConfig& cfg);

/// The per-pixel subset {beta_j}: splats with eff_opacity * response >=
/// alpha_cutoff at the pixel center, sorted by ascending depth, ties broken
/// by ascending component_index.
std::vector<Splat2D> intersect_per_pixel(const std::vector<Splat2D>& splats,
                                         const Vec2& pixel, KernelKind kind,
                                         const ComponentSet& set,
                                         const RenderConfig& cfg);

struct CompositeEntry {
    double response = 0.0;
    Vec3 color = Vec3::Zero();
    double eff_opacity = 0.0;
};

struct CompositeResult {
    Vec3 rgb = Vec3::Zero();
    double transmittance = 1.0;
};

/// Front-to-back alpha compositing with alpha_i = min(eff*response, 0.999)
/// and early stop below transmittance 1e-4. Entries must be depth-sorted.
CompositeResult composite(const std::vector<CompositeEntry>& ordered);

Image render_image(const ComponentSet& set, const CameraModel& cam, double t,
                   const RenderConfig& cfg);

/// Oracle: per-pixel direct loop over all components, no tiling, no screen
/// culling. Same per-pixel math as the tiled path.
Image render_image_bruteforce(const ComponentSet& set, const CameraModel& cam,
                              double t, const RenderConfig& cfg);

/// Gradient of sum_pixels <upstream, rendered> w.r.t. every component field.
/// Culled and non-contributing components receive exactly zero gradient.
GradientRecord render_backward(const ComponentSet& set, const CameraModel& cam,
                               double t, const Image& upstream,
                               const RenderConfig& cfg);

} // namespace graphixs
