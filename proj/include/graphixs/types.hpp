/// @file types.hpp
/// @brief Core domain types shared by every module: splat components,
/// cameras, dataset manifests and images.
///
/// All types are plain value data. Once constructed they are safe to share
/// read-only across threads; mutation happens only inside the optimizer's
/// single-writer phase.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace graphixs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

enum class KernelKind { Gaussian, StudentT };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// One splat primitive. The covariance is stored factored as a unit
/// quaternion plus per-axis log standard deviations, so positive
/// definiteness holds by construction. Base opacity is stored as a logit,
/// keeping o in (0,1) without clamping.
struct Component {
    Vec3 mu = Vec3::Zero();             // spatial mean at the temporal anchor
    Vec4 rot{1.0, 0.0, 0.0, 0.0};       // unit quaternion (w,x,y,z)
    Vec3 log_scale = Vec3::Constant(std::log(0.1));
    double opacity_logit = 0.0;         // o = logistic(opacity_logit)
    std::vector<Vec3> sh{Vec3::Zero()}; // (degree+1)^2 RGB coefficient triples
    double g = 0.0;                     // appearance time, seconds
    double u = 1.0;                     // duration, seconds, > 0
    Vec3 v = Vec3::Zero();              // velocity
    Vec3 a = Vec3::Zero();              // acceleration
    Vec3 j = Vec3::Zero();              // jerk
    Vec3 s = Vec3::Zero();              // snap
    double nu = 1e6;                    // Student's-t control parameter

    double opacity() const { return logistic(opacity_logit); }
    Vec3 scale() const { return log_scale.array().exp().matrix(); }
};

struct ComponentSet {
    std::vector<Component> components;
    KernelKind kernel_kind = KernelKind::Gaussian;
    int sh_degree = 0; // 0..3

    std::size_t size() const { return components.size(); }
    int sh_coeff_count() const { return (sh_degree + 1) * (sh_degree + 1); }
};

/// Pinhole camera with a rigid world-to-camera pose: x_cam = R * x_world + t.
struct CameraModel {
    int id = 0;
    double fx = 1.0, fy = 1.0; // focal lengths, pixels
    double cx = 0.0, cy = 0.0; // principal point, pixels
    int width = 0, height = 0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    double fps = 30.0;
    bool is_holdout = false;

    Vec3 center() const { return -rotation.transpose() * translation; }
};

/// H x W x 3 buffer of reals in [0,1], row-major, channel-interleaved.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // size width*height*3

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    double& at(int x, int y, int ch) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
    }
    double at(int x, int y, int ch) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
    }
    bool same_size(const Image& other) const {
        return width == other.width && height == other.height;
    }
};

struct FrameObservation {
    int camera_id = 0;
    double timestamp = 0.0;
    std::string image_path; // relative to the manifest file
};

/// Everything a training or evaluation run consumes: cameras, frame
/// observations (sorted by camera id, then timestamp) and the degradation
/// chain that produced this manifest from its ancestor, if any.
struct DatasetManifest {
    std::vector<CameraModel> cameras;
    std::vector<FrameObservation> frames;
    double duration = 1.0;
    double nominal_fps = 30.0;
    std::vector<std::string> degradation_chain; // provenance, one entry per op
    std::string base_dir; // directory the manifest was loaded from

    const CameraModel* find_camera(int id) const;
    const CameraModel& holdout_camera() const;
    std::size_t training_frame_count() const;
    void sort_frames();
};

/// Bounds used by validate_component. Defaults are permissive; the optimizer
/// narrows max_scale to the scene diagonal.
struct ValidationLimits {
    double min_scale = 1e-6;
    double max_scale = 1e9;
};

/// Returns one human-readable string per violated invariant; empty means the
/// component is valid. Violations are data, not failures.
std::vector<std::string> validate_component(const Component& c,
                                            const ValidationLimits& limits = {});

std::vector<std::string> validate_manifest(const DatasetManifest& m);

struct Box3 {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
};

/// Axis-aligned box containing every component mean evaluated at every given
/// time, inflated by 3x the largest axis scale in the set. Throws on an
/// empty time list or empty set.
Box3 scene_bounds(const ComponentSet& set, const std::vector<double>& times);

} // namespace graphixs
