#include "graphixs/types.hpp"

#include "graphixs/dynamics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace graphixs {

std::string to_string(KernelKind kind) {
    return kind == KernelKind::Gaussian ? "gaussian" : "student-t";
}

KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "gaussian") return KernelKind::Gaussian;
    if (s == "student-t" || s == "student_t" || s == "studentt")
        return KernelKind::StudentT;
    throw std::invalid_argument("unknown kernel kind: " + s);
}

const CameraModel* DatasetManifest::find_camera(int id) const {
    for (const auto& cam : cameras)
        if (cam.id == id) return &cam;
    return nullptr;
}

const CameraModel& DatasetManifest::holdout_camera() const {
    for (const auto& cam : cameras)
        if (cam.is_holdout) return cam;
    throw std::runtime_error("manifest has no holdout camera");
}

std::size_t DatasetManifest::training_frame_count() const {
    std::size_t n = 0;
    for (const auto& f : frames) {
        const CameraModel* cam = find_camera(f.camera_id);
        if (cam && !cam->is_holdout) ++n;
    }
    return n;
}

void DatasetManifest::sort_frames() {
    std::sort(frames.begin(), frames.end(),
              [](const FrameObservation& a, const FrameObservation& b) {
                  if (a.camera_id != b.camera_id) return a.camera_id < b.camera_id;
                  return a.timestamp < b.timestamp;
              });
}

std::vector<std::string> validate_component(const Component& c,
                                            const ValidationLimits& limits) {
    std::vector<std::string> violations;

    const double rot_norm = c.rot.norm();
    if (std::abs(rot_norm - 1.0) > 1e-9)
        violations.push_back("rot must be unit");

    if (!(c.u > 0.0))
        violations.push_back("u must be > 0");

    for (int k = 0; k < 3; ++k) {
        const double s = std::exp(c.log_scale[k]);
        if (!(s >= limits.min_scale))
            violations.push_back("scale axis " + std::to_string(k) +
                                 " below floor " + std::to_string(limits.min_scale));
        if (!(s <= limits.max_scale))
            violations.push_back("scale axis " + std::to_string(k) +
                                 " above bound " + std::to_string(limits.max_scale));
    }

    if (!(c.nu >= 0.5))
        violations.push_back("nu must be >= 0.5");

    auto check_finite = [&](const Vec3& v, const char* name) {
        if (!v.allFinite()) violations.push_back(std::string(name) + " must be finite");
    };
    check_finite(c.mu, "mu");
    check_finite(c.v, "v");
    check_finite(c.a, "a");
    check_finite(c.j, "j");
    check_finite(c.s, "s");
    if (!std::isfinite(c.opacity_logit)) violations.push_back("opacity_logit must be finite");
    if (!std::isfinite(c.g)) violations.push_back("g must be finite");
    for (const auto& coeff : c.sh)
        if (!coeff.allFinite()) {
            violations.push_back("sh must be finite");
            break;
        }

    return violations;
}

std::vector<std::string> validate_manifest(const DatasetManifest& m) {
    std::vector<std::string> violations;

    int holdouts = 0;
    std::set<int> ids;
    for (const auto& cam : m.cameras) {
        if (cam.is_holdout) ++holdouts;
        if (!ids.insert(cam.id).second)
            violations.push_back("duplicate camera id " + std::to_string(cam.id));
        if (!(cam.fx > 0.0 && cam.fy > 0.0))
            violations.push_back("camera " + std::to_string(cam.id) + ": fx, fy must be > 0");
        if (!(cam.cx >= 0.0 && cam.cx < cam.width && cam.cy >= 0.0 && cam.cy < cam.height))
            violations.push_back("camera " + std::to_string(cam.id) +
                                 ": principal point outside image");
    }
    if (holdouts != 1)
        violations.push_back("manifest must have exactly one holdout camera, found " +
                             std::to_string(holdouts));

    for (std::size_t i = 0; i < m.frames.size(); ++i) {
        const auto& f = m.frames[i];
        if (!ids.count(f.camera_id))
            violations.push_back("frame " + std::to_string(i) +
                                 " references missing camera " + std::to_string(f.camera_id));
        if (f.timestamp < 0.0 || f.timestamp > m.duration)
            violations.push_back("frame " + std::to_string(i) + " timestamp outside [0, duration]");
        if (i > 0) {
            const auto& p = m.frames[i - 1];
            if (p.camera_id > f.camera_id ||
                (p.camera_id == f.camera_id && p.timestamp > f.timestamp))
                violations.push_back("frames not sorted by (camera id, timestamp) at index " +
                                     std::to_string(i));
        }
    }

    return violations;
}

Box3 scene_bounds(const ComponentSet& set, const std::vector<double>& times) {
    if (set.components.empty())
        throw std::invalid_argument("scene_bounds: empty component set");
    if (times.empty())
        throw std::invalid_argument("scene_bounds: empty time list");

    Box3 box;
    box.min = Vec3::Constant(std::numeric_limits<double>::infinity());
    box.max = -box.min;

    double max_scale = 0.0;
    for (const auto& c : set.components) {
        max_scale = std::max(max_scale, c.scale().maxCoeff());
        for (double t : times) {
            const Vec3 p = mean_at_time(c, t);
            box.min = box.min.cwiseMin(p);
            box.max = box.max.cwiseMax(p);
        }
    }
    box.min -= Vec3::Constant(3.0 * max_scale);
    box.max += Vec3::Constant(3.0 * max_scale);
    return box;
}

} // namespace graphixs
