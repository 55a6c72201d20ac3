#include "graphixs/synth.hpp"

#include "graphixs/io.hpp"
#include "graphixs/renderer.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace graphixs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kSH0 = 0.28209479177387814;
constexpr double kGoldenAngle = 2.399963229728653;

Vec4 random_unit_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec4 q(unit(rng), unit(rng), unit(rng), unit(rng));
    return q / q.norm();
}

CameraModel make_camera(int id, const Vec3& eye, int image_size, bool holdout) {
    CameraModel cam;
    cam.id = id;
    cam.width = cam.height = image_size;
    cam.fx = cam.fy = 1.5 * image_size;
    cam.cx = cam.cy = image_size / 2.0;
    cam.is_holdout = holdout;

    // look-at the origin, x right, y down, z forward
    const Vec3 forward = (-eye).normalized();
    Vec3 right = Vec3(0.0, 0.0, 1.0).cross(forward);
    if (right.norm() < 1e-9) right = Vec3(1.0, 0.0, 0.0);
    right.normalize();
    const Vec3 down = forward.cross(right);

    cam.rotation.row(0) = right;
    cam.rotation.row(1) = down;
    cam.rotation.row(2) = forward;
    cam.translation = -cam.rotation * eye;
    return cam;
}

} // namespace

std::string to_string(MotionProfile profile) {
    switch (profile) {
    case MotionProfile::Static: return "static";
    case MotionProfile::Linear: return "linear";
    case MotionProfile::Quartic: return "quartic";
    case MotionProfile::Mixed: return "mixed";
    }
    return "mixed";
}

MotionProfile motion_profile_from_string(const std::string& s) {
    if (s == "static") return MotionProfile::Static;
    if (s == "linear") return MotionProfile::Linear;
    if (s == "quartic") return MotionProfile::Quartic;
    if (s == "mixed") return MotionProfile::Mixed;
    throw std::invalid_argument("unknown motion profile: " + s);
}

json scene_spec_to_json(const SceneSpec& spec) {
    json doc;
    doc["n_components"] = spec.n_components;
    doc["motion"] = to_string(spec.motion);
    doc["sh_degree"] = spec.sh_degree;
    doc["n_cameras"] = spec.n_cameras;
    doc["camera_radius"] = spec.camera_radius;
    doc["duration"] = spec.duration;
    doc["fps"] = spec.fps;
    doc["n_frames"] = spec.n_frames;
    doc["image_size"] = spec.image_size;
    doc["seed"] = spec.seed;
    doc["kernel"] = to_string(spec.kernel_kind);
    return doc;
}

SceneSpec scene_spec_from_json(const json& doc) {
    SceneSpec spec;
    spec.n_components = doc.value("n_components", spec.n_components);
    if (doc.contains("motion")) spec.motion = motion_profile_from_string(doc["motion"]);
    spec.sh_degree = doc.value("sh_degree", spec.sh_degree);
    spec.n_cameras = doc.value("n_cameras", spec.n_cameras);
    spec.camera_radius = doc.value("camera_radius", spec.camera_radius);
    spec.duration = doc.value("duration", spec.duration);
    spec.fps = doc.value("fps", spec.fps);
    spec.n_frames = doc.value("n_frames", spec.n_frames);
    spec.image_size = doc.value("image_size", spec.image_size);
    spec.seed = doc.value("seed", spec.seed);
    if (doc.contains("kernel")) spec.kernel_kind = kernel_kind_from_string(doc["kernel"]);
    return spec;
}

SynthResult synth_scene(const SceneSpec& spec, const RenderConfig& cfg) {
    if (spec.n_components < 1 || spec.n_cameras < 2 || spec.n_frames < 1 ||
        spec.image_size < 2 || !(spec.duration > 0.0) || !(spec.fps > 0.0))
        throw std::invalid_argument("synth_scene: invalid spec");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const double duration =
        std::max(spec.duration, (spec.n_frames - 1) / spec.fps);

    SynthResult result;
    result.set.kernel_kind = spec.kernel_kind;
    result.set.sh_degree = spec.sh_degree;

    for (int i = 0; i < spec.n_components; ++i) {
        Component c;
        c.mu = Vec3(uniform(-0.5, 0.5), uniform(-0.5, 0.5), uniform(-0.5, 0.5));
        c.rot = random_unit_quat(rng);

        const bool background =
            spec.motion == MotionProfile::Mixed && unit(rng) < 0.7;
        const bool mover = !background && spec.motion != MotionProfile::Static;

        if (background) {
            c.log_scale = Vec3::Constant(std::log(uniform(0.25, 0.45)));
            c.g = duration / 2.0;
            c.u = 10.0 * duration;
        } else {
            c.log_scale = Vec3::Constant(std::log(uniform(0.05, 0.15)));
            c.g = uniform(0.0, duration);
            c.u = uniform(0.75, 1.5) * duration;
        }

        if (mover) {
            const bool quartic = spec.motion == MotionProfile::Quartic ||
                                 spec.motion == MotionProfile::Mixed;
            for (int k = 0; k < 3; ++k) c.v[k] = uniform(-0.15, 0.15);
            if (quartic) {
                // acceleration-dominated arcs: smooth but clearly curved, so
                // linear motion models misfit them
                for (int k = 0; k < 3; ++k) {
                    c.a[k] = uniform(-1.0, 1.0);
                    c.j[k] = uniform(-1.0, 1.0);
                    c.s[k] = uniform(-1.5, 1.5);
                }
            }
        }

        c.opacity_logit = logit(uniform(0.55, 0.95));
        c.sh.assign(static_cast<std::size_t>(result.set.sh_coeff_count()), Vec3::Zero());
        const Vec3 color(uniform(0.15, 0.85), uniform(0.15, 0.85), uniform(0.15, 0.85));
        c.sh[0] = (color - Vec3::Constant(0.5)) / kSH0;
        for (std::size_t k = 1; k < c.sh.size(); ++k)
            c.sh[k] = Vec3(uniform(-0.08, 0.08), uniform(-0.08, 0.08), uniform(-0.08, 0.08));

        c.nu = spec.kernel_kind == KernelKind::StudentT ? 4.0 : 1e6;
        result.set.components.push_back(std::move(c));
    }

    // hemisphere rig; camera 0 is the held-out test view
    result.manifest.duration = duration;
    result.manifest.nominal_fps = spec.fps;
    for (int i = 0; i < spec.n_cameras; ++i) {
        const double frac = (i + 0.5) / spec.n_cameras;
        const double z = spec.camera_radius * (0.2 + 0.55 * frac);
        const double rho = std::sqrt(spec.camera_radius * spec.camera_radius - z * z);
        const double phi = i * kGoldenAngle;
        const Vec3 eye(rho * std::cos(phi), rho * std::sin(phi), z);
        CameraModel cam = make_camera(i, eye, spec.image_size, i == 0);
        cam.fps = spec.fps;
        result.manifest.cameras.push_back(cam);
    }

    for (const auto& cam : result.manifest.cameras)
        for (int k = 0; k < spec.n_frames; ++k) {
            FrameObservation f;
            f.camera_id = cam.id;
            f.timestamp = k / spec.fps;
            std::ostringstream name;
            name << "images/cam" << std::setw(3) << std::setfill('0') << cam.id << "_f"
                 << std::setw(3) << std::setfill('0') << k << ".ppm";
            f.image_path = name.str();
            result.manifest.frames.push_back(f);
        }
    result.manifest.sort_frames();

    result.images.reserve(result.manifest.frames.size());
    for (const auto& f : result.manifest.frames) {
        const CameraModel* cam = result.manifest.find_camera(f.camera_id);
        result.images.push_back(
            quantize_8bit(render_image(result.set, *cam, f.timestamp, cfg)));
    }
    return result;
}

void write_synth_result(const SynthResult& result, const SceneSpec& spec,
                        const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "images");

    Provenance prov;
    prov["scene_spec"] = scene_spec_to_json(spec);

    save_scene(result.set, (fs::path(out_dir) / "scene.json").string(), prov);

    DatasetManifest manifest = result.manifest;
    manifest.base_dir = out_dir; // paths already relative to out_dir
    for (std::size_t i = 0; i < manifest.frames.size(); ++i)
        save_ppm(result.images[i],
                 (fs::path(out_dir) / manifest.frames[i].image_path).string());
    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string(), prov);
}

} // namespace graphixs
