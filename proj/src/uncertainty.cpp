#include "graphixs/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace graphixs {

namespace {

std::vector<int> non_holdout_ids(const DatasetManifest& m) {
    std::vector<int> ids;
    for (const auto& cam : m.cameras)
        if (!cam.is_holdout) ids.push_back(cam.id);
    return ids;
}

// floor(fraction * count) distinct training cameras, seeded.
std::vector<int> pick_cameras(const DatasetManifest& m, double fraction,
                              std::uint64_t seed) {
    std::vector<int> pool = non_holdout_ids(m);
    const std::size_t k =
        static_cast<std::size_t>(fraction * static_cast<double>(pool.size()));
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k && i < pool.size(); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(std::min(k, pool.size()));
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace

std::string DegradationSpec::to_string() const {
    std::ostringstream out;
    switch (kind) {
    case DegradationKind::SparseViews:
        out << "sparse-views fraction=" << fraction << " seed=" << seed;
        break;
    case DegradationKind::SparseFrames:
        out << "sparse-frames target_fps=" << target_fps;
        break;
    case DegradationKind::Unsync:
        out << "unsync fraction=" << fraction << " target_fps=" << target_fps
            << " seed=" << seed;
        break;
    case DegradationKind::Faulty:
        out << "faulty target_sparsity=" << target_sparsity << " seed=" << seed;
        break;
    }
    return out.str();
}

DegradationSpec degradation_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string kind;
    in >> kind;
    DegradationSpec spec;
    if (kind == "sparse-views") spec.kind = DegradationKind::SparseViews;
    else if (kind == "sparse-frames") spec.kind = DegradationKind::SparseFrames;
    else if (kind == "unsync") spec.kind = DegradationKind::Unsync;
    else if (kind == "faulty") spec.kind = DegradationKind::Faulty;
    else throw std::invalid_argument("unknown degradation kind: " + kind);

    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const double value = std::stod(token.substr(eq + 1));
        if (key == "fraction") spec.fraction = value;
        else if (key == "target_fps") spec.target_fps = value;
        else if (key == "target_sparsity") spec.target_sparsity = value;
        else if (key == "seed") spec.seed = static_cast<std::uint64_t>(value);
    }
    return spec;
}

DatasetManifest drop_cameras(const DatasetManifest& m, double fraction,
                             std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0)
        throw std::invalid_argument("drop_cameras: fraction must be in [0, 1)");

    const std::vector<int> removed = pick_cameras(m, fraction, seed);
    const std::set<int> removed_set(removed.begin(), removed.end());
    if (removed_set.size() >= non_holdout_ids(m).size())
        throw std::invalid_argument("drop_cameras: would remove every training camera");

    DatasetManifest out = m;
    out.cameras.clear();
    for (const auto& cam : m.cameras)
        if (!removed_set.count(cam.id)) out.cameras.push_back(cam);
    out.frames.clear();
    for (const auto& f : m.frames)
        if (!removed_set.count(f.camera_id)) out.frames.push_back(f);

    DegradationSpec spec;
    spec.kind = DegradationKind::SparseViews;
    spec.fraction = fraction;
    spec.seed = seed;
    out.degradation_chain.push_back(spec.to_string());
    return out;
}

DatasetManifest downsample_fps(const DatasetManifest& m, double target_fps,
                               const std::vector<int>& camera_ids) {
    if (!(target_fps > 0.0))
        throw std::invalid_argument("downsample_fps: target_fps must be > 0");

    const std::set<int> affected(camera_ids.begin(), camera_ids.end());
    auto is_affected = [&](int id) { return affected.empty() || affected.count(id); };

    DatasetManifest out = m;
    out.frames.clear();
    for (auto& cam : out.cameras) {
        std::vector<const FrameObservation*> source;
        for (const auto& f : m.frames)
            if (f.camera_id == cam.id) source.push_back(&f);

        // equal rates are the identity, which also makes repeated
        // applications of the same target idempotent
        if (!is_affected(cam.id) || cam.is_holdout || source.empty() ||
            target_fps == cam.fps) {
            for (const auto* f : source) out.frames.push_back(*f);
            continue;
        }
        if (target_fps > cam.fps)
            throw std::invalid_argument("downsample_fps: target above source fps");

        // source frames are already time-sorted within a camera
        const double last_ts = source.back()->timestamp;
        std::set<std::size_t> kept;
        for (int k = 0;; ++k) {
            const double target_ts = k / target_fps;
            if (target_ts > last_ts + 1e-12) break;
            std::size_t best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < source.size(); ++i) {
                const double dist = std::abs(source[i]->timestamp - target_ts);
                // strict improvement keeps the earlier frame on ties
                if (dist < best_dist - 1e-12) {
                    best_dist = dist;
                    best = i;
                }
            }
            kept.insert(best);
        }
        for (std::size_t i : kept) out.frames.push_back(*source[i]);
        cam.fps = target_fps;
    }
    out.sort_frames();

    DegradationSpec spec;
    spec.kind = DegradationKind::SparseFrames;
    spec.target_fps = target_fps;
    out.degradation_chain.push_back(spec.to_string());
    return out;
}

DatasetManifest unsync_cameras(const DatasetManifest& m, double fraction,
                               double target_fps, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("unsync_cameras: fraction must be in [0, 1]");

    const std::vector<int> selected = pick_cameras(m, fraction, seed);
    DatasetManifest out = selected.empty() ? m : downsample_fps(m, target_fps, selected);
    if (!selected.empty() && !out.degradation_chain.empty())
        out.degradation_chain.pop_back(); // replace the downsample entry

    DegradationSpec spec;
    spec.kind = DegradationKind::Unsync;
    spec.fraction = fraction;
    spec.target_fps = target_fps;
    spec.seed = seed;
    out.degradation_chain.push_back(spec.to_string());
    return out;
}

DatasetManifest faulty_cameras(const DatasetManifest& m, double target_sparsity,
                               std::uint64_t seed) {
    if (target_sparsity < 0.0 || target_sparsity > 0.9)
        throw std::invalid_argument("faulty_cameras: target_sparsity must be in [0, 0.9]");

    DatasetManifest out = m;
    DegradationSpec spec;
    spec.kind = DegradationKind::Faulty;
    spec.target_sparsity = target_sparsity;
    spec.seed = seed;

    const std::size_t reference_count = m.training_frame_count();
    if (reference_count == 0 || target_sparsity == 0.0) {
        out.degradation_chain.push_back(spec.to_string());
        return out;
    }

    const std::vector<int> cams = non_holdout_ids(m);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_cam(0, cams.size() - 1);

    const double band = 0.01;
    const std::size_t low_target = static_cast<std::size_t>(
        std::ceil((target_sparsity - band) * static_cast<double>(reference_count)));
    const std::size_t high_target = static_cast<std::size_t>(
        std::floor((target_sparsity + band) * static_cast<double>(reference_count)));
    if (low_target > high_target)
        throw std::runtime_error("faulty_cameras: sparsity band narrower than one frame");

    std::size_t removed = 0;
    int attempts = 0;
    const int max_attempts = 100000;
    while (removed < low_target) {
        if (++attempts > max_attempts)
            throw std::runtime_error("faulty_cameras: target unreachable within iteration cap");

        const int cam_id = cams[pick_cam(rng)];
        double start = unit(rng) * m.duration;
        // geometric-style duration with mean 10% of the video; occasionally a
        // full-camera failure
        double length = -0.1 * m.duration * std::log(std::max(unit(rng), 1e-12));
        if (unit(rng) < 0.05) {
            start = 0.0;
            length = m.duration + 1.0;
        }
        const double end = start + length;

        // drop the camera's frames inside [start, end), truncated so the
        // overall removal never overshoots the band
        for (auto it = out.frames.begin(); it != out.frames.end() && removed < high_target;) {
            if (it->camera_id == cam_id && it->timestamp >= start && it->timestamp < end) {
                it = out.frames.erase(it);
                ++removed;
            } else {
                ++it;
            }
        }
    }

    out.degradation_chain.push_back(spec.to_string());
    return out;
}

double realized_sparsity(const DatasetManifest& degraded,
                         const DatasetManifest& reference) {
    std::set<std::pair<int, double>> reference_frames;
    for (const auto& f : reference.frames) {
        const CameraModel* cam = reference.find_camera(f.camera_id);
        if (cam && !cam->is_holdout) reference_frames.insert({f.camera_id, f.timestamp});
    }

    std::size_t degraded_count = 0;
    for (const auto& f : degraded.frames) {
        const CameraModel* cam = degraded.find_camera(f.camera_id);
        if (!cam || cam->is_holdout) continue;
        if (!reference_frames.count({f.camera_id, f.timestamp}))
            throw std::invalid_argument(
                "realized_sparsity: degraded manifest holds a frame absent from reference");
        ++degraded_count;
    }

    if (reference_frames.empty()) return 0.0;
    return 1.0 - static_cast<double>(degraded_count) /
                     static_cast<double>(reference_frames.size());
}

DatasetManifest apply_degradation(const DatasetManifest& m, const DegradationSpec& spec) {
    switch (spec.kind) {
    case DegradationKind::SparseViews:
        return drop_cameras(m, spec.fraction, spec.seed);
    case DegradationKind::SparseFrames:
        return downsample_fps(m, spec.target_fps);
    case DegradationKind::Unsync:
        return unsync_cameras(m, spec.fraction, spec.target_fps, spec.seed);
    case DegradationKind::Faulty:
        return faulty_cameras(m, spec.target_sparsity, spec.seed);
    }
    throw std::logic_error("apply_degradation: unknown kind");
}

} // namespace graphixs
