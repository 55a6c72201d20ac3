#include "graphixs/objective.hpp"

#include "graphixs/dynamics.hpp"
#include "graphixs/io.hpp"
#include "graphixs/parallel.hpp"
#include "graphixs/ssim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphixs {

namespace {

constexpr double kConfFloor = 1e-12;
const double kGaussMass3 = std::pow(2.0 * M_PI, 1.5);

double digamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r -= 1.0 / x;
        x += 1.0;
    }
    const double f = 1.0 / (x * x);
    return r + std::log(x) - 0.5 / x -
           f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f / 132))));
}

// Mass of the unnormalized Student's-t splat relative to the Gaussian with
// the same covariance; -> 1 as nu -> infinity.
double student_t_mass_ratio(double nu) {
    return std::exp(std::lgamma(0.5 * nu) - std::lgamma(0.5 * (nu + 3.0)) +
                    1.5 * std::log(nu) - 1.5 * std::log(2.0));
}

double student_t_mass_ratio_dnu(double nu) {
    return student_t_mass_ratio(nu) *
           (0.5 * digamma(0.5 * nu) - 0.5 * digamma(0.5 * (nu + 3.0)) + 1.5 / nu);
}

// Stratified pixel coordinates: one column/row per grid cell, deduplicated
// when the image is smaller than the grid.
std::vector<int> grid_coords(int extent, int grid_n) {
    std::vector<int> coords;
    int last = -1;
    for (int i = 0; i < grid_n; ++i) {
        const int c = std::min(extent - 1, static_cast<int>((i + 0.5) * extent / grid_n));
        if (c != last) coords.push_back(c);
        last = c;
    }
    return coords;
}

struct VisibilityScene {
    // per component, time-invariant
    std::vector<Mat3> precision; // Sigma^{-1}
    // per (frame, component)
    std::vector<std::vector<Vec3>> mean_at;
    std::vector<std::vector<double>> eff_at;
};

VisibilityScene precompute_visibility(const ComponentSet& set,
                                      const std::vector<double>& frame_times) {
    VisibilityScene vs;
    const std::size_t n = set.components.size();
    vs.precision.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        const Component& c = set.components[p];
        const Mat3 r = rotation_from_quat(c.rot);
        const Vec3 inv_d = (-2.0 * c.log_scale).array().exp().matrix();
        vs.precision[p] = r * inv_d.asDiagonal() * r.transpose();
    }
    vs.mean_at.resize(frame_times.size(), std::vector<Vec3>(n));
    vs.eff_at.resize(frame_times.size(), std::vector<double>(n));
    for (std::size_t f = 0; f < frame_times.size(); ++f)
        for (std::size_t p = 0; p < n; ++p) {
            vs.mean_at[f][p] = mean_at_time(set.components[p], frame_times[f]);
            vs.eff_at[f][p] = temporal_opacity(set.components[p], frame_times[f]);
        }
    return vs;
}

struct RaySample {
    Vec3 origin;
    Vec3 dir;
    std::size_t frame_slot; // index into the precomputed frame tables
};

// All stratified rays over the training frames of the manifest, with the
// matching frame timestamps.
void build_ray_set(const DatasetManifest& manifest, const ConfidenceSpec& spec,
                   std::vector<RaySample>& rays, std::vector<double>& frame_times) {
    rays.clear();
    frame_times.clear();
    for (const auto& frame : manifest.frames) {
        const CameraModel* cam = manifest.find_camera(frame.camera_id);
        if (!cam || cam->is_holdout) continue;
        const std::size_t slot = frame_times.size();
        frame_times.push_back(frame.timestamp);
        const Vec3 origin = cam->center();
        const auto xs = grid_coords(cam->width, spec.grid_n);
        const auto ys = grid_coords(cam->height, spec.grid_n);
        for (int py : ys)
            for (int px : xs) {
                RaySample r;
                r.origin = origin;
                const Vec3 cam_dir((px + 0.5 - cam->cx) / cam->fx,
                                   (py + 0.5 - cam->cy) / cam->fy, 1.0);
                r.dir = (cam->rotation.transpose() * cam_dir).normalized();
                r.frame_slot = slot;
                rays.push_back(r);
            }
    }
}

struct RayVisibility {
    double value = 0.0;
    double msq = 0.0;
    double s_star = 0.0; // clamped line parameter of the closest point
    Vec3 r0 = Vec3::Zero();
};

RayVisibility ray_visibility(const Vec3& origin, const Vec3& dir, const Mat3& precision,
                             const Vec3& mean, double eff, KernelKind kind, double nu) {
    RayVisibility out;
    out.r0 = origin - mean;
    const Vec3 e = precision * out.r0;
    const double b = dir.dot(e);
    const double cc = dir.dot(precision * dir);
    double s = cc > 0.0 ? -b / cc : 0.0;
    if (s < 0.0) s = 0.0; // ray is a half-line
    out.s_star = s;
    const Vec3 closest = out.r0 + s * dir;
    out.msq = closest.dot(precision * closest);
    out.value = eff * kernel_response(kind, out.msq, nu, 3);
    return out;
}

} // namespace

double ssim_train(const Image& a, const Image& b) { return ssim(a, b); }

double eigen_reg(const ComponentSet& set, double /*t*/) {
    double sum = 0.0;
    for (const auto& c : set.components) sum += c.scale().sum();
    return sum;
}

ImageEnergy image_energy(const Image& rendered, const Image& gt,
                         const ComponentSet& set, double /*t*/, const LossWeights& w,
                         GradientRecord* grads) {
    if (!rendered.same_size(gt))
        throw std::invalid_argument("image_energy: dimension mismatch");

    ImageEnergy out;
    const double inv_count = 1.0 / static_cast<double>(rendered.pixels.size());

    Image ssim_grad;
    const double ssim_val = ssim_with_grad(rendered, gt, ssim_grad);
    out.dssim = 0.5 * (1.0 - ssim_val);

    out.pixel_grad = Image(rendered.width, rendered.height);
    double l1 = 0.0;
    for (std::size_t i = 0; i < rendered.pixels.size(); ++i) {
        const double diff = rendered.pixels[i] - gt.pixels[i];
        l1 += std::abs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        out.pixel_grad.pixels[i] = (1.0 - w.eps_dssim) * sign * inv_count +
                                   w.eps_dssim * (-0.5) * ssim_grad.pixels[i];
    }
    out.l1 = l1 * inv_count;

    for (std::size_t p = 0; p < set.components.size(); ++p) {
        const Component& c = set.components[p];
        const double o = c.opacity();
        out.opacity_reg += o;
        out.eigen_reg += c.scale().sum();
        if (grads) {
            grads->comps[p].opacity_logit += w.eps_o * o * (1.0 - o);
            grads->comps[p].log_scale += w.eps_sigma * c.scale();
        }
    }

    out.value = (1.0 - w.eps_dssim) * out.l1 + w.eps_dssim * out.dssim +
                w.eps_o * out.opacity_reg + w.eps_sigma * out.eigen_reg;
    return out;
}

double ray_min_mahalanobis_sq(const Ray& ray, const Component& c, double t) {
    const Mat3 r = rotation_from_quat(c.rot);
    const Vec3 inv_d = (-2.0 * c.log_scale).array().exp().matrix();
    const Mat3 precision = r * inv_d.asDiagonal() * r.transpose();
    return ray_visibility(ray.origin, ray.dir, precision, mean_at_time(c, t), 1.0,
                          KernelKind::Gaussian, c.nu)
        .msq;
}

double soft_visibility(const Ray& ray, const Component& c, double t, KernelKind kind) {
    const Mat3 r = rotation_from_quat(c.rot);
    const Vec3 inv_d = (-2.0 * c.log_scale).array().exp().matrix();
    const Mat3 precision = r * inv_d.asDiagonal() * r.transpose();
    return ray_visibility(ray.origin, ray.dir, precision, mean_at_time(c, t),
                          temporal_opacity(c, t), kind, c.nu)
        .value;
}

std::vector<double> component_confidence(const ComponentSet& set,
                                         const DatasetManifest& manifest,
                                         const ConfidenceSpec& spec) {
    if (set.components.empty())
        throw std::invalid_argument("component_confidence: empty set");

    std::vector<RaySample> rays;
    std::vector<double> frame_times;
    build_ray_set(manifest, spec, rays, frame_times);
    if (rays.empty())
        throw std::invalid_argument("component_confidence: manifest has no training rays");

    const VisibilityScene vs = precompute_visibility(set, frame_times);
    const std::size_t n = set.components.size();

    const int chunks = num_chunks(rays.size());
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(chunks),
                                             std::vector<double>(n, 0.0));
    parallel_chunks(rays.size(), [&](std::size_t begin, std::size_t end, int chunk) {
        auto& acc = partial[static_cast<std::size_t>(chunk)];
        for (std::size_t r = begin; r < end; ++r) {
            const RaySample& ray = rays[r];
            for (std::size_t p = 0; p < n; ++p)
                acc[p] += ray_visibility(ray.origin, ray.dir, vs.precision[p],
                                         vs.mean_at[ray.frame_slot][p],
                                         vs.eff_at[ray.frame_slot][p], set.kernel_kind,
                                         set.components[p].nu)
                              .value;
        }
    });

    std::vector<double> vis(n, 0.0);
    for (int c = 0; c < chunks; ++c)
        for (std::size_t p = 0; p < n; ++p) vis[p] += partial[static_cast<std::size_t>(c)][p];

    double total = 0.0;
    for (double v : vis) total += v;
    if (total <= 0.0)
        throw std::runtime_error(
            "component_confidence: degenerate scene, every component invisible");

    for (auto& v : vis) v /= total;
    return vis;
}

double confidence_energy(const std::vector<double>& conf, const LossWeights& w) {
    double sum = 0.0;
    for (double c : conf) sum -= std::log(std::max(c, kConfFloor));
    return w.eps_alpha * sum / static_cast<double>(conf.size());
}

double confidence_energy_with_grad(const ComponentSet& set,
                                   const DatasetManifest& manifest,
                                   const ConfidenceSpec& spec, double grad_scale,
                                   GradientRecord* grads) {
    std::vector<RaySample> rays;
    std::vector<double> frame_times;
    build_ray_set(manifest, spec, rays, frame_times);
    if (rays.empty())
        throw std::invalid_argument("confidence_energy: manifest has no training rays");

    const VisibilityScene vs = precompute_visibility(set, frame_times);
    const std::size_t n = set.components.size();

    // pass 1: per-component visibility sums
    std::vector<double> vis(n, 0.0);
    for (const RaySample& ray : rays)
        for (std::size_t p = 0; p < n; ++p)
            vis[p] += ray_visibility(ray.origin, ray.dir, vs.precision[p],
                                     vs.mean_at[ray.frame_slot][p],
                                     vs.eff_at[ray.frame_slot][p], set.kernel_kind,
                                     set.components[p].nu)
                          .value;

    double total = 0.0;
    for (double v : vis) total += v;
    if (total <= 0.0)
        throw std::runtime_error(
            "confidence_energy: degenerate scene, every component invisible");

    double energy = 0.0;
    std::vector<double> d_vis(n, 0.0); // dE_raw / dS_p
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double conf = vis[p] / total;
        energy -= std::log(std::max(conf, kConfFloor));
        d_vis[p] = (conf > kConfFloor ? -inv_n / vis[p] : 0.0) + 1.0 / total;
    }
    energy *= inv_n;

    if (!grads) return energy;

    // pass 2: chain d_vis through each (ray, component) soft visibility
    for (const RaySample& ray : rays) {
        for (std::size_t p = 0; p < n; ++p) {
            const Component& comp = set.components[p];
            const double t = frame_times[ray.frame_slot];
            const RayVisibility rv =
                ray_visibility(ray.origin, ray.dir, vs.precision[p],
                               vs.mean_at[ray.frame_slot][p], vs.eff_at[ray.frame_slot][p],
                               set.kernel_kind, comp.nu);
            const double d_v = grad_scale * d_vis[p];
            if (d_v == 0.0) continue;

            const double eff = vs.eff_at[ray.frame_slot][p];
            const double resp = kernel_response(set.kernel_kind, rv.msq, comp.nu, 3);

            ComponentGrad& out = grads->comps[p];
            accumulate_temporal_opacity_grad(comp, t, d_v * resp, out.opacity_logit,
                                             out.g, out.u);

            const double d_resp = d_v * eff;
            const double d_msq =
                d_resp * kernel_response_dmsq(set.kernel_kind, rv.msq, comp.nu, 3);
            if (set.kernel_kind == KernelKind::StudentT)
                out.nu += d_resp * kernel_response_dnu(set.kernel_kind, rv.msq, comp.nu, 3);

            // msq = q^T A q at the clamped closest point q = r0 + s* d.
            // With s* interior, dmsq/ds = 0, so only the explicit
            // dependencies on the mean and the precision matter; the s*=0
            // branch has no s dependence at all.
            const Mat3& prec = vs.precision[p];
            const Vec3 q = rv.r0 + rv.s_star * ray.dir;
            const Vec3 aq = prec * q;

            // mean: dmsq/dmu = -2 A q (through r0 = origin - mu)
            const Vec3 d_mean = d_msq * (-2.0) * aq;
            const MeanJacobian mj = mean_jacobian(comp, t);
            MotionGrad motion;
            accumulate_mean_grad(mj, d_mean, motion);
            out.mu += motion.mu;
            out.v += motion.v;
            out.a += motion.a;
            out.j += motion.j;
            out.s += motion.s;
            out.g += motion.g;

            // precision: dmsq/dA = q q^T, but when s* is interior the
            // optimality of s* removes the indirect term (envelope), so the
            // same expression applies with q at the optimum.
            const Mat3 d_prec = d_msq * (q * q.transpose());
            const Mat3 d_sigma = -prec * d_prec * prec;
            accumulate_covariance_grad(comp, d_sigma, out.rot, out.log_scale);
        }
    }

    return energy;
}

double opacity_prior_raw(const ComponentSet& set, const std::vector<double>& times,
                         double grad_scale, GradientRecord* grads) {
    if (set.components.empty() || times.empty()) return 0.0;
    const double inv_count =
        1.0 / (static_cast<double>(set.components.size()) * times.size());

    double energy = 0.0;
    for (std::size_t p = 0; p < set.components.size(); ++p) {
        const Component& c = set.components[p];
        const double o = c.opacity();
        const double vol = std::exp(c.log_scale.sum());
        double ratio = 1.0, d_ratio = 0.0;
        if (set.kernel_kind == KernelKind::StudentT) {
            ratio = student_t_mass_ratio(c.nu);
            d_ratio = student_t_mass_ratio_dnu(c.nu);
        }
        const double psi = kGaussMass3 * vol * ratio;
        for (double t : times) {
            const double z = (t - c.g) / c.u;
            const double bell = std::exp(-0.5 * z * z);
            energy += o * o * bell * psi;
            if (grads) {
                ComponentGrad& out = grads->comps[p];
                const double k = grad_scale * inv_count;
                out.opacity_logit += k * 2.0 * o * o * (1.0 - o) * bell * psi;
                out.g += k * o * o * psi * bell * (t - c.g) / (c.u * c.u);
                out.u += k * o * o * psi * bell * (t - c.g) * (t - c.g) / (c.u * c.u * c.u);
                out.log_scale += Vec3::Constant(k * o * o * bell * psi);
                if (set.kernel_kind == KernelKind::StudentT)
                    out.nu += k * o * o * bell * kGaussMass3 * vol * d_ratio;
            }
        }
    }
    return energy * inv_count;
}

double shape_prior_raw(const ComponentSet& set, double /*t*/, double grad_scale,
                       GradientRecord* grads) {
    const std::size_t n = set.components.size();
    if (n == 0) return 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<Mat3> covs(n);
    Mat3 mean = Mat3::Zero();
    for (std::size_t p = 0; p < n; ++p) {
        covs[p] = covariance_matrix(set.components[p]);
        mean += covs[p];
    }
    mean *= inv_n;

    double energy = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const Mat3 dev = covs[p] - mean;
        energy += dev.squaredNorm();
        if (grads) {
            // sum of deviations vanishes, so the mean path drops out
            const Mat3 d_sigma = grad_scale * inv_n * 2.0 * dev;
            accumulate_covariance_grad(set.components[p], d_sigma,
                                       grads->comps[p].rot, grads->comps[p].log_scale);
        }
    }
    return energy * inv_n;
}

double motion_prior_raw(const ComponentSet& set, double /*t*/, double grad_scale,
                        GradientRecord* grads) {
    const std::size_t n = set.components.size();
    if (n == 0) return 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);

    double energy = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const Component& c = set.components[p];
        const double vol = std::exp(c.log_scale.sum()); // sqrt(det Sigma)
        const double speed = c.v.squaredNorm() + c.a.squaredNorm() +
                             c.j.squaredNorm() + c.s.squaredNorm();
        energy += vol * speed;
        if (grads) {
            ComponentGrad& out = grads->comps[p];
            const double k = grad_scale * inv_n;
            out.v += k * vol * 2.0 * c.v;
            out.a += k * vol * 2.0 * c.a;
            out.j += k * vol * 2.0 * c.j;
            out.s += k * vol * 2.0 * c.s;
            out.log_scale += Vec3::Constant(k * vol * speed);
        }
    }
    return energy * inv_n;
}

double opacity_prior_energy(const ComponentSet& set, const std::vector<double>& times,
                            const LossWeights& w) {
    return w.lambda_op * opacity_prior_raw(set, times, 0.0, nullptr);
}

double shape_prior_energy(const ComponentSet& set, double t, const LossWeights& w) {
    return w.lambda_sigma * shape_prior_raw(set, t, 0.0, nullptr);
}

double motion_prior_energy(const ComponentSet& set, double t, const LossWeights& w) {
    return w.lambda_h * motion_prior_raw(set, t, 0.0, nullptr);
}

LoadedDataset load_dataset(const std::string& manifest_path) {
    LoadedDataset data;
    data.manifest = load_manifest(manifest_path);
    data.images.reserve(data.manifest.frames.size());
    for (const auto& f : data.manifest.frames)
        data.images.push_back(load_frame_image(data.manifest, f));
    return data;
}

TotalLossResult total_loss(const ComponentSet& set, const LoadedDataset& data,
                           const std::vector<std::size_t>& batch_frames,
                           const LossWeights& w, const TotalLossOptions& opts,
                           ConfidenceCache* cache) {
    if (batch_frames.empty())
        throw std::invalid_argument("total_loss: empty batch");

    TotalLossResult res;
    res.grads = GradientRecord(set);
    std::vector<double> times;

    for (std::size_t idx : batch_frames) {
        const auto& frame = data.manifest.frames.at(idx);
        const CameraModel* cam = data.manifest.find_camera(frame.camera_id);
        if (!cam) throw std::runtime_error("total_loss: frame references missing camera");
        const double t = frame.timestamp;
        times.push_back(t);

        const Image rendered = render_image(set, *cam, t, opts.render);
        const ImageEnergy e =
            image_energy(rendered, data.images.at(idx), set, t, w, &res.grads);
        res.breakdown.l1 += e.l1;
        res.breakdown.dssim += e.dssim;
        res.breakdown.opacity_reg += e.opacity_reg;
        res.breakdown.eigen_reg += e.eigen_reg;

        res.grads.add(render_backward(set, *cam, t, e.pixel_grad, opts.render));
    }

    const bool use_confidence = !opts.no_confidence && w.eps_alpha > 0.0;
    if (use_confidence) {
        if (cache && cache->valid) {
            res.breakdown.confidence = cache->raw_energy;
            res.grads.add(cache->grads);
        } else {
            GradientRecord conf_grads(set);
            const double raw = confidence_energy_with_grad(
                set, data.manifest, opts.confidence, w.eps_alpha, &conf_grads);
            res.breakdown.confidence = raw;
            res.grads.add(conf_grads);
            if (cache) {
                cache->valid = true;
                cache->raw_energy = raw;
                cache->grads = std::move(conf_grads);
            }
        }
    }

    res.breakdown.opacity_prior = opacity_prior_raw(set, times, w.lambda_op, &res.grads);
    double shape = 0.0, motion = 0.0;
    const double inv_t = 1.0 / static_cast<double>(times.size());
    for (double t : times) {
        shape += shape_prior_raw(set, t, w.lambda_sigma * inv_t, &res.grads);
        motion += motion_prior_raw(set, t, w.lambda_h * inv_t, &res.grads);
    }
    res.breakdown.shape_prior = shape * inv_t;
    res.breakdown.motion_prior = motion * inv_t;

    res.breakdown.total = res.breakdown.weighted_sum(w);
    return res;
}

} // namespace graphixs
