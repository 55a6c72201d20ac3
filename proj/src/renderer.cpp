#include "graphixs/renderer.hpp"

#include "graphixs/dynamics.hpp"
#include "graphixs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphixs {

namespace {

constexpr double kAlphaClamp = 0.999;
constexpr double kMinTransmittance = 1e-4;

struct TileGrid {
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<int>> splat_ids; // indices into the culled list
};

// Conservative screen-space bounding box of the alpha-cutoff level set.
void splat_bbox(const Splat2D& s, double& x0, double& x1, double& y0, double& y1) {
    const double hx = std::sqrt(std::max(0.0, s.cutoff_msq * s.cov2d(0, 0)));
    const double hy = std::sqrt(std::max(0.0, s.cutoff_msq * s.cov2d(1, 1)));
    x0 = s.center.x() - hx;
    x1 = s.center.x() + hx;
    y0 = s.center.y() - hy;
    y1 = s.center.y() + hy;
}

TileGrid build_tiles(const std::vector<Splat2D>& splats, int width, int height,
                     int tile_size) {
    TileGrid grid;
    grid.tiles_x = (width + tile_size - 1) / tile_size;
    grid.tiles_y = (height + tile_size - 1) / tile_size;
    grid.splat_ids.resize(static_cast<std::size_t>(grid.tiles_x) * grid.tiles_y);
    for (int i = 0; i < static_cast<int>(splats.size()); ++i) {
        double x0, x1, y0, y1;
        splat_bbox(splats[i], x0, x1, y0, y1);
        const int tx0 = std::clamp(static_cast<int>(std::floor(x0 / tile_size)), 0, grid.tiles_x - 1);
        const int tx1 = std::clamp(static_cast<int>(std::floor(x1 / tile_size)), 0, grid.tiles_x - 1);
        const int ty0 = std::clamp(static_cast<int>(std::floor(y0 / tile_size)), 0, grid.tiles_y - 1);
        const int ty1 = std::clamp(static_cast<int>(std::floor(y1 / tile_size)), 0, grid.tiles_y - 1);
        if (x1 < 0.0 || x0 > width || y1 < 0.0 || y0 > height) continue;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                grid.splat_ids[static_cast<std::size_t>(ty) * grid.tiles_x + tx].push_back(i);
    }
    return grid;
}

struct Contributor {
    int splat_id = 0; // index into the culled splat list
    double depth = 0.0;
    int component_index = 0;
    double response = 0.0;
    double msq = 0.0;
    double alpha = 0.0; // clamped
    bool clamped = false;
};

// Shared per-pixel gather: evaluate candidates, filter on the alpha cutoff,
// depth-sort. Both forward paths and the backward replay use this.
void gather_pixel(const std::vector<Splat2D>& splats, const std::vector<int>& candidates,
                  const Vec2& pixel, KernelKind kind, const ComponentSet& set,
                  const RenderConfig& cfg, std::vector<Contributor>& out) {
    out.clear();
    for (int id : candidates) {
        const Splat2D& s = splats[static_cast<std::size_t>(id)];
        const double nu = set.components[static_cast<std::size_t>(s.component_index)].nu;
        const Vec2 d = pixel - s.center;
        const double msq = d.dot(s.cov2d_inv * d);
        const double resp = kernel_response(kind, msq, nu, 2);
        const double raw = s.eff_opacity * resp;
        if (raw < cfg.alpha_cutoff) continue;
        Contributor contrib;
        contrib.splat_id = id;
        contrib.depth = s.depth;
        contrib.component_index = s.component_index;
        contrib.response = resp;
        contrib.msq = msq;
        contrib.clamped = raw > kAlphaClamp;
        contrib.alpha = contrib.clamped ? kAlphaClamp : raw;
        out.push_back(contrib);
    }
    std::sort(out.begin(), out.end(), [](const Contributor& a, const Contributor& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.component_index < b.component_index;
    });
}

Vec3 composite_contributors(const std::vector<Splat2D>& splats,
                            const std::vector<Contributor>& ordered,
                            const Vec3& background) {
    Vec3 rgb = Vec3::Zero();
    double trans = 1.0;
    for (const auto& c : ordered) {
        if (trans < kMinTransmittance) break;
        rgb += c.alpha * trans * splats[static_cast<std::size_t>(c.splat_id)].color;
        trans *= 1.0 - c.alpha;
    }
    return rgb + trans * background;
}

// Screen-space gradient accumulator per culled splat.
struct SplatScreenGrad {
    Vec2 d_center = Vec2::Zero();
    Mat2 d_cov = Mat2::Zero();
    double d_eff = 0.0;
    Vec3 d_color = Vec3::Zero();
    double d_nu = 0.0;
};

std::vector<int> all_ids(std::size_t n) {
    std::vector<int> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
    return ids;
}

} // namespace

GradientRecord::GradientRecord(const ComponentSet& set) {
    comps.resize(set.components.size());
    for (auto& g : comps)
        g.sh.assign(static_cast<std::size_t>(set.sh_coeff_count()), Vec3::Zero());
}

void GradientRecord::add(const GradientRecord& other) {
    if (comps.size() != other.comps.size())
        throw std::invalid_argument("GradientRecord::add: size mismatch");
    for (std::size_t i = 0; i < comps.size(); ++i) {
        auto& a = comps[i];
        const auto& b = other.comps[i];
        a.mu += b.mu;
        a.rot += b.rot;
        a.log_scale += b.log_scale;
        a.opacity_logit += b.opacity_logit;
        for (std::size_t k = 0; k < a.sh.size(); ++k) a.sh[k] += b.sh[k];
        a.g += b.g;
        a.u += b.u;
        a.v += b.v;
        a.a += b.a;
        a.j += b.j;
        a.s += b.s;
        a.nu += b.nu;
    }
}

void GradientRecord::scale(double f) {
    for (auto& g : comps) {
        g.mu *= f;
        g.rot *= f;
        g.log_scale *= f;
        g.opacity_logit *= f;
        for (auto& coeff : g.sh) coeff *= f;
        g.g *= f;
        g.u *= f;
        g.v *= f;
        g.a *= f;
        g.j *= f;
        g.s *= f;
        g.nu *= f;
    }
}

bool GradientRecord::all_finite() const {
    for (const auto& g : comps) {
        if (!g.mu.allFinite() || !g.rot.allFinite() || !g.log_scale.allFinite() ||
            !g.v.allFinite() || !g.a.allFinite() || !g.j.allFinite() || !g.s.allFinite())
            return false;
        if (!std::isfinite(g.opacity_logit) || !std::isfinite(g.g) ||
            !std::isfinite(g.u) || !std::isfinite(g.nu))
            return false;
        for (const auto& coeff : g.sh)
            if (!coeff.allFinite()) return false;
    }
    return true;
}

double GradientRecord::magnitude(std::size_t index) const {
    const auto& g = comps[index];
    double sq = g.mu.squaredNorm() + g.rot.squaredNorm() + g.log_scale.squaredNorm() +
                g.opacity_logit * g.opacity_logit + g.g * g.g + g.u * g.u +
                g.v.squaredNorm() + g.a.squaredNorm() + g.j.squaredNorm() +
                g.s.squaredNorm() + g.nu * g.nu;
    for (const auto& coeff : g.sh) sq += coeff.squaredNorm();
    return std::sqrt(sq);
}

Ray cast_ray(const CameraModel& cam, int px, int py, double t) {
    if (px < 0 || px >= cam.width || py < 0 || py >= cam.height)
        throw std::out_of_range("cast_ray: pixel outside image bounds");
    Ray ray;
    ray.origin = cam.center();
    const Vec3 cam_dir((px + 0.5 - cam.cx) / cam.fx, (py + 0.5 - cam.cy) / cam.fy, 1.0);
    ray.dir = (cam.rotation.transpose() * cam_dir).normalized();
    ray.camera_id = cam.id;
    ray.px = px;
    ray.py = py;
    ray.t = t;
    return ray;
}

std::vector<Splat2D> cull_per_image(const ComponentSet& set, const CameraModel& cam,
                                    double t, const RenderConfig& cfg) {
    std::vector<Splat2D> splats;
    for (std::size_t i = 0; i < set.components.size(); ++i) {
        auto s = project_component(set.components[i], set.sh_degree, set.kernel_kind,
                                   cam, t, cfg);
        if (!s) continue;
        s->component_index = static_cast<int>(i);
        double x0, x1, y0, y1;
        splat_bbox(*s, x0, x1, y0, y1);
        if (x1 < 0.0 || x0 > cam.width || y1 < 0.0 || y0 > cam.height) continue;
        splats.push_back(*s);
    }
    return splats;
}

std::vector<Splat2D> intersect_per_pixel(const std::vector<Splat2D>& splats,
                                         const Vec2& pixel, KernelKind kind,
                                         const ComponentSet& set,
                                         const RenderConfig& cfg) {
    std::vector<Contributor> contribs;
    gather_pixel(splats, all_ids(splats.size()), pixel, kind, set, cfg, contribs);
    std::vector<Splat2D> out;
    out.reserve(contribs.size());
    for (const auto& c : contribs) out.push_back(splats[static_cast<std::size_t>(c.splat_id)]);
    return out;
}

CompositeResult composite(const std::vector<CompositeEntry>& ordered) {
    CompositeResult res;
    for (const auto& e : ordered) {
        if (res.transmittance < kMinTransmittance) break;
        const double alpha = std::min(e.eff_opacity * e.response, kAlphaClamp);
        res.rgb += alpha * res.transmittance * e.color;
        res.transmittance *= 1.0 - alpha;
    }
    return res;
}

Image render_image(const ComponentSet& set, const CameraModel& cam, double t,
                   const RenderConfig& cfg) {
    const std::vector<Splat2D> splats = cull_per_image(set, cam, t, cfg);
    const TileGrid grid = build_tiles(splats, cam.width, cam.height, cfg.tile_size);

    Image img(cam.width, cam.height);
    const std::size_t n_tiles = grid.splat_ids.size();
    parallel_chunks(n_tiles, [&](std::size_t begin, std::size_t end, int) {
        std::vector<Contributor> contribs;
        for (std::size_t tile = begin; tile < end; ++tile) {
            const int tx = static_cast<int>(tile) % grid.tiles_x;
            const int ty = static_cast<int>(tile) / grid.tiles_x;
            const int x_end = std::min((tx + 1) * cfg.tile_size, cam.width);
            const int y_end = std::min((ty + 1) * cfg.tile_size, cam.height);
            const auto& candidates = grid.splat_ids[tile];
            for (int y = ty * cfg.tile_size; y < y_end; ++y)
                for (int x = tx * cfg.tile_size; x < x_end; ++x) {
                    const Vec2 pixel(x + 0.5, y + 0.5);
                    gather_pixel(splats, candidates, pixel, set.kernel_kind, set, cfg,
                                 contribs);
                    const Vec3 rgb = composite_contributors(splats, contribs, cfg.background);
                    for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = rgb[ch];
                }
        }
    });
    return img;
}

Image render_image_bruteforce(const ComponentSet& set, const CameraModel& cam,
                              double t, const RenderConfig& cfg) {
    // Project everything; only the projection-level depth/opacity culls apply.
    std::vector<Splat2D> splats;
    for (std::size_t i = 0; i < set.components.size(); ++i) {
        auto s = project_component(set.components[i], set.sh_degree, set.kernel_kind,
                                   cam, t, cfg);
        if (!s) continue;
        s->component_index = static_cast<int>(i);
        splats.push_back(*s);
    }
    const std::vector<int> ids = all_ids(splats.size());

    Image img(cam.width, cam.height);
    std::vector<Contributor> contribs;
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            const Vec2 pixel(x + 0.5, y + 0.5);
            gather_pixel(splats, ids, pixel, set.kernel_kind, set, cfg, contribs);
            const Vec3 rgb = composite_contributors(splats, contribs, cfg.background);
            for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = rgb[ch];
        }
    return img;
}

GradientRecord render_backward(const ComponentSet& set, const CameraModel& cam,
                               double t, const Image& upstream,
                               const RenderConfig& cfg) {
    if (upstream.width != cam.width || upstream.height != cam.height)
        throw std::invalid_argument("render_backward: upstream size mismatch");
    for (double v : upstream.pixels)
        if (!std::isfinite(v))
            throw std::invalid_argument("render_backward: non-finite upstream gradient");

    const std::vector<Splat2D> splats = cull_per_image(set, cam, t, cfg);
    const TileGrid grid = build_tiles(splats, cam.width, cam.height, cfg.tile_size);

    // Phase 1: accumulate screen-space gradients per splat across pixels.
    const std::size_t n_tiles = grid.splat_ids.size();
    const int chunks = num_chunks(n_tiles);
    std::vector<std::vector<SplatScreenGrad>> chunk_grads(
        static_cast<std::size_t>(chunks), std::vector<SplatScreenGrad>(splats.size()));

    parallel_chunks(n_tiles, [&](std::size_t begin, std::size_t end, int chunk) {
        auto& acc = chunk_grads[static_cast<std::size_t>(chunk)];
        std::vector<Contributor> contribs;
        std::vector<double> trans_before;
        for (std::size_t tile = begin; tile < end; ++tile) {
            const int tx = static_cast<int>(tile) % grid.tiles_x;
            const int ty = static_cast<int>(tile) / grid.tiles_x;
            const int x_end = std::min((tx + 1) * cfg.tile_size, cam.width);
            const int y_end = std::min((ty + 1) * cfg.tile_size, cam.height);
            const auto& candidates = grid.splat_ids[tile];
            for (int y = ty * cfg.tile_size; y < y_end; ++y)
                for (int x = tx * cfg.tile_size; x < x_end; ++x) {
                    const Vec2 pixel(x + 0.5, y + 0.5);
                    gather_pixel(splats, candidates, pixel, set.kernel_kind, set, cfg,
                                 contribs);
                    if (contribs.empty()) continue;
                    const Vec3 up(upstream.at(x, y, 0), upstream.at(x, y, 1),
                                  upstream.at(x, y, 2));

                    // forward replay recording transmittance ahead of each entry
                    trans_before.clear();
                    double trans = 1.0;
                    std::size_t processed = 0;
                    for (const auto& c : contribs) {
                        if (trans < kMinTransmittance) break;
                        trans_before.push_back(trans);
                        trans *= 1.0 - c.alpha;
                        ++processed;
                    }

                    // backward scan: rest = color composited behind entry i
                    Vec3 rest = trans * cfg.background;
                    for (std::size_t i = processed; i-- > 0;) {
                        const auto& c = contribs[i];
                        const Splat2D& s = splats[static_cast<std::size_t>(c.splat_id)];
                        auto& g = acc[static_cast<std::size_t>(c.splat_id)];
                        const double t_i = trans_before[i];
                        const double w_i = c.alpha * t_i;

                        g.d_color += w_i * up;

                        const double d_alpha =
                            up.dot(s.color) * t_i - up.dot(rest) / (1.0 - c.alpha);
                        rest += w_i * s.color;
                        if (c.clamped) continue;

                        const double d_resp = d_alpha * s.eff_opacity;
                        g.d_eff += d_alpha * c.response;

                        const double nu =
                            set.components[static_cast<std::size_t>(s.component_index)].nu;
                        const double d_msq =
                            d_resp * kernel_response_dmsq(set.kernel_kind, c.msq, nu, 2);
                        if (set.kernel_kind == KernelKind::StudentT)
                            g.d_nu += d_resp * kernel_response_dnu(set.kernel_kind, c.msq, nu, 2);

                        const Vec2 diff = pixel - s.center;
                        const Vec2 e = s.cov2d_inv * diff;
                        g.d_center += d_msq * (-2.0) * e;
                        g.d_cov += d_msq * (-(e * e.transpose()));
                    }
                }
        }
    });

    for (int c = 1; c < chunks; ++c)
        for (std::size_t i = 0; i < splats.size(); ++i) {
            auto& a = chunk_grads[0][i];
            const auto& b = chunk_grads[static_cast<std::size_t>(c)][i];
            a.d_center += b.d_center;
            a.d_cov += b.d_cov;
            a.d_eff += b.d_eff;
            a.d_color += b.d_color;
            a.d_nu += b.d_nu;
        }

    // Phase 2: chain per-splat screen gradients down to component parameters.
    GradientRecord record(set);
    const std::vector<SplatScreenGrad>& screen = chunk_grads[0]; // chunks >= 1
    const Vec3 cam_center = cam.center();

    for (std::size_t i = 0; i < splats.size(); ++i) {
        const Splat2D& s = splats[i];
        const SplatScreenGrad& sg = screen[i];
        const std::size_t p = static_cast<std::size_t>(s.component_index);
        const Component& comp = set.components[p];
        ComponentGrad& out = record.comps[p];

        const Vec3 mu_w = mean_at_time(comp, t);
        const Vec3 p_cam = cam.rotation * mu_w + cam.translation;
        const double z = p_cam.z();

        Eigen::Matrix<double, 2, 3> jac;
        jac << cam.fx / z, 0.0, -cam.fx * p_cam.x() / (z * z),
               0.0, cam.fy / z, -cam.fy * p_cam.y() / (z * z);
        const Eigen::Matrix<double, 2, 3> tmat = jac * cam.rotation;
        const Mat3 sigma = covariance_matrix(comp);

        // covariance path
        const Mat2 g2 = 0.5 * (sg.d_cov + sg.d_cov.transpose());
        const Mat3 d_sigma = tmat.transpose() * g2 * tmat;
        accumulate_covariance_grad(comp, d_sigma, out.rot, out.log_scale);

        // projection Jacobian path: dL/dT -> dL/dJ -> dL/dp_cam
        const Eigen::Matrix<double, 2, 3> d_tmat = 2.0 * g2 * tmat * sigma;
        const Eigen::Matrix<double, 2, 3> d_jac = d_tmat * cam.rotation.transpose();
        Vec3 d_pcam = Vec3::Zero();
        const double z2 = z * z, z3 = z2 * z;
        d_pcam.x() += d_jac(0, 2) * (-cam.fx / z2);
        d_pcam.y() += d_jac(1, 2) * (-cam.fy / z2);
        d_pcam.z() += d_jac(0, 0) * (-cam.fx / z2) + d_jac(1, 1) * (-cam.fy / z2) +
                      d_jac(0, 2) * (2.0 * cam.fx * p_cam.x() / z3) +
                      d_jac(1, 2) * (2.0 * cam.fy * p_cam.y() / z3);

        // pinhole center path
        d_pcam += jac.transpose() * sg.d_center;

        Vec3 d_mu_w = cam.rotation.transpose() * d_pcam;

        // view-dependent color path
        {
            const int n_sh = set.sh_coeff_count();
            Vec3 rel = mu_w - cam_center;
            const double dist = rel.norm();
            const Vec3 dir = dist > 0.0 ? Vec3(rel / dist) : Vec3(0.0, 0.0, 1.0);
            double basis[16];
            sh_basis(dir, set.sh_degree, basis);
            Vec3 raw = Vec3::Constant(0.5);
            for (int k = 0; k < n_sh; ++k) raw += basis[k] * comp.sh[k];
            Vec3 d_raw = sg.d_color;
            for (int ch = 0; ch < 3; ++ch)
                if (raw[ch] < 0.0 || raw[ch] > 1.0) d_raw[ch] = 0.0; // clamped

            for (int k = 0; k < n_sh; ++k) out.sh[static_cast<std::size_t>(k)] += basis[k] * d_raw;

            if (set.sh_degree > 0 && dist > 0.0) {
                Vec3 basis_grad[16];
                sh_basis_grad(dir, set.sh_degree, basis_grad);
                Vec3 d_dir = Vec3::Zero();
                for (int k = 0; k < n_sh; ++k)
                    d_dir += basis_grad[k] * d_raw.dot(comp.sh[static_cast<std::size_t>(k)]);
                d_mu_w += (Mat3::Identity() - dir * dir.transpose()) / dist * d_dir;
            }
        }

        // temporal opacity path
        accumulate_temporal_opacity_grad(comp, t, sg.d_eff, out.opacity_logit, out.g, out.u);

        // motion polynomial path
        const MeanJacobian mj = mean_jacobian(comp, t);
        MotionGrad motion;
        accumulate_mean_grad(mj, d_mu_w, motion);
        out.mu += motion.mu;
        out.v += motion.v;
        out.a += motion.a;
        out.j += motion.j;
        out.s += motion.s;
        out.g += motion.g;

        out.nu += sg.d_nu;
    }

    return record;
}

} // namespace graphixs
