#include "graphixs/optimizer.hpp"

#include "graphixs/dynamics.hpp"
#include "graphixs/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace graphixs {

namespace {

using nlohmann::json;

TrainConfig effective_config(const TrainConfig& cfg) {
    TrainConfig eff = cfg;
    if (eff.baseline) {
        // plain deterministic splatting: no stochastic terms, no priors
        eff.weights.eps_alpha = 0.0;
        eff.weights.lambda_sigma = 0.0;
        eff.weights.lambda_h = 0.0;
        eff.weights.lambda_op = 0.0;
        eff.temperature = 0.0;
        eff.brownian_eps = 0.0;
    }
    if (eff.no_confidence) eff.weights.eps_alpha = 0.0;
    if (eff.kernel_kind == KernelKind::Gaussian) {
        eff.nu_init = 1e6;
        eff.lr.nu = 0.0;
    }
    return eff;
}

void check_finite(const GradientRecord& grads) {
    for (std::size_t p = 0; p < grads.comps.size(); ++p) {
        const auto& g = grads.comps[p];
        auto bad = [&](const char* field) {
            throw std::runtime_error("sghmc_step: non-finite gradient for component " +
                                     std::to_string(p) + ", field " + field);
        };
        if (!g.mu.allFinite()) bad("mu");
        if (!g.rot.allFinite()) bad("rot");
        if (!g.log_scale.allFinite()) bad("log_scale");
        if (!std::isfinite(g.opacity_logit)) bad("opacity_logit");
        for (const auto& c : g.sh)
            if (!c.allFinite()) bad("sh");
        if (!std::isfinite(g.g)) bad("g");
        if (!std::isfinite(g.u)) bad("u");
        if (!g.v.allFinite()) bad("v");
        if (!g.a.allFinite()) bad("a");
        if (!g.j.allFinite()) bad("j");
        if (!g.s.allFinite()) bad("s");
        if (!std::isfinite(g.nu)) bad("nu");
    }
}

double brownian_eps_at(const TrainConfig& cfg, std::uint64_t iteration) {
    if (cfg.brownian_eps <= 0.0 || cfg.iterations <= 0) return 0.0;
    // linear decay to zero over the last 20% of training
    const double tail = 0.2 * cfg.iterations;
    const double remaining = static_cast<double>(cfg.iterations) - static_cast<double>(iteration);
    const double factor = std::min(1.0, remaining / tail);
    return cfg.brownian_eps * std::max(0.0, factor);
}

} // namespace

json train_config_to_json(const TrainConfig& cfg) {
    json lr;
    lr["mu"] = cfg.lr.mu;
    lr["rot"] = cfg.lr.rot;
    lr["log_scale"] = cfg.lr.log_scale;
    lr["opacity_logit"] = cfg.lr.opacity_logit;
    lr["sh"] = cfg.lr.sh;
    lr["g"] = cfg.lr.g;
    lr["u"] = cfg.lr.u;
    lr["dynamics"] = cfg.lr.dynamics;
    lr["nu"] = cfg.lr.nu;

    json w;
    w["eps_dssim"] = cfg.weights.eps_dssim;
    w["eps_o"] = cfg.weights.eps_o;
    w["eps_sigma"] = cfg.weights.eps_sigma;
    w["eps_alpha"] = cfg.weights.eps_alpha;
    w["lambda_sigma"] = cfg.weights.lambda_sigma;
    w["lambda_h"] = cfg.weights.lambda_h;
    w["lambda_op"] = cfg.weights.lambda_op;

    json doc;
    doc["iterations"] = cfg.iterations;
    doc["batch_frames"] = cfg.batch_frames;
    doc["n_components"] = cfg.n_components;
    doc["sh_degree"] = cfg.sh_degree;
    doc["lr"] = lr;
    doc["friction"] = cfg.friction;
    doc["temperature"] = cfg.temperature;
    doc["brownian_eps"] = cfg.brownian_eps;
    doc["dt"] = cfg.dt;
    doc["relocation_interval"] = cfg.relocation_interval;
    doc["relocation_fraction"] = cfg.relocation_fraction;
    doc["confidence_interval"] = cfg.confidence_interval;
    doc["dynamics_warmup"] = cfg.dynamics_warmup;
    doc["seed"] = cfg.seed;
    doc["weights"] = w;
    doc["kernel"] = to_string(cfg.kernel_kind);
    doc["nu_init"] = cfg.nu_init;
    doc["scale_max"] = cfg.scale_max;
    doc["baseline"] = cfg.baseline;
    doc["no_confidence"] = cfg.no_confidence;
    doc["no_higher_order"] = cfg.no_higher_order;
    doc["background"] = {cfg.render.background[0], cfg.render.background[1],
                         cfg.render.background[2]};
    doc["confidence_grid"] = cfg.confidence.grid_n;
    return doc;
}

TrainConfig train_config_from_json(const json& doc) {
    TrainConfig cfg;
    cfg.iterations = doc.value("iterations", cfg.iterations);
    cfg.batch_frames = doc.value("batch_frames", cfg.batch_frames);
    cfg.n_components = doc.value("n_components", cfg.n_components);
    cfg.sh_degree = doc.value("sh_degree", cfg.sh_degree);
    if (doc.contains("lr")) {
        const auto& lr = doc["lr"];
        cfg.lr.mu = lr.value("mu", cfg.lr.mu);
        cfg.lr.rot = lr.value("rot", cfg.lr.rot);
        cfg.lr.log_scale = lr.value("log_scale", cfg.lr.log_scale);
        cfg.lr.opacity_logit = lr.value("opacity_logit", cfg.lr.opacity_logit);
        cfg.lr.sh = lr.value("sh", cfg.lr.sh);
        cfg.lr.g = lr.value("g", cfg.lr.g);
        cfg.lr.u = lr.value("u", cfg.lr.u);
        cfg.lr.dynamics = lr.value("dynamics", cfg.lr.dynamics);
        cfg.lr.nu = lr.value("nu", cfg.lr.nu);
    }
    cfg.friction = doc.value("friction", cfg.friction);
    cfg.temperature = doc.value("temperature", cfg.temperature);
    cfg.brownian_eps = doc.value("brownian_eps", cfg.brownian_eps);
    cfg.dt = doc.value("dt", cfg.dt);
    cfg.relocation_interval = doc.value("relocation_interval", cfg.relocation_interval);
    cfg.relocation_fraction = doc.value("relocation_fraction", cfg.relocation_fraction);
    cfg.confidence_interval = doc.value("confidence_interval", cfg.confidence_interval);
    cfg.dynamics_warmup = doc.value("dynamics_warmup", cfg.dynamics_warmup);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("weights")) {
        const auto& w = doc["weights"];
        cfg.weights.eps_dssim = w.value("eps_dssim", cfg.weights.eps_dssim);
        cfg.weights.eps_o = w.value("eps_o", cfg.weights.eps_o);
        cfg.weights.eps_sigma = w.value("eps_sigma", cfg.weights.eps_sigma);
        cfg.weights.eps_alpha = w.value("eps_alpha", cfg.weights.eps_alpha);
        cfg.weights.lambda_sigma = w.value("lambda_sigma", cfg.weights.lambda_sigma);
        cfg.weights.lambda_h = w.value("lambda_h", cfg.weights.lambda_h);
        cfg.weights.lambda_op = w.value("lambda_op", cfg.weights.lambda_op);
    }
    if (doc.contains("kernel")) cfg.kernel_kind = kernel_kind_from_string(doc["kernel"]);
    cfg.nu_init = doc.value("nu_init", cfg.nu_init);
    cfg.scale_max = doc.value("scale_max", cfg.scale_max);
    cfg.baseline = doc.value("baseline", cfg.baseline);
    cfg.no_confidence = doc.value("no_confidence", cfg.no_confidence);
    cfg.no_higher_order = doc.value("no_higher_order", cfg.no_higher_order);
    if (doc.contains("background")) {
        const auto& bg = doc["background"];
        cfg.render.background = Vec3(bg.at(0), bg.at(1), bg.at(2));
    }
    cfg.confidence.grid_n = doc.value("confidence_grid", cfg.confidence.grid_n);
    return cfg;
}

void sghmc_step(ComponentSet& set, const GradientRecord& grads, SghmcState& state,
                const TrainConfig& cfg) {
    if (grads.comps.size() != set.components.size())
        throw std::invalid_argument("sghmc_step: gradient/set size mismatch");
    check_finite(grads);

    std::normal_distribution<double> unit(0.0, 1.0);
    auto noise_std = [&](double lr) {
        return std::sqrt(2.0 * cfg.friction * lr * cfg.temperature);
    };
    auto step_scalar = [&](double& m, double theta_grad, double lr) {
        m = (1.0 - cfg.friction) * m - lr * theta_grad;
        const double ns = noise_std(lr);
        if (ns > 0.0) m += ns * unit(state.rng);
        return m;
    };

    const bool update_nu = cfg.kernel_kind == KernelKind::StudentT && cfg.lr.nu > 0.0;
    const bool freeze_higher =
        cfg.no_higher_order ||
        state.iteration < static_cast<std::uint64_t>(cfg.dynamics_warmup * cfg.iterations);
    const double min_log_scale = std::log(kScaleFloor);
    const double max_log_scale = std::log(cfg.scale_max);

    for (std::size_t p = 0; p < set.components.size(); ++p) {
        Component& c = set.components[p];
        ComponentGrad& m = state.momentum.comps[p];
        const ComponentGrad& g = grads.comps[p];

        for (int k = 0; k < 3; ++k) c.mu[k] += step_scalar(m.mu[k], g.mu[k], cfg.lr.mu);
        for (int k = 0; k < 4; ++k) c.rot[k] += step_scalar(m.rot[k], g.rot[k], cfg.lr.rot);
        for (int k = 0; k < 3; ++k)
            c.log_scale[k] += step_scalar(m.log_scale[k], g.log_scale[k], cfg.lr.log_scale);
        c.opacity_logit +=
            step_scalar(m.opacity_logit, g.opacity_logit, cfg.lr.opacity_logit);
        for (std::size_t k = 0; k < c.sh.size(); ++k)
            for (int ch = 0; ch < 3; ++ch)
                c.sh[k][ch] += step_scalar(m.sh[k][ch], g.sh[k][ch], cfg.lr.sh);
        c.g += step_scalar(m.g, g.g, cfg.lr.g);
        c.u += step_scalar(m.u, g.u, cfg.lr.u);
        for (int k = 0; k < 3; ++k) c.v[k] += step_scalar(m.v[k], g.v[k], cfg.lr.dynamics);
        if (!freeze_higher) {
            for (int k = 0; k < 3; ++k) {
                c.a[k] += step_scalar(m.a[k], g.a[k], cfg.lr.dynamics);
                c.j[k] += step_scalar(m.j[k], g.j[k], cfg.lr.dynamics);
                c.s[k] += step_scalar(m.s[k], g.s[k], cfg.lr.dynamics);
            }
        }
        if (update_nu) {
            c.nu += step_scalar(m.nu, g.nu, cfg.lr.nu);
            c.nu = std::max(c.nu, 0.5);
        }

        c.rot /= c.rot.norm();
        c.u = std::max(c.u, 1e-4);
        for (int k = 0; k < 3; ++k)
            c.log_scale[k] = std::clamp(c.log_scale[k], min_log_scale, max_log_scale);
    }
    ++state.iteration;
}

ComponentSet init_components(const TrainConfig& cfg, const LoadedDataset& data,
                             int n, std::mt19937_64& rng) {
    if (n < 1) throw std::invalid_argument("init_components: n must be >= 1");
    const DatasetManifest& manifest = data.manifest;

    std::vector<const CameraModel*> train_cams;
    for (const auto& cam : manifest.cameras)
        if (!cam.is_holdout) train_cams.push_back(&cam);
    if (train_cams.empty())
        throw std::invalid_argument("init_components: no training cameras");

    // sampling box around the least-squares intersection of the optical
    // axes, spanning half the median camera distance per axis
    Mat3 axis_sum = 1e-9 * Mat3::Identity();
    Vec3 rhs = Vec3::Zero();
    for (const auto* cam : train_cams) {
        const Vec3 dir = cam->rotation.row(2).transpose(); // optical axis
        const Mat3 proj = Mat3::Identity() - dir * dir.transpose();
        axis_sum += proj;
        rhs += proj * cam->center();
    }
    const Vec3 focus = axis_sum.ldlt().solve(rhs);
    std::vector<double> dists;
    for (const auto* cam : train_cams) dists.push_back((cam->center() - focus).norm());
    std::sort(dists.begin(), dists.end());
    const double radius = std::max(1e-3, dists[dists.size() / 2]);
    const Vec3 lo = focus - Vec3::Constant(0.5 * radius);
    const Vec3 hi = focus + Vec3::Constant(0.5 * radius);

    auto visible_count = [&](const Vec3& p) {
        int count = 0;
        for (const auto* cam : train_cams) {
            const Vec3 pc = cam->rotation * p + cam->translation;
            if (pc.z() <= cfg.render.near_plane) continue;
            const double px = cam->fx * pc.x() / pc.z() + cam->cx;
            const double py = cam->fy * pc.y() / pc.z() + cam->cy;
            if (px >= 0.0 && px < cam->width && py >= 0.0 && py < cam->height) ++count;
        }
        return count;
    };
    const int needed = std::max(1, static_cast<int>(std::ceil(0.9 * train_cams.size())));

    std::uniform_real_distribution<double> ux(lo.x(), hi.x());
    std::uniform_real_distribution<double> uy(lo.y(), hi.y());
    std::uniform_real_distribution<double> uz(lo.z(), hi.z());

    std::vector<Vec3> means;
    means.reserve(static_cast<std::size_t>(n));
    std::int64_t attempts = 0;
    const std::int64_t max_attempts = 10000LL * n;
    while (static_cast<int>(means.size()) < n) {
        if (++attempts > max_attempts)
            throw std::runtime_error("init_components: degenerate frustum volume");
        const Vec3 p(ux(rng), uy(rng), uz(rng));
        if (visible_count(p) >= needed) means.push_back(p);
    }

    // nearest-neighbor spacing per point
    std::vector<double> nn(means.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < means.size(); ++i)
        for (std::size_t k = i + 1; k < means.size(); ++k) {
            const double d = (means[i] - means[k]).norm();
            nn[i] = std::min(nn[i], d);
            nn[k] = std::min(nn[k], d);
        }

    // mean color of each training camera's first frame
    Vec3 mean_color = Vec3::Zero();
    std::size_t color_samples = 0;
    for (const auto* cam : train_cams) {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (std::size_t f = 0; f < manifest.frames.size(); ++f) {
            if (manifest.frames[f].camera_id != cam->id) continue;
            if (best == std::numeric_limits<std::size_t>::max() ||
                manifest.frames[f].timestamp < manifest.frames[best].timestamp)
                best = f;
        }
        if (best == std::numeric_limits<std::size_t>::max()) continue;
        const Image& img = data.images.at(best);
        Vec3 acc = Vec3::Zero();
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                acc += Vec3(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
        mean_color += acc / (static_cast<double>(img.width) * img.height);
        ++color_samples;
    }
    if (color_samples > 0) mean_color /= static_cast<double>(color_samples);
    constexpr double kSH0 = 0.28209479177387814;
    const Vec3 sh0 = (mean_color - Vec3::Constant(0.5)) / kSH0;

    std::uniform_real_distribution<double> ut(0.0, manifest.duration);

    ComponentSet set;
    set.kernel_kind = cfg.kernel_kind;
    set.sh_degree = cfg.sh_degree;
    set.components.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Component c;
        c.mu = means[static_cast<std::size_t>(i)];
        const double spacing = std::isfinite(nn[static_cast<std::size_t>(i)])
                                   ? std::max(nn[static_cast<std::size_t>(i)], 1e-3)
                                   : 0.1;
        c.log_scale = Vec3::Constant(std::log(spacing / 2.0));
        c.opacity_logit = logit(0.1);
        c.sh.assign(static_cast<std::size_t>(set.sh_coeff_count()), Vec3::Zero());
        c.sh[0] = sh0;
        c.g = ut(rng);
        c.u = manifest.duration;
        c.nu = cfg.nu_init;
        set.components.push_back(std::move(c));
    }
    return set;
}

std::size_t weighted_index_sample(const std::vector<double>& weights,
                                  std::mt19937_64& rng) {
    double total = 0.0;
    for (double w : weights) total += std::max(w, 0.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    if (total <= 0.0) {
        return std::min(weights.size() - 1,
                        static_cast<std::size_t>(uniform(rng) * weights.size()));
    }
    const double target = uniform(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += std::max(weights[i], 0.0);
        if (target < acc) return i;
    }
    return weights.size() - 1;
}

void relocate_components(ComponentSet& set, const std::vector<double>& conf,
                         const std::vector<double>& grad_magnitudes,
                         const TrainConfig& cfg, std::mt19937_64& rng,
                         SghmcState* state) {
    const std::size_t n = set.components.size();
    if (conf.size() != n || grad_magnitudes.size() != n)
        throw std::invalid_argument("relocate_components: size mismatch");
    const std::size_t k =
        static_cast<std::size_t>(cfg.relocation_fraction * static_cast<double>(n));
    if (k == 0) return;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&conf](std::size_t a, std::size_t b) {
        return conf[a] < conf[b];
    });

    std::vector<bool> relocated(n, false);
    for (std::size_t i = 0; i < k; ++i) relocated[order[i]] = true;

    // donor pool: the survivors, weighted by conf * grad magnitude
    std::vector<std::size_t> pool;
    std::vector<double> weights;
    for (std::size_t p = 0; p < n; ++p)
        if (!relocated[p]) {
            pool.push_back(p);
            weights.push_back(std::max(conf[p], 0.0) * std::max(grad_magnitudes[p], 0.0));
        }
    if (pool.empty()) return;

    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t target = order[i];
        const std::size_t donor = pool[weighted_index_sample(weights, rng)];
        Component& dst = set.components[target];
        const Component& src = set.components[donor];

        dst = src;
        dst.log_scale += Vec3::Constant(std::log(0.5));
        dst.opacity_logit = logit(0.1);
        dst.v.setZero();
        dst.a.setZero();
        dst.j.setZero();
        dst.s.setZero();
        if (state) {
            ComponentGrad cleared;
            cleared.sh.assign(state->momentum.comps[target].sh.size(), Vec3::Zero());
            state->momentum.comps[target] = std::move(cleared);
        }
    }
}

TrainResult train(const LoadedDataset& data, const TrainConfig& user_cfg) {
    const TrainConfig cfg = effective_config(user_cfg);
    const DatasetManifest& manifest = data.manifest;

    std::vector<std::size_t> train_frames;
    for (std::size_t f = 0; f < manifest.frames.size(); ++f) {
        const CameraModel* cam = manifest.find_camera(manifest.frames[f].camera_id);
        if (cam && !cam->is_holdout) train_frames.push_back(f);
    }
    if (train_frames.empty())
        throw std::invalid_argument("train: manifest has no training frames");

    SghmcState state;
    state.rng.seed(cfg.seed);

    TrainResult result;
    result.set = init_components(cfg, data, cfg.n_components, state.rng);
    state.momentum = GradientRecord(result.set);

    TotalLossOptions opts;
    opts.render = cfg.render;
    opts.confidence = cfg.confidence;
    opts.no_confidence = cfg.no_confidence;

    ConfidenceCache cache;
    std::uniform_int_distribution<std::size_t> pick(0, train_frames.size() - 1);
    GradientRecord last_grads(result.set);

    const auto t0 = std::chrono::steady_clock::now();
    for (int it = 0; it < cfg.iterations; ++it) {
        std::vector<std::size_t> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch_frames));
        for (int b = 0; b < cfg.batch_frames; ++b) {
            const std::size_t f = train_frames[pick(state.rng)];
            const CameraModel* cam = manifest.find_camera(manifest.frames[f].camera_id);
            if (!cam || cam->is_holdout)
                throw std::logic_error("train: sampler produced a holdout frame");
            batch.push_back(f);
        }

        if (it % cfg.confidence_interval == 0) cache.valid = false;

        // exploration noise on positions; gradients apply to the base set
        const double eps = brownian_eps_at(cfg, static_cast<std::uint64_t>(it));
        TotalLossResult loss;
        if (eps > 0.0) {
            ComponentSet perturbed = result.set;
            std::vector<Vec3> positions(perturbed.components.size());
            for (std::size_t p = 0; p < positions.size(); ++p)
                positions[p] = perturbed.components[p].mu;
            brownian_perturb(positions, eps, cfg.dt, state.rng);
            for (std::size_t p = 0; p < positions.size(); ++p)
                perturbed.components[p].mu = positions[p];
            loss = total_loss(perturbed, data, batch, cfg.weights, opts, &cache);
        } else {
            loss = total_loss(result.set, data, batch, cfg.weights, opts, &cache);
        }

        if (!std::isfinite(loss.breakdown.total)) {
            std::ostringstream msg;
            msg << "train: non-finite loss at iteration " << it
                << " (l1=" << loss.breakdown.l1 << ", dssim=" << loss.breakdown.dssim
                << ", confidence=" << loss.breakdown.confidence << ")";
            throw std::runtime_error(msg.str());
        }

        sghmc_step(result.set, loss.grads, state, cfg);
        last_grads = std::move(loss.grads);

        if (cfg.relocation_interval > 0 && cfg.relocation_fraction > 0.0 && it > 0 &&
            it % cfg.relocation_interval == 0 && !cfg.baseline) {
            // ablating the confidence distribution removes it from relocation
            // guidance too; base opacity is the fallback score
            std::vector<double> scores;
            if (cfg.no_confidence) {
                scores.resize(result.set.components.size());
                for (std::size_t p = 0; p < scores.size(); ++p)
                    scores[p] = result.set.components[p].opacity();
            } else {
                scores = component_confidence(result.set, manifest, cfg.confidence);
            }
            std::vector<double> mags(result.set.components.size());
            for (std::size_t p = 0; p < mags.size(); ++p) mags[p] = last_grads.magnitude(p);
            relocate_components(result.set, scores, mags, cfg, state.rng, &state);
            cache.valid = false;
        }

        TrainLogEntry entry;
        entry.iteration = static_cast<std::uint64_t>(it);
        entry.breakdown = loss.breakdown;
        entry.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        result.log.push_back(entry);
    }

    return result;
}

std::string train_log_to_ndjson(const std::vector<TrainLogEntry>& log) {
    std::ostringstream out;
    for (const auto& e : log) {
        json line;
        line["iteration"] = e.iteration;
        line["l1"] = e.breakdown.l1;
        line["dssim"] = e.breakdown.dssim;
        line["opacity_reg"] = e.breakdown.opacity_reg;
        line["eigen_reg"] = e.breakdown.eigen_reg;
        line["confidence"] = e.breakdown.confidence;
        line["opacity_prior"] = e.breakdown.opacity_prior;
        line["shape_prior"] = e.breakdown.shape_prior;
        line["motion_prior"] = e.breakdown.motion_prior;
        line["total"] = e.breakdown.total;
        line["wall_ms"] = e.wall_ms;
        out << line.dump() << "\n";
    }
    return out.str();
}

} // namespace graphixs
