/// @file optimizer.hpp
/// @brief SGHMC parameter updates, component initialization,
/// confidence-driven relocation, and the training loop.

#pragma once

#include "graphixs/objective.hpp"
#include "graphixs/renderer.hpp"
#include "graphixs/types.hpp"

#include <json.hpp>

#include <random>
#include <string>
#include <vector>

namespace graphixs {

struct LearningRates {
    double mu = 0.05;
    double rot = 0.05;
    double log_scale = 0.05;
    double opacity_logit = 0.3;
    double sh = 0.25;
    double g = 0.02;
    double u = 0.02;
    double dynamics = 0.02; // shared by v, a, j, s
    double nu = 0.05;       // only meaningful for Student's-t
};

struct TrainConfig {
    int iterations = 3000;
    int batch_frames = 2;
    int n_components = 150;
    int sh_degree = 1;
    LearningRates lr;
    double friction = 0.1;       // in (0, 1]
    double temperature = 1e-8;   // >= 0
    double brownian_eps = 0.001; // exploration noise, world units
    double dt = 1.0 / 30.0;
    int relocation_interval = 500;
    double relocation_fraction = 0.05;
    int confidence_interval = 50;
    double dynamics_warmup = 0.3; // fraction of training with a,j,s frozen
    std::uint64_t seed = 1;
    LossWeights weights;
    KernelKind kernel_kind = KernelKind::Gaussian;
    double nu_init = 1e6;
    double scale_max = 1e3; // upper clamp on exp(log_scale)
    bool baseline = false;  // plain deterministic splatting mode
    bool no_confidence = false;
    bool no_higher_order = false;
    RenderConfig render;
    ConfidenceSpec confidence;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc);

/// Momentum buffers share the GradientRecord shape.
struct SghmcState {
    GradientRecord momentum;
    std::uint64_t iteration = 0;
    std::mt19937_64 rng;
};

/// Per class with rate eta: m <- (1-friction)m - eta*grad + N(0,
/// 2*friction*eta*temperature); theta <- theta + m. Quaternions are
/// renormalized, u floored at 1e-4, scales clamped to the validation bounds,
/// nu floored at 0.5. Throws on non-finite gradients, naming the component.
void sghmc_step(ComponentSet& set, const GradientRecord& grads, SghmcState& state,
                const TrainConfig& cfg);

/// n components seeded in the camera-frustum intersection volume, scales
/// from nearest-neighbor spacing, flat opacity 0.1, mean-color degree-0
/// color, zero dynamics. Deterministic under the generator state.
ComponentSet init_components(const TrainConfig& cfg, const LoadedDataset& data,
                             int n, std::mt19937_64& rng);

/// Single inverse-CDF draw from unnormalized non-negative weights; uniform
/// fallback when all weights vanish.
std::size_t weighted_index_sample(const std::vector<double>& weights,
                                  std::mt19937_64& rng);

/// Re-seeds the floor(relocation_fraction * N) lowest-confidence components
/// from donors sampled proportionally to conf * grad_magnitude. Component
/// count is unchanged; relocated momenta are cleared when state is given.
void relocate_components(ComponentSet& set, const std::vector<double>& conf,
                         const std::vector<double>& grad_magnitudes,
                         const TrainConfig& cfg, std::mt19937_64& rng,
                         SghmcState* state = nullptr);

struct TrainLogEntry {
    std::uint64_t iteration = 0;
    LossBreakdown breakdown;
    double wall_ms = 0.0;
};

struct TrainResult {
    ComponentSet set;
    std::vector<TrainLogEntry> log;
};

/// The MAP loop: sample a batch (never the holdout camera), perturb
/// positions, evaluate the total loss, take an SGHMC step, periodically
/// relocate and refresh the confidence cache.
TrainResult train(const LoadedDataset& data, const TrainConfig& cfg);

std::string train_log_to_ndjson(const std::vector<TrainLogEntry>& log);

} // namespace graphixs
