/// @file objective.hpp
/// @brief The stochastic terms of the MAP objective: the energy-based image
/// likelihood with its regularizers, the component-confidence distribution,
/// the three parameter priors, and their combination into the total loss.

#pragma once

#include "graphixs/renderer.hpp"
#include "graphixs/types.hpp"

#include <optional>
#include <vector>

namespace graphixs {

struct LossWeights {
    double eps_dssim = 0.2;      // D-SSIM mix inside the image energy
    double eps_o = 0.001;        // opacity L1 weight
    double eps_sigma = 0.001;    // eigenvalue regularizer weight
    double eps_alpha = 0.002;    // confidence-energy weight
    double lambda_sigma = 0.001; // shape prior
    double lambda_h = 0.01;      // motion prior
    double lambda_op = 0.001;    // opacity prior
};

/// Unweighted loss parts; total carries the weighted sum.
struct LossBreakdown {
    double l1 = 0.0;
    double dssim = 0.0;
    double opacity_reg = 0.0;
    double eigen_reg = 0.0;
    double confidence = 0.0;
    double opacity_prior = 0.0;
    double shape_prior = 0.0;
    double motion_prior = 0.0;
    double total = 0.0;

    double weighted_sum(const LossWeights& w) const {
        return (1.0 - w.eps_dssim) * l1 + w.eps_dssim * dssim +
               w.eps_o * opacity_reg + w.eps_sigma * eigen_reg +
               w.eps_alpha * confidence + w.lambda_op * opacity_prior +
               w.lambda_sigma * shape_prior + w.lambda_h * motion_prior;
    }
};

/// Training-time structural similarity: single-scale, 11x11 Gaussian window.
/// The loss uses (1 - ssim_train)/2.
double ssim_train(const Image& a, const Image& b);

/// Sum over components and axes of exp(log_scale), the square roots of the
/// covariance eigenvalues. Unweighted.
double eigen_reg(const ComponentSet& set, double t);

struct ImageEnergy {
    double value = 0.0; // weighted image energy
    double l1 = 0.0;
    double dssim = 0.0;
    double opacity_reg = 0.0;
    double eigen_reg = 0.0;
    Image pixel_grad; // d(value)/d(rendered)
};

/// (1-eps)L1 + eps*DSSIM + eps_o * sum o + eps_sigma * eigen term. Pixel
/// gradients feed the renderer backward; the regularizer gradients land
/// directly on opacity and scale when a record is supplied.
ImageEnergy image_energy(const Image& rendered, const Image& gt,
                         const ComponentSet& set, double t, const LossWeights& w,
                         GradientRecord* grads = nullptr);

/// Minimum squared Mahalanobis distance from a half-line to a component at
/// time t, closed form.
double ray_min_mahalanobis_sq(const Ray& ray, const Component& c, double t);

/// v = o_eff(t) * kernel(min Mahalanobis^2 along the ray).
double soft_visibility(const Ray& ray, const Component& c, double t, KernelKind kind);

struct ConfidenceSpec {
    int grid_n = 16; // stratified pixel grid per training view
};

/// Normalized aggregate soft visibility per component over the stratified
/// ray set of every training frame. Sums to 1 by construction. Throws when
/// every component is invisible.
std::vector<double> component_confidence(const ComponentSet& set,
                                         const DatasetManifest& manifest,
                                         const ConfidenceSpec& spec);

/// eps_alpha * mean over components of -log(conf), floored at 1e-12.
double confidence_energy(const std::vector<double>& conf, const LossWeights& w);

/// Unweighted confidence energy with gradients through the soft-visibility
/// chain accumulated at weight grad_scale.
double confidence_energy_with_grad(const ComponentSet& set,
                                   const DatasetManifest& manifest,
                                   const ConfidenceSpec& spec, double grad_scale,
                                   GradientRecord* grads);

/// lambda_op * mean over times and components of o^2 * temporal bell * psi,
/// psi being the kernel mass proportional to the splat volume.
double opacity_prior_energy(const ComponentSet& set, const std::vector<double>& times,
                            const LossWeights& w);

/// lambda_sigma * mean squared Frobenius deviation from the mean covariance.
double shape_prior_energy(const ComponentSet& set, double t, const LossWeights& w);

/// lambda_h * mean of sqrt(det Sigma) * (|v|^2+|a|^2+|j|^2+|s|^2).
double motion_prior_energy(const ComponentSet& set, double t, const LossWeights& w);

// Unweighted prior cores with gradients accumulated at grad_scale.
double opacity_prior_raw(const ComponentSet& set, const std::vector<double>& times,
                         double grad_scale, GradientRecord* grads);
double shape_prior_raw(const ComponentSet& set, double t, double grad_scale,
                       GradientRecord* grads);
double motion_prior_raw(const ComponentSet& set, double t, double grad_scale,
                        GradientRecord* grads);

/// Ground-truth frames preloaded for training; images align with
/// manifest.frames.
struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<Image> images;
};

LoadedDataset load_dataset(const std::string& manifest_path);

struct ConfidenceCache {
    bool valid = false;
    double raw_energy = 0.0;
    GradientRecord grads; // already scaled by eps_alpha
};

struct TotalLossOptions {
    RenderConfig render;
    ConfidenceSpec confidence;
    bool no_confidence = false;
};

struct TotalLossResult {
    LossBreakdown breakdown;
    GradientRecord grads;
};

/// Image energies summed over the batch frames, confidence energy (fresh or
/// from the cache), and the three priors averaged over the batch timestamps.
/// Full gradients for every parameter.
TotalLossResult total_loss(const ComponentSet& set, const LoadedDataset& data,
                           const std::vector<std::size_t>& batch_frames,
                           const LossWeights& w, const TotalLossOptions& opts,
                           ConfidenceCache* cache = nullptr);

} // namespace graphixs
