/// @file metrics.hpp
/// @brief Evaluation metrics: PSNR on [0,1] range, multi-scale SSIM, the
/// DSSIM dissimilarity, and holdout-sequence evaluation reports.

#pragma once

#include "graphixs/objective.hpp"
#include "graphixs/types.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace graphixs {

/// 10*log10(1/MSE) over all channels; identical images cap at 100 dB.
double psnr(const Image& a, const Image& b);

/// Standard 5-scale MS-SSIM with the canonical weights; small images fall
/// back to fewer dyadic scales with renormalized weights. Throws when the
/// shortest side is below 2.
double ms_ssim(const Image& a, const Image& b);

/// (1 - ms_ssim) / 2.
double dssim(const Image& a, const Image& b);

struct FrameMetrics {
    double timestamp = 0.0;
    double psnr = 0.0;
    double dssim = 0.0;
};

struct EvalReport {
    std::vector<FrameMetrics> frames; // holdout sequence, time-ordered
    double mean_psnr = 0.0;
    double mean_dssim = 0.0;
    nlohmann::json config_echo; // scene/manifest references, degradation chain

    nlohmann::json to_json() const;
    std::string to_table() const; // flat tab-separated rows for plotting
};

/// Renders the holdout camera at every holdout timestamp and scores against
/// the stored frames.
EvalReport evaluate(const ComponentSet& set, const LoadedDataset& data,
                    const RenderConfig& cfg = {});

} // namespace graphixs
