/// @file ssim.hpp
/// @brief Single-scale SSIM with an analytic backward pass, plus the
/// downsampling and per-scale statistics MS-SSIM builds on.
///
/// Windows are 11x11 Gaussian (sigma 1.5), renormalized where they overhang
/// the border, with the standard stabilizers for a [0,1] dynamic range.

#pragma once

#include "graphixs/types.hpp"

namespace graphixs {

struct SsimStats {
    double mean_ssim = 0.0; // mean of the full luminance*contrast map
    double mean_cs = 0.0;   // mean of the contrast-structure map only
};

SsimStats ssim_stats(const Image& a, const Image& b);

/// Mean SSIM over pixels and channels. Throws on dimension mismatch.
double ssim(const Image& a, const Image& b);

/// Mean SSIM and its gradient w.r.t. the first image.
double ssim_with_grad(const Image& a, const Image& b, Image& d_a);

/// 2x2 average pooling; odd trailing row/column dropped.
Image downsample2x(const Image& img);

} // namespace graphixs
