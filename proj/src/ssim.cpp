#include "graphixs/ssim.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace graphixs {

namespace {

constexpr int kWindow = 11;
constexpr int kHalf = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWindow>& window_taps() {
    static const std::array<double, kWindow> taps = [] {
        std::array<double, kWindow> w{};
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double x = i - kHalf;
            w[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
            sum += w[i];
        }
        for (auto& v : w) v /= sum;
        return w;
    }();
    return taps;
}

using Channel = std::vector<double>; // width*height scalars

// 1D tap-weight sums inside the image, per coordinate; the border
// renormalization factors are products of these.
std::vector<double> axis_norms(int n) {
    const auto& w = window_taps();
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int k = -kHalf; k <= kHalf; ++k)
            if (i + k >= 0 && i + k < n) sum += w[static_cast<std::size_t>(k + kHalf)];
        z[static_cast<std::size_t>(i)] = sum;
    }
    return z;
}

// Separable unnormalized convolution (kernel is symmetric, so this is also
// the correlation).
void conv_unnorm(const Channel& in, int width, int height, Channel& out, Channel& tmp) {
    const auto& w = window_taps();
    tmp.assign(in.size(), 0.0);
    out.assign(in.size(), 0.0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int k = -kHalf; k <= kHalf; ++k) {
                const int xx = x + k;
                if (xx < 0 || xx >= width) continue;
                acc += w[static_cast<std::size_t>(k + kHalf)] *
                       in[static_cast<std::size_t>(y) * width + xx];
            }
            tmp[static_cast<std::size_t>(y) * width + x] = acc;
        }
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int k = -kHalf; k <= kHalf; ++k) {
                const int yy = y + k;
                if (yy < 0 || yy >= height) continue;
                acc += w[static_cast<std::size_t>(k + kHalf)] *
                       tmp[static_cast<std::size_t>(yy) * width + x];
            }
            out[static_cast<std::size_t>(y) * width + x] = acc;
        }
}

// blur(p) = conv(in)(p) / Z(p)
void blur(const Channel& in, int width, int height, const std::vector<double>& zx,
          const std::vector<double>& zy, Channel& out, Channel& tmp) {
    conv_unnorm(in, width, height, out, tmp);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out[static_cast<std::size_t>(y) * width + x] /=
                zx[static_cast<std::size_t>(x)] * zy[static_cast<std::size_t>(y)];
}

// adjoint of blur: A(q) = conv(F / Z)(q)
void adjoint_blur(const Channel& field, int width, int height,
                  const std::vector<double>& zx, const std::vector<double>& zy,
                  Channel& out, Channel& tmp, Channel& scratch) {
    scratch.resize(field.size());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            scratch[static_cast<std::size_t>(y) * width + x] =
                field[static_cast<std::size_t>(y) * width + x] /
                (zx[static_cast<std::size_t>(x)] * zy[static_cast<std::size_t>(y)]);
    conv_unnorm(scratch, width, height, out, tmp);
}

void extract_channel(const Image& img, int ch, Channel& out) {
    out.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out[static_cast<std::size_t>(y) * img.width + x] = img.at(x, y, ch);
}

struct ChannelMaps {
    Channel mu1, mu2, m11, m22, m12;
};

void compute_maps(const Channel& a, const Channel& b, int width, int height,
                  const std::vector<double>& zx, const std::vector<double>& zy,
                  ChannelMaps& maps) {
    Channel tmp, prod(a.size());
    blur(a, width, height, zx, zy, maps.mu1, tmp);
    blur(b, width, height, zx, zy, maps.mu2, tmp);
    for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * a[i];
    blur(prod, width, height, zx, zy, maps.m11, tmp);
    for (std::size_t i = 0; i < b.size(); ++i) prod[i] = b[i] * b[i];
    blur(prod, width, height, zx, zy, maps.m22, tmp);
    for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
    blur(prod, width, height, zx, zy, maps.m12, tmp);
}

} // namespace

SsimStats ssim_stats(const Image& a, const Image& b) {
    if (!a.same_size(b)) throw std::invalid_argument("ssim: dimension mismatch");
    const int width = a.width, height = a.height;
    const auto zx = axis_norms(width);
    const auto zy = axis_norms(height);

    double sum_ssim = 0.0, sum_cs = 0.0;
    Channel ca, cb;
    ChannelMaps maps;
    for (int ch = 0; ch < 3; ++ch) {
        extract_channel(a, ch, ca);
        extract_channel(b, ch, cb);
        compute_maps(ca, cb, width, height, zx, zy, maps);
        for (std::size_t i = 0; i < ca.size(); ++i) {
            const double mu1 = maps.mu1[i], mu2 = maps.mu2[i];
            const double var1 = maps.m11[i] - mu1 * mu1;
            const double var2 = maps.m22[i] - mu2 * mu2;
            const double cov = maps.m12[i] - mu1 * mu2;
            const double l = (2.0 * mu1 * mu2 + kC1) / (mu1 * mu1 + mu2 * mu2 + kC1);
            const double cs = (2.0 * cov + kC2) / (var1 + var2 + kC2);
            sum_ssim += l * cs;
            sum_cs += cs;
        }
    }
    const double count = 3.0 * width * height;
    return SsimStats{sum_ssim / count, sum_cs / count};
}

double ssim(const Image& a, const Image& b) { return ssim_stats(a, b).mean_ssim; }

double ssim_with_grad(const Image& a, const Image& b, Image& d_a) {
    if (!a.same_size(b)) throw std::invalid_argument("ssim: dimension mismatch");
    const int width = a.width, height = a.height;
    const auto zx = axis_norms(width);
    const auto zy = axis_norms(height);
    const double inv_count = 1.0 / (3.0 * width * height);

    d_a = Image(width, height);
    double sum_ssim = 0.0;

    Channel ca, cb, tmp, scratch, adj;
    Channel f_mu(static_cast<std::size_t>(width) * height);
    Channel f_m11(f_mu.size());
    Channel f_m12(f_mu.size());
    ChannelMaps maps;

    for (int ch = 0; ch < 3; ++ch) {
        extract_channel(a, ch, ca);
        extract_channel(b, ch, cb);
        compute_maps(ca, cb, width, height, zx, zy, maps);

        for (std::size_t i = 0; i < ca.size(); ++i) {
            const double mu1 = maps.mu1[i], mu2 = maps.mu2[i];
            const double var1 = maps.m11[i] - mu1 * mu1;
            const double var2 = maps.m22[i] - mu2 * mu2;
            const double cov = maps.m12[i] - mu1 * mu2;
            const double a1 = 2.0 * mu1 * mu2 + kC1;
            const double b1 = mu1 * mu1 + mu2 * mu2 + kC1;
            const double a2 = 2.0 * cov + kC2;
            const double b2 = var1 + var2 + kC2;
            const double l = a1 / b1;
            const double cs = a2 / b2;
            sum_ssim += l * cs;

            const double ds_dvar1 = -l * a2 / (b2 * b2);
            const double ds_dcov = l * 2.0 / b2;
            const double ds_dmu1_direct = cs * (2.0 * mu2 * b1 - a1 * 2.0 * mu1) / (b1 * b1);
            // blur-output partials: mu1 also feeds var1 and cov
            f_mu[i] = inv_count * (ds_dmu1_direct - 2.0 * mu1 * ds_dvar1 - mu2 * ds_dcov);
            f_m11[i] = inv_count * ds_dvar1;
            f_m12[i] = inv_count * ds_dcov;
        }

        adjoint_blur(f_mu, width, height, zx, zy, adj, tmp, scratch);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                d_a.at(x, y, ch) += adj[static_cast<std::size_t>(y) * width + x];

        adjoint_blur(f_m11, width, height, zx, zy, adj, tmp, scratch);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                d_a.at(x, y, ch) += 2.0 * ca[static_cast<std::size_t>(y) * width + x] *
                                    adj[static_cast<std::size_t>(y) * width + x];

        adjoint_blur(f_m12, width, height, zx, zy, adj, tmp, scratch);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                d_a.at(x, y, ch) += cb[static_cast<std::size_t>(y) * width + x] *
                                    adj[static_cast<std::size_t>(y) * width + x];
    }

    return sum_ssim * inv_count;
}

Image downsample2x(const Image& img) {
    const int w = img.width / 2;
    const int h = img.height / 2;
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                out.at(x, y, ch) = 0.25 * (img.at(2 * x, 2 * y, ch) +
                                           img.at(2 * x + 1, 2 * y, ch) +
                                           img.at(2 * x, 2 * y + 1, ch) +
                                           img.at(2 * x + 1, 2 * y + 1, ch));
    return out;
}

} // namespace graphixs
