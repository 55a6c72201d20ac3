#include "graphixs/metrics.hpp"

#include "graphixs/renderer.hpp"
#include "graphixs/ssim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace graphixs {

namespace {

constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

} // namespace

double psnr(const Image& a, const Image& b) {
    if (!a.same_size(b)) throw std::invalid_argument("psnr: dimension mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.pixels.size());
    if (mse <= 1e-10) return 100.0; // exact-match cap
    return 10.0 * std::log10(1.0 / mse);
}

double ms_ssim(const Image& a, const Image& b) {
    if (!a.same_size(b)) throw std::invalid_argument("ms_ssim: dimension mismatch");
    const int min_dim = std::min(a.width, a.height);
    if (min_dim < 2) throw std::invalid_argument("ms_ssim: image too small for one scale");

    int scales = 0;
    for (int d = min_dim; d >= 2 && scales < 5; d /= 2) ++scales;

    double weight_sum = 0.0;
    for (int s = 0; s < scales; ++s) weight_sum += kMsSsimWeights[s];

    Image cur_a = a, cur_b = b;
    double result = 1.0;
    for (int s = 0; s < scales; ++s) {
        const SsimStats stats = ssim_stats(cur_a, cur_b);
        const double val = s + 1 == scales ? stats.mean_ssim : stats.mean_cs;
        const double w = kMsSsimWeights[s] / weight_sum;
        if (val <= 0.0) return 0.0;
        result *= std::pow(val, w);
        if (s + 1 < scales) {
            cur_a = downsample2x(cur_a);
            cur_b = downsample2x(cur_b);
        }
    }
    return result;
}

double dssim(const Image& a, const Image& b) { return 0.5 * (1.0 - ms_ssim(a, b)); }

nlohmann::json EvalReport::to_json() const {
    nlohmann::json doc;
    doc["mean_psnr"] = mean_psnr;
    doc["mean_dssim"] = mean_dssim;
    doc["lpips"] = nullptr; // unavailable: needs a pretrained perceptual network
    doc["config"] = config_echo;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& f : frames)
        rows.push_back({{"timestamp", f.timestamp}, {"psnr", f.psnr}, {"dssim", f.dssim}});
    doc["frames"] = rows;
    return doc;
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << "timestamp\tpsnr\tdssim\n";
    for (const auto& f : frames)
        out << f.timestamp << "\t" << f.psnr << "\t" << f.dssim << "\n";
    out << "mean\t" << mean_psnr << "\t" << mean_dssim << "\n";
    return out.str();
}

EvalReport evaluate(const ComponentSet& set, const LoadedDataset& data,
                    const RenderConfig& cfg) {
    const CameraModel& holdout = data.manifest.holdout_camera();

    EvalReport report;
    for (std::size_t f = 0; f < data.manifest.frames.size(); ++f) {
        const auto& frame = data.manifest.frames[f];
        if (frame.camera_id != holdout.id) continue;
        const Image rendered = render_image(set, holdout, frame.timestamp, cfg);
        FrameMetrics fm;
        fm.timestamp = frame.timestamp;
        fm.psnr = psnr(rendered, data.images.at(f));
        fm.dssim = dssim(rendered, data.images.at(f));
        report.frames.push_back(fm);
    }
    if (report.frames.empty())
        throw std::runtime_error("evaluate: holdout camera has no frames");

    std::sort(report.frames.begin(), report.frames.end(),
              [](const FrameMetrics& x, const FrameMetrics& y) {
                  return x.timestamp < y.timestamp;
              });
    for (const auto& f : report.frames) {
        report.mean_psnr += f.psnr;
        report.mean_dssim += f.dssim;
    }
    report.mean_psnr /= static_cast<double>(report.frames.size());
    report.mean_dssim /= static_cast<double>(report.frames.size());
    report.config_echo["degradations"] = data.manifest.degradation_chain;
    return report;
}

} // namespace graphixs
