#include "gsjbu/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gsjbu/parallel.hpp"
#include "gsjbu/resample.hpp"

namespace gsjbu {

PlanarMap jbu_classic(const PlanarMap& lr_payload, const PlanarMap& guidance_hr,
                      double sigma_spatial, double sigma_range, int radius) {
    const int lh = lr_payload.height(), lw = lr_payload.width();
    const int hh = guidance_hr.height(), hw = guidance_hr.width();
    if (hh % lh != 0 || hw % lw != 0 || hh / lh != hw / lw)
        throw InvalidInput("jbu: guidance " + std::to_string(hh) + "x" + std::to_string(hw) +
                           " is not an equal integer multiple of payload " + std::to_string(lh) + "x" +
                           std::to_string(lw));
    if (!(sigma_spatial > 0.0) || !(sigma_range > 0.0))
        throw InvalidInput("jbu: sigmas must be positive");
    if (radius < 0)
        throw InvalidInput("jbu: radius must be >= 0");

    const int s = hh / lh;
    ScaleFactor scale(s);
    PlanarMap g_lr = downsample_bilinear(guidance_hr, scale);
    const int cc = lr_payload.channels();
    const int gc = guidance_hr.channels();
    const double inv_2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial);
    const double inv_2sr = 1.0 / (2.0 * sigma_range * sigma_range);

    PlanarMap out(cc, hh, hw);
    parallel_for_rows(hh, [&](int py) {
        std::vector<double> acc(cc);
        for (int px = 0; px < hw; ++px) {
            const int q0y = py / s, q0x = px / s;
            const int ylo = std::max(0, q0y - radius), yhi = std::min(lh - 1, q0y + radius);
            const int xlo = std::max(0, q0x - radius), xhi = std::min(lw - 1, q0x + radius);
            std::fill(acc.begin(), acc.end(), 0.0);
            double denom = 0.0;
            for (int qy = ylo; qy <= yhi; ++qy) {
                double dy = py - center_hr_coord(qy, s);
                for (int qx = xlo; qx <= xhi; ++qx) {
                    double dx = px - center_hr_coord(qx, s);
                    double d2 = 0.0;
                    for (int ch = 0; ch < gc; ++ch) {
                        double d = static_cast<double>(guidance_hr.at(ch, py, px)) -
                                   static_cast<double>(g_lr.at(ch, qy, qx));
                        d2 += d * d;
                    }
                    double w = std::exp(-(dy * dy + dx * dx) * inv_2ss - d2 * inv_2sr);
                    denom += w;
                    for (int c = 0; c < cc; ++c)
                        acc[c] += w * static_cast<double>(lr_payload.at(c, qy, qx));
                }
            }
            if (denom > 0.0 && std::isfinite(denom)) {
                for (int c = 0; c < cc; ++c)
                    out.at(c, py, px) = static_cast<float>(acc[c] / denom);
            } else {
                // Every weight underflowed: keep the anchor's value.
                for (int c = 0; c < cc; ++c)
                    out.at(c, py, px) = lr_payload.at(c, q0y, q0x);
            }
        }
    });
    return out;
}

double psnr(const PlanarMap& a, const PlanarMap& b, double peak) {
    if (!a.same_shape(b))
        throw InvalidInput("psnr: maps differ in shape");
    if (!(peak > 0.0))
        throw InvalidInput("psnr: peak must be positive");
    double se = 0.0;
    const float* pa = a.data();
    const float* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        se += d * d;
    }
    double mse = se / a.size();
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

MetricReport depth_metrics(const PlanarMap& pred, const PlanarMap& gt, const PlanarMap* valid_mask) {
    if (!pred.same_shape(gt))
        throw InvalidInput("depth_metrics: pred and gt differ in shape");
    if (valid_mask &&
        (valid_mask->channels() != 1 || valid_mask->height() != pred.height() ||
         valid_mask->width() != pred.width()))
        throw InvalidInput("depth_metrics: mask must be single-channel with matching dims");

    double se = 0.0, ae = 0.0;
    std::size_t n = 0, hits = 0;
    for (int c = 0; c < pred.channels(); ++c)
        for (int y = 0; y < pred.height(); ++y)
            for (int x = 0; x < pred.width(); ++x) {
                if (valid_mask && valid_mask->at(0, y, x) == 0.f)
                    continue;
                double p = pred.at(c, y, x);
                double g = gt.at(c, y, x);
                if (!(g > 0.0))
                    throw InvalidInput("depth_metrics: ground truth must be positive on valid pixels, got " +
                                       std::to_string(g) + " at (" + std::to_string(y) + ", " +
                                       std::to_string(x) + ")");
                double d = p - g;
                se += d * d;
                ae += std::abs(d);
                if (p > 0.0 && std::max(p / g, g / p) < 1.25)
                    ++hits;
                ++n;
            }
    if (n == 0)
        throw InvalidInput("depth_metrics: no valid pixels");

    MetricReport r;
    double mse = se / n;
    r.rmse = std::sqrt(mse);
    r.mae = ae / n;
    r.delta1 = static_cast<double>(hits) / n;
    r.psnr_db = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
    return r;
}

} // namespace gsjbu
