#include "gsjbu/render.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "gsjbu/parallel.hpp"
#include "gsjbu/resample.hpp"

namespace gsjbu {

namespace {

RenderOutput render_core(const PlanarMap& payload, const KernelField& field, const PlanarMap& guidance_lr,
                         const PlanarMap& guidance_hr, const RenderConfig& cfg) {
    detail::validate_field_inputs(field, guidance_lr, guidance_hr, cfg);
    if (payload.height() != field.lr_height || payload.width() != field.lr_width)
        throw InvalidInput("payload dims " + std::to_string(payload.height()) + "x" +
                           std::to_string(payload.width()) + " do not match field grid " +
                           std::to_string(field.lr_height) + "x" + std::to_string(field.lr_width));

    auto t0 = std::chrono::steady_clock::now();
    const int hh = guidance_hr.height(), hw = guidance_hr.width();
    const int cc = payload.channels();
    RenderOutput out{PlanarMap(cc, hh, hw), {}};
    const detail::KernelTables tables = detail::build_tables(field, cfg);

    parallel_for_rows(hh, [&](int py) {
        detail::StencilWorkspace ws;
        std::vector<double> acc(cc);
        for (int px = 0; px < hw; ++px) {
            detail::compute_stencil(field, tables, py, px, guidance_lr, guidance_hr, cfg, ws);
            std::fill(acc.begin(), acc.end(), 0.0);
            for (const auto& k : ws.items) {
                if (k.w == 0.0)
                    continue;
                for (int c = 0; c < cc; ++c)
                    acc[c] += k.w * static_cast<double>(payload.at(c, k.qy, k.qx));
            }
            for (int c = 0; c < cc; ++c)
                out.map.at(c, py, px) = static_cast<float>(acc[c]);
        }
    });

    out.stats.channel_min.assign(cc, std::numeric_limits<float>::infinity());
    out.stats.channel_max.assign(cc, -std::numeric_limits<float>::infinity());
    for (int c = 0; c < cc; ++c)
        for (float v : out.map.channel(c)) {
            out.stats.channel_min[c] = std::min(out.stats.channel_min[c], v);
            out.stats.channel_max[c] = std::max(out.stats.channel_max[c], v);
        }
    out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace

RenderOutput render(const PlanarMap& lr_payload, const KernelField& field,
                    const PlanarMap& guidance_hr, const RenderConfig& cfg) {
    PlanarMap guidance_lr = downsample_bilinear(guidance_hr, field.scale);
    return render_core(lr_payload, field, guidance_lr, guidance_hr, cfg);
}

RenderOutput render_probability(const PlanarMap& lr_probs, const KernelField& field,
                                const PlanarMap& guidance_hr, const RenderConfig& cfg) {
    for (int y = 0; y < lr_probs.height(); ++y)
        for (int x = 0; x < lr_probs.width(); ++x) {
            double sum = 0.0;
            for (int c = 0; c < lr_probs.channels(); ++c) {
                float v = lr_probs.at(c, y, x);
                if (v < -1e-7f)
                    throw InvalidInput("probability payload has negative entry " + std::to_string(v) +
                                       " at pixel (" + std::to_string(y) + ", " + std::to_string(x) +
                                       ") channel " + std::to_string(c));
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-4)
                throw InvalidInput("probability payload sums to " + std::to_string(sum) + " at pixel (" +
                                   std::to_string(y) + ", " + std::to_string(x) + "), expected 1");
        }
    return render(lr_probs, field, guidance_hr, cfg);
}

RenderOutput reconstruct_guidance(const KernelField& field, const PlanarMap& guidance_hr,
                                  const RenderConfig& cfg) {
    PlanarMap guidance_lr = downsample_bilinear(guidance_hr, field.scale);
    return render_core(guidance_lr, field, guidance_lr, guidance_hr, cfg);
}

} // namespace gsjbu
