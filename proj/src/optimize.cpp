#include "gsjbu/optimize.hpp"

#include <cmath>

#include "gsjbu/grad.hpp"
#include "gsjbu/resample.hpp"

namespace gsjbu {

namespace {

// Positive floors keep the clamped sigma steps from collapsing a kernel.
constexpr double kMinSigmaSpatial = 1e-2;
constexpr double kMinSigmaRange = 1e-3;

} // namespace

void OptimConfig::validate() const {
    if (iterations < 1)
        throw InvalidInput("optim config: iterations must be >= 1, got " + std::to_string(iterations));
    if (!(learning_rate > 0.0))
        throw InvalidInput("optim config: learning rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw InvalidInput("optim config: betas must lie in [0, 1)");
    if (!(adam_eps > 0.0))
        throw InvalidInput("optim config: adam_eps must be positive");
}

FitResult fit(const PlanarMap& guidance_hr, ScaleFactor scale, const RenderConfig& render_cfg,
              const OptimConfig& optim_cfg) {
    render_cfg.validate();
    optim_cfg.validate();
    for (int c = 0; c < guidance_hr.channels(); ++c)
        for (float v : guidance_hr.channel(c))
            if (v < 0.f || v > 1.f)
                throw InvalidInput("fit: guidance value " + std::to_string(v) + " outside [0, 1]");

    PlanarMap guidance_lr = downsample_bilinear(guidance_hr, scale);
    KernelField field = init_field(guidance_lr.height(), guidance_lr.width(), scale);
    const std::size_t n = field.pixel_count();

    // Master copies of the parameters: raw sigmas, raw theta.
    std::vector<double> sx(n, static_cast<double>(scale.value()));
    std::vector<double> sy(n, static_cast<double>(scale.value()));
    std::vector<double> th(n, 0.0);
    std::vector<double> sr(n, 0.12);

    FitResult result;
    OptimState& st = result.state;
    st.m.assign(4 * n, 0.0);
    st.v.assign(4 * n, 0.0);
    st.loss_history.reserve(optim_cfg.iterations);

    auto sync_field = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            field.log_sigma_x[i] = static_cast<float>(std::log(sx[i]));
            field.log_sigma_y[i] = static_cast<float>(std::log(sy[i]));
            field.theta[i] = static_cast<float>(th[i]);
            field.log_sigma_r[i] = static_cast<float>(std::log(sr[i]));
        }
    };

    const double b1 = optim_cfg.adam_beta1, b2 = optim_cfg.adam_beta2;
    for (int it = 0; it < optim_cfg.iterations; ++it) {
        sync_field();
        LossAndGrad lg = loss_and_grad(field, guidance_lr, guidance_hr, render_cfg);
        if (!std::isfinite(lg.loss))
            throw NumericError("fit: non-finite loss at iteration " + std::to_string(it));
        st.loss_history.push_back(lg.loss);
        if (lg.loss < st.best_loss) {
            st.best_loss = lg.loss;
            st.best_field = field;
        }

        st.t = it + 1;
        double c1 = 1.0 - std::pow(b1, st.t);
        double c2 = 1.0 - std::pow(b2, st.t);
        auto adam = [&](std::size_t slot, std::size_t i, double g, double& p) {
            std::size_t j = slot * n + i;
            st.m[j] = b1 * st.m[j] + (1.0 - b1) * g;
            st.v[j] = b2 * st.v[j] + (1.0 - b2) * g * g;
            p -= optim_cfg.learning_rate * (st.m[j] / c1) / (std::sqrt(st.v[j] / c2) + optim_cfg.adam_eps);
        };
        for (std::size_t i = 0; i < n; ++i) {
            // Chain rule from the stored log parameterization to raw sigma.
            adam(0, i, static_cast<double>(lg.grads.d_log_sigma_x[i]) / sx[i], sx[i]);
            adam(1, i, static_cast<double>(lg.grads.d_log_sigma_y[i]) / sy[i], sy[i]);
            adam(2, i, static_cast<double>(lg.grads.d_theta[i]), th[i]);
            adam(3, i, static_cast<double>(lg.grads.d_log_sigma_r[i]) / sr[i], sr[i]);
            sx[i] = std::max(sx[i], kMinSigmaSpatial);
            sy[i] = std::max(sy[i], kMinSigmaSpatial);
            sr[i] = std::max(sr[i], kMinSigmaRange);
        }
    }

    result.field = st.best_field;
    return result;
}

RenderOutput upsample(const PlanarMap& guidance_hr, const PlanarMap& lr_payload,
                      const RenderConfig& render_cfg, const OptimConfig& optim_cfg) {
    int h = guidance_hr.height(), w = guidance_hr.width();
    int lh = lr_payload.height(), lw = lr_payload.width();
    if (h % lh != 0 || w % lw != 0 || h / lh != w / lw)
        throw InvalidInput("upsample: guidance " + std::to_string(h) + "x" + std::to_string(w) +
                           " is not an equal integer multiple of payload " + std::to_string(lh) + "x" +
                           std::to_string(lw));
    ScaleFactor scale(h / lh);
    FitResult fitted = fit(guidance_hr, scale, render_cfg, optim_cfg);
    return render(lr_payload, fitted.field, guidance_hr, render_cfg);
}

} // namespace gsjbu
