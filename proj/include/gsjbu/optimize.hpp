#pragma once

#include <limits>
#include <vector>

#include "gsjbu/kernel_field.hpp"
#include "gsjbu/render.hpp"

namespace gsjbu {

struct OptimConfig {
    int iterations = 50;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    void validate() const;
};

// Trace of one fit. m/v are the Adam moments, laid out as four consecutive
// blocks (sigma_x, sigma_y, theta, sigma_r), one entry per LR pixel.
struct OptimState {
    std::vector<double> m;
    std::vector<double> v;
    int t = 0; // completed steps; equals loss_history.size()
    double best_loss = std::numeric_limits<double>::infinity();
    KernelField best_field;
    std::vector<double> loss_history; // loss at the start of each iteration
};

struct FitResult {
    KernelField field; // the best iterate, same as state.best_field
    OptimState state;
};

// Fits a kernel field to guidance_hr (values in [0, 1]) by minimizing the
// self-reconstruction loss with Adam. The sigmas step in their raw positive
// values (gradients are converted from the stored log parameterization and
// the results clamped to small positive floors); theta steps directly.
// Deterministic for a given input regardless of thread count.
FitResult fit(const PlanarMap& guidance_hr, ScaleFactor scale, const RenderConfig& render_cfg,
              const OptimConfig& optim_cfg);

// One-shot: fit a field to guidance_hr, then render lr_payload with it. The
// scale is inferred from the dimension ratio, which must be an equal integer
// on both axes.
RenderOutput upsample(const PlanarMap& guidance_hr, const PlanarMap& lr_payload,
                      const RenderConfig& render_cfg, const OptimConfig& optim_cfg);

} // namespace gsjbu
