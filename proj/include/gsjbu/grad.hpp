#pragma once

#include <vector>

#include "gsjbu/kernel_field.hpp"
#include "gsjbu/planar_map.hpp"

namespace gsjbu {

// Reverse-mode gradients of the reconstruction loss, one plane per kernel
// parameter, aligned with the KernelField grid.
struct GradField {
    int lr_height = 0;
    int lr_width = 0;
    std::vector<float> d_log_sigma_x;
    std::vector<float> d_log_sigma_y;
    std::vector<float> d_theta;
    std::vector<float> d_log_sigma_r;
};

struct LossAndGrad {
    double loss = 0.0;
    GradField grads;
};

// Mean absolute error between the self-reconstruction (render with
// guidance_lr as payload) and guidance_hr, averaged over pixels and channels.
double reconstruction_loss(const KernelField& field, const PlanarMap& guidance_lr,
                           const PlanarMap& guidance_hr, const RenderConfig& cfg);

// Loss plus its exact gradients w.r.t. log_sigma_x/y, theta, log_sigma_r.
// The truncation window is treated as frozen: radii do not participate in
// differentiation. Accumulation is double precision, per-row partials merged
// in fixed row order, so results are identical for any thread count.
LossAndGrad loss_and_grad(const KernelField& field, const PlanarMap& guidance_lr,
                          const PlanarMap& guidance_hr, const RenderConfig& cfg);

// Central-difference check of loss_and_grad over every parameter of every LR
// pixel. Steps by +/-h in the stored float32 parameter and uses the actually
// realized step width. Returns the worst relative error
// |analytic - fd| / max(|analytic|, |fd|, 1e-8).
double check_gradients(const KernelField& field, const PlanarMap& guidance_lr,
                       const PlanarMap& guidance_hr, const RenderConfig& cfg, double h = 1e-3);

} // namespace gsjbu
