#pragma once

#include <optional>
#include <vector>

#include "gsjbu/planar_map.hpp"

namespace gsjbu {

// Per-LR-pixel anisotropic Gaussian parameters. Spatial sigmas and the range
// sigma are stored as logs so they stay positive under optimization; theta is
// the rotation of the sigma_x axis in radians (pi-periodic by construction).
struct KernelField {
    int lr_height = 0;
    int lr_width = 0;
    ScaleFactor scale{1};
    std::vector<float> log_sigma_x;
    std::vector<float> log_sigma_y;
    std::vector<float> theta;
    std::vector<float> log_sigma_r;

    std::size_t pixel_count() const { return static_cast<std::size_t>(lr_height) * lr_width; }
    std::size_t index(int qy, int qx) const { return static_cast<std::size_t>(qy) * lr_width + qx; }
};

// Knobs for evaluating a field: window truncation and numeric guards.
struct RenderConfig {
    int r_max = 4;            // hard cap on the window radius, in LR pixels
    double alpha_dyn = 2.0;   // window reaches alpha_dyn sigmas of the anchor kernel
    double eps_denominator = 1e-12;
    void validate() const;
};

// Pass to init_field to get the scale-dependent default spatial sigma.
inline constexpr std::optional<double> kAutoSigmaSpatial = std::nullopt;

// Fresh field: isotropic spatial sigma (defaults to the scale factor itself),
// zero rotation, uniform range sigma.
KernelField init_field(int lr_height, int lr_width, ScaleFactor scale,
                       std::optional<double> init_sigma_spatial = kAutoSigmaSpatial,
                       double init_sigma_r = 0.12);

// Symmetric 2x2 spatial covariance, entries in (dx, dy) offset coordinates.
struct Sym2 {
    double xx, xy, yy;
};

// R(theta) diag(sigma_x^2, sigma_y^2) R(theta)^T for one LR pixel.
Sym2 covariance(const KernelField& field, int qy, int qx);

// log of the unnormalized spatial Gaussian between HR position p and the
// kernel centered at LR pixel q: -1/2 d^T Sigma^-1 d with d = p - center_hr(q).
double spatial_log_weight(const KernelField& field, double py, double px, int qy, int qx);

// log of the range (appearance) term: -|g_p - g_q|^2 / (2 sigma_r^2).
double range_log_weight(std::span<const float> g_p, std::span<const float> g_q, double sigma_r);

// Truncation radius in LR pixels for the kernel at q:
// ceil(alpha_dyn * max(sigma_x, sigma_y) / scale), clamped to [1, r_max].
int support_radius(const KernelField& field, int qy, int qx, const RenderConfig& cfg);

// Normalized contributor list for one HR pixel.
struct StencilEntry {
    int qy, qx;
    double weight;
};
struct WeightStencil {
    int py, px;
    std::vector<StencilEntry> entries; // weights sum to 1
};

// Full normalized stencil at HR pixel p. guidance_lr supplies the compare
// values at the LR contributors, guidance_hr the value at p.
WeightStencil stencil(const KernelField& field, int py, int px, const PlanarMap& guidance_lr,
                      const PlanarMap& guidance_hr, const RenderConfig& cfg);

namespace detail {

// One LR contributor to an HR pixel, with the intermediates the backward
// pass reuses (rotated-frame offsets, inverse squared sigmas, range distance).
struct Contribution {
    int qy, qx;
    double e1, e2;           // offset in the kernel's rotated frame
    double inv_sx2, inv_sy2; // 1 / sigma^2 along the rotated axes
    double range_d2;         // squared guidance distance
    double inv_sr2;          // 1 / sigma_r^2
    double log_w;            // unnormalized log weight (spatial + range)
    double w;                // normalized weight
};

struct StencilWorkspace {
    std::vector<Contribution> items;
    int anchor = 0; // index into items of the anchor contributor
};

// Quadratic term with a 0 * inf guard for degenerate sigmas.
inline double quad_term(double sq, double inv) {
    return sq == 0.0 ? 0.0 : sq * inv;
}

// Per-LR-pixel values that are constant across one render/backward pass,
// precomputed once so the per-HR-pixel loop stays free of transcendentals.
struct KernelTables {
    std::vector<double> cos_t, sin_t, inv_sx2, inv_sy2, inv_sr2;
    std::vector<int> radius;
};
KernelTables build_tables(const KernelField& field, const RenderConfig& cfg);

// Builds the contributor window around the anchor of HR pixel p and runs the
// max-shifted softmax. Caller guarantees shapes agree; p must be in bounds.
void compute_stencil(const KernelField& field, const KernelTables& tables, int py, int px,
                     const PlanarMap& guidance_lr, const PlanarMap& guidance_hr,
                     const RenderConfig& cfg, StencilWorkspace& ws);

// Shape cross-checks shared by the renderer, gradient engine and stencil API.
void validate_field_inputs(const KernelField& field, const PlanarMap& guidance_lr,
                           const PlanarMap& guidance_hr, const RenderConfig& cfg);

} // namespace detail

} // namespace gsjbu
