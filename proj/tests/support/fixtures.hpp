#pragma once

#include <cstdint>
#include <random>

#include "gsjbu/kernel_field.hpp"
#include "gsjbu/planar_map.hpp"

namespace fixtures {

gsjbu::PlanarMap random_map(std::mt19937_64& rng, int channels, int height, int width,
                            float lo = 0.f, float hi = 1.f);

// Synthetic photo-like image: smooth low-frequency background, a dozen random
// shapes (ellipses, boxes, half-planes) with per-channel color shifts, fine
// noise, normalized into [0.05, 0.95].
gsjbu::PlanarMap natural_image(std::uint64_t seed, int size, int channels = 3);

// Deterministic piecewise-constant depth scene, kind in {0, 1, 2}, strictly
// positive values.
gsjbu::PlanarMap depth_scene(int kind, int size);

// Random anisotropic field. Sigma draws stay clear of the window-radius
// switching points (sigma/scale near 1.0 or 1.5 with alpha_dyn = 2) so that
// small parameter perturbations cannot change the truncation window.
gsjbu::KernelField random_field(std::mt19937_64& rng, int lr_height, int lr_width, int scale);

// Instance for finite-difference gradient checks. Guidance draws are
// rejected until every reconstruction residual is at least 5e-3 in
// magnitude, keeping h = 1e-3 probes away from the L1 kink.
struct GradInstance {
    gsjbu::KernelField field;
    gsjbu::PlanarMap guidance_lr;
    gsjbu::PlanarMap guidance_hr;
};
GradInstance grad_instance(std::uint64_t seed, int lr_height, int lr_width, int scale, int channels);

} // namespace fixtures
