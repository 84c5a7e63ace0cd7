#pragma once

#include <vector>

#include "gsjbu/kernel_field.hpp"
#include "gsjbu/planar_map.hpp"

namespace gsjbu {

struct RenderStats {
    std::vector<float> channel_min; // over the produced map, one entry per channel
    std::vector<float> channel_max;
    double seconds = 0.0;
};

struct RenderOutput {
    PlanarMap map;
    RenderStats stats;
};

// Upsamples lr_payload to HR by normalized splatting: each HR pixel is a
// convex combination of the LR payload values inside its stencil. The range
// term compares guidance_hr at p against the bilinear downsample of
// guidance_hr at q; payload channel count is independent of the guidance's.
RenderOutput render(const PlanarMap& lr_payload, const KernelField& field,
                    const PlanarMap& guidance_hr, const RenderConfig& cfg);

// render() for per-pixel probability simplexes. Validates that every LR pixel
// of lr_probs sums to 1 (tolerance 1e-4) with nonnegative entries; convex
// mixing then keeps the outputs on the simplex.
RenderOutput render_probability(const PlanarMap& lr_probs, const KernelField& field,
                                const PlanarMap& guidance_hr, const RenderConfig& cfg);

// Self-reconstruction: renders with the downsampled guidance as its own
// payload. This is the image the fitting loss compares against guidance_hr.
RenderOutput reconstruct_guidance(const KernelField& field, const PlanarMap& guidance_hr,
                                  const RenderConfig& cfg);

} // namespace gsjbu
