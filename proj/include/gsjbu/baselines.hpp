#pragma once

#include "gsjbu/planar_map.hpp"

namespace gsjbu {

struct MetricReport {
    double psnr_db = 0.0; // +inf when the inputs are identical
    double rmse = 0.0;
    double delta1 = 0.0; // fraction with max(pred/gt, gt/pred) < 1.25
    double mae = 0.0;
};

// Fixed-parameter joint bilateral upsampling: one isotropic spatial Gaussian
// (sigma_spatial, HR pixel units) and one range Gaussian shared by all pixels,
// window of Chebyshev radius `radius` in LR pixels around the anchor,
// normalized by the plain weight sum. The range term compares guidance_hr at
// p against the bilinear downsample of guidance_hr at q.
PlanarMap jbu_classic(const PlanarMap& lr_payload, const PlanarMap& guidance_hr,
                      double sigma_spatial, double sigma_range, int radius);

// 10 log10(peak^2 / mse); +inf for identical maps.
double psnr(const PlanarMap& a, const PlanarMap& b, double peak = 1.0);

// Depth-style error report over pixels where valid_mask is nonzero (all
// pixels when null). gt must be strictly positive on the valid set; a
// non-positive prediction counts as a delta1 miss. psnr_db uses peak 1.
MetricReport depth_metrics(const PlanarMap& pred, const PlanarMap& gt,
                           const PlanarMap* valid_mask = nullptr);

} // namespace gsjbu
