#pragma once

#include <utility>

#include "gsjbu/planar_map.hpp"

namespace gsjbu {

// Center of LR pixel q projected into HR pixel coordinates (one axis).
// Convention: pixel centers sit at half-integer offsets, so the projection is
// (q + 0.5) * s - 0.5 and scale 1 is the identity.
inline double center_hr_coord(int q, int s) {
    return (q + 0.5) * s - 0.5;
}

// Bounds-checked (y, x) projection of an LR grid position.
std::pair<double, double> center_hr(int qy, int qx, ScaleFactor scale, int lr_height, int lr_width);

// Average-pooling-free bilinear reduction: sample the HR map at the projected
// LR pixel centers. HR dims must be divisible by the scale; scale 1 copies.
PlanarMap downsample_bilinear(const PlanarMap& hr, ScaleFactor scale);

// Bilinear magnification by an integer factor, clamp-to-edge at the borders.
PlanarMap bilinear_upsample(const PlanarMap& lr, ScaleFactor scale);

} // namespace gsjbu
