#pragma once

#include <string>

#include "gsjbu/kernel_field.hpp"
#include "gsjbu/planar_map.hpp"

namespace gsjbu {

// PNG, 8- or 16-bit, grayscale or RGB. Values map to [0, 1].
PlanarMap read_image(const std::string& path);

struct ImageWriteResult {
    long clamped = 0; // samples that fell outside [0, 1] and were clamped
};
ImageWriteResult write_image(const PlanarMap& map, const std::string& path, int bit_depth = 8);

// NPY (version 1.0/2.0), little-endian float32, C order. Rank 2 loads as a
// single-channel map, rank 3 as (C, H, W); other ranks are rejected, as are
// truncated payloads and non-finite values. Writing always emits rank 3.
PlanarMap read_array(const std::string& path);
void write_array(const PlanarMap& map, const std::string& path);

// Kernel field files: a 4-channel NPY holding the parameter planes
// (log_sigma_x, log_sigma_y, theta, log_sigma_r) plus a small text sidecar at
// <path>.meta recording scale, r_max and alpha_dyn. Reading restores the
// field bit-exactly and, when cfg_out is given, the window settings.
void write_kernel_field(const KernelField& field, const RenderConfig& cfg, const std::string& path);
KernelField read_kernel_field(const std::string& path, RenderConfig* cfg_out = nullptr);

} // namespace gsjbu
