#include "support/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gsjbu/render.hpp"
#include "gsjbu/resample.hpp"

namespace fixtures {

using namespace gsjbu;

PlanarMap random_map(std::mt19937_64& rng, int channels, int height, int width, float lo, float hi) {
    std::uniform_real_distribution<float> dist(lo, hi);
    PlanarMap m(channels, height, width);
    for (int c = 0; c < channels; ++c)
        for (float& v : m.channel(c))
            v = dist(rng);
    return m;
}

PlanarMap natural_image(std::uint64_t seed, int size, int channels) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Low-frequency background: a coarse random grid interpolated up.
    const int coarse = std::max(2, size / 16);
    PlanarMap grid = random_map(rng, channels, coarse, coarse);
    PlanarMap img(channels, size, size);
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < size; ++y) {
            double gy = std::clamp((y + 0.5) * coarse / size - 0.5, 0.0, coarse - 1.0);
            int y0 = static_cast<int>(gy), y1 = std::min(y0 + 1, coarse - 1);
            double fy = gy - y0;
            for (int x = 0; x < size; ++x) {
                double gx = std::clamp((x + 0.5) * coarse / size - 0.5, 0.0, coarse - 1.0);
                int x0 = static_cast<int>(gx), x1 = std::min(x0 + 1, coarse - 1);
                double fx = gx - x0;
                double v = (1 - fy) * ((1 - fx) * grid.at(c, y0, x0) + fx * grid.at(c, y0, x1)) +
                           fy * ((1 - fx) * grid.at(c, y1, x0) + fx * grid.at(c, y1, x1));
                img.at(c, y, x) = static_cast<float>(v);
            }
        }

    // Random shapes with per-channel color shifts give hard edges at
    // arbitrary orientations.
    for (int shape = 0; shape < 12; ++shape) {
        int kind = static_cast<int>(rng() % 3);
        double cy = (0.1 + 0.8 * unit(rng)) * size;
        double cx = (0.1 + 0.8 * unit(rng)) * size;
        double a = (0.06 + 0.22 * unit(rng)) * size;
        double b = (0.06 + 0.22 * unit(rng)) * size;
        double phi = unit(rng) * std::numbers::pi;
        double cph = std::cos(phi), sph = std::sin(phi);
        std::vector<double> dc(channels);
        for (double& d : dc)
            d = (unit(rng) - 0.5) * 0.6;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double u = cph * (x - cx) + sph * (y - cy);
                double v = -sph * (x - cx) + cph * (y - cy);
                bool inside;
                if (kind == 0)
                    inside = (u * u) / (a * a) + (v * v) / (b * b) < 1.0;
                else if (kind == 1)
                    inside = std::abs(u) < a && std::abs(v) < b;
                else
                    inside = u < 0.0;
                if (inside)
                    for (int c = 0; c < channels; ++c)
                        img.at(c, y, x) += static_cast<float>(dc[c]);
            }
    }

    std::normal_distribution<double> noise(0.0, 0.02);
    for (int c = 0; c < channels; ++c)
        for (float& v : img.channel(c))
            v += static_cast<float>(noise(rng));

    float lo = img.data()[0], hi = img.data()[0];
    for (std::size_t i = 0; i < img.size(); ++i) {
        lo = std::min(lo, img.data()[i]);
        hi = std::max(hi, img.data()[i]);
    }
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = 0.05f + 0.9f * (img.data()[i] - lo) / (hi - lo);
    return img;
}

PlanarMap depth_scene(int kind, int size) {
    if (kind < 0 || kind > 2)
        throw InvalidInput("depth_scene: kind must be 0, 1 or 2");
    PlanarMap d(1, size, size);
    auto fill_rect = [&](double y0, double x0, double y1, double x1, float depth) {
        for (int y = static_cast<int>(y0 * size); y < static_cast<int>(y1 * size); ++y)
            for (int x = static_cast<int>(x0 * size); x < static_cast<int>(x1 * size); ++x)
                d.at(0, y, x) = depth;
    };
    auto fill_circle = [&](double cy, double cx, double r, float depth) {
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double dy = (y + 0.5) / size - cy, dx = (x + 0.5) / size - cx;
                if (dy * dy + dx * dx < r * r)
                    d.at(0, y, x) = depth;
            }
    };

    if (kind == 0) {
        fill_rect(0, 0, 1, 1, 0.9f);
        fill_rect(0.10, 0.15, 0.55, 0.45, 0.25f);
        fill_rect(0.30, 0.55, 0.85, 0.90, 0.45f);
        fill_rect(0.60, 0.10, 0.92, 0.40, 0.65f);
        fill_rect(0.05, 0.60, 0.25, 0.95, 0.15f);
    } else if (kind == 1) {
        fill_rect(0, 0, 1, 1, 0.85f);
        fill_circle(0.30, 0.30, 0.18, 0.20f);
        fill_circle(0.65, 0.60, 0.22, 0.40f);
        fill_circle(0.25, 0.75, 0.12, 0.60f);
        fill_circle(0.75, 0.20, 0.10, 0.30f);
        fill_circle(0.50, 0.45, 0.08, 0.15f);
    } else {
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                d.at(0, y, x) = (y + x < size) ? 0.30f : 0.85f;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double dy = ((y + 0.5) / size - 0.45) / 0.25, dx = ((x + 0.5) / size - 0.55) / 0.14;
                if (dy * dy + dx * dx < 1.0)
                    d.at(0, y, x) = 0.55f;
            }
        fill_rect(0.70, 0.10, 0.90, 0.35, 0.20f);
    }
    return d;
}

namespace {

double draw_sigma(std::mt19937_64& rng, int scale) {
    std::uniform_real_distribution<double> dist(0.55, 1.95);
    for (;;) {
        double ratio = dist(rng);
        if (std::abs(ratio - 1.0) > 0.015 && std::abs(ratio - 1.5) > 0.015)
            return ratio * scale;
    }
}

} // namespace

KernelField random_field(std::mt19937_64& rng, int lr_height, int lr_width, int scale) {
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> range_sigma(0.10, 0.30);
    KernelField f = init_field(lr_height, lr_width, ScaleFactor(scale));
    for (std::size_t i = 0; i < f.pixel_count(); ++i) {
        f.log_sigma_x[i] = static_cast<float>(std::log(draw_sigma(rng, scale)));
        f.log_sigma_y[i] = static_cast<float>(std::log(draw_sigma(rng, scale)));
        f.theta[i] = static_cast<float>(ang(rng));
        f.log_sigma_r[i] = static_cast<float>(std::log(range_sigma(rng)));
    }
    return f;
}

GradInstance grad_instance(std::uint64_t seed, int lr_height, int lr_width, int scale, int channels) {
    std::mt19937_64 rng(seed);
    GradInstance inst;
    inst.field = random_field(rng, lr_height, lr_width, scale);
    RenderConfig cfg;
    for (int attempt = 0; attempt < 500; ++attempt) {
        inst.guidance_hr = random_map(rng, channels, lr_height * scale, lr_width * scale);
        inst.guidance_lr = downsample_bilinear(inst.guidance_hr, ScaleFactor(scale));
        PlanarMap recon = render(inst.guidance_lr, inst.field, inst.guidance_hr, cfg).map;
        float min_res = 1.f;
        for (std::size_t i = 0; i < recon.size(); ++i)
            min_res = std::min(min_res, std::abs(recon.data()[i] - inst.guidance_hr.data()[i]));
        if (min_res >= 5e-3f)
            return inst;
    }
    throw NumericError("grad_instance: could not find kink-free guidance for seed " +
                       std::to_string(seed));
}

} // namespace fixtures
