#include "gsjbu/resample.hpp"

#include <algorithm>
#include <cmath>

namespace gsjbu {

namespace {

// Sample one channel plane at fractional (y, x) with clamp-to-edge.
double sample_bilinear(const PlanarMap& m, int c, double y, double x) {
    const int h = m.height(), w = m.width();
    double yc = std::clamp(y, 0.0, static_cast<double>(h - 1));
    double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
    int y0 = static_cast<int>(std::floor(yc));
    int x0 = static_cast<int>(std::floor(xc));
    int y1 = std::min(y0 + 1, h - 1);
    int x1 = std::min(x0 + 1, w - 1);
    double fy = yc - y0, fx = xc - x0;
    double top = (1.0 - fx) * m.at(c, y0, x0) + fx * m.at(c, y0, x1);
    double bot = (1.0 - fx) * m.at(c, y1, x0) + fx * m.at(c, y1, x1);
    return (1.0 - fy) * top + fy * bot;
}

} // namespace

std::pair<double, double> center_hr(int qy, int qx, ScaleFactor scale, int lr_height, int lr_width) {
    if (qy < 0 || qy >= lr_height || qx < 0 || qx >= lr_width)
        throw InvalidInput("center_hr: position (" + std::to_string(qy) + ", " + std::to_string(qx) +
                           ") outside LR grid " + std::to_string(lr_height) + "x" + std::to_string(lr_width));
    return {center_hr_coord(qy, scale.value()), center_hr_coord(qx, scale.value())};
}

PlanarMap downsample_bilinear(const PlanarMap& hr, ScaleFactor scale) {
    const int s = scale.value();
    if (hr.height() % s != 0 || hr.width() % s != 0)
        throw InvalidInput("downsample: dims " + std::to_string(hr.height()) + "x" + std::to_string(hr.width()) +
                           " not divisible by scale " + std::to_string(s));
    if (s == 1)
        return hr;
    const int lh = hr.height() / s, lw = hr.width() / s;
    PlanarMap out(hr.channels(), lh, lw);
    for (int c = 0; c < hr.channels(); ++c)
        for (int qy = 0; qy < lh; ++qy) {
            double sy = center_hr_coord(qy, s);
            for (int qx = 0; qx < lw; ++qx)
                out.at(c, qy, qx) = static_cast<float>(sample_bilinear(hr, c, sy, center_hr_coord(qx, s)));
        }
    return out;
}

PlanarMap bilinear_upsample(const PlanarMap& lr, ScaleFactor scale) {
    const int s = scale.value();
    if (s == 1)
        return lr;
    const int hh = lr.height() * s, hw = lr.width() * s;
    PlanarMap out(lr.channels(), hh, hw);
    for (int c = 0; c < lr.channels(); ++c)
        for (int py = 0; py < hh; ++py) {
            double sy = (py + 0.5) / s - 0.5;
            for (int px = 0; px < hw; ++px)
                out.at(c, py, px) = static_cast<float>(sample_bilinear(lr, c, sy, (px + 0.5) / s - 0.5));
        }
    return out;
}

} // namespace gsjbu
