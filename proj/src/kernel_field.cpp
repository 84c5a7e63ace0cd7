#include "gsjbu/kernel_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gsjbu/resample.hpp"

namespace gsjbu {

void RenderConfig::validate() const {
    if (r_max < 1)
        throw InvalidInput("render config: r_max must be >= 1, got " + std::to_string(r_max));
    if (!(alpha_dyn > 0.0))
        throw InvalidInput("render config: alpha_dyn must be positive, got " + std::to_string(alpha_dyn));
    if (!(eps_denominator > 0.0))
        throw InvalidInput("render config: eps_denominator must be positive");
}

KernelField init_field(int lr_height, int lr_width, ScaleFactor scale,
                       std::optional<double> init_sigma_spatial, double init_sigma_r) {
    if (lr_height < 1 || lr_width < 1)
        throw InvalidInput("init_field: grid dims must be positive, got " + std::to_string(lr_height) +
                           "x" + std::to_string(lr_width));
    double sigma_s = init_sigma_spatial.value_or(static_cast<double>(scale.value()));
    if (!(sigma_s > 0.0))
        throw InvalidInput("init_field: spatial sigma must be positive, got " + std::to_string(sigma_s));
    if (!(init_sigma_r > 0.0))
        throw InvalidInput("init_field: range sigma must be positive, got " + std::to_string(init_sigma_r));

    KernelField f;
    f.lr_height = lr_height;
    f.lr_width = lr_width;
    f.scale = scale;
    std::size_t n = f.pixel_count();
    f.log_sigma_x.assign(n, static_cast<float>(std::log(sigma_s)));
    f.log_sigma_y.assign(n, static_cast<float>(std::log(sigma_s)));
    f.theta.assign(n, 0.f);
    f.log_sigma_r.assign(n, static_cast<float>(std::log(init_sigma_r)));
    return f;
}

Sym2 covariance(const KernelField& field, int qy, int qx) {
    if (qy < 0 || qy >= field.lr_height || qx < 0 || qx >= field.lr_width)
        throw InvalidInput("covariance: position (" + std::to_string(qy) + ", " + std::to_string(qx) +
                           ") outside field grid");
    std::size_t i = field.index(qy, qx);
    double sx2 = std::exp(2.0 * static_cast<double>(field.log_sigma_x[i]));
    double sy2 = std::exp(2.0 * static_cast<double>(field.log_sigma_y[i]));
    double c = std::cos(static_cast<double>(field.theta[i]));
    double s = std::sin(static_cast<double>(field.theta[i]));
    return {c * c * sx2 + s * s * sy2, c * s * (sx2 - sy2), s * s * sx2 + c * c * sy2};
}

double spatial_log_weight(const KernelField& field, double py, double px, int qy, int qx) {
    if (qy < 0 || qy >= field.lr_height || qx < 0 || qx >= field.lr_width)
        throw InvalidInput("spatial_log_weight: LR position outside field grid");
    std::size_t i = field.index(qy, qx);
    int s = field.scale.value();
    double dy = py - center_hr_coord(qy, s);
    double dx = px - center_hr_coord(qx, s);
    double c = std::cos(static_cast<double>(field.theta[i]));
    double sn = std::sin(static_cast<double>(field.theta[i]));
    double e1 = c * dx + sn * dy;
    double e2 = -sn * dx + c * dy;
    double inv_sx2 = std::exp(-2.0 * static_cast<double>(field.log_sigma_x[i]));
    double inv_sy2 = std::exp(-2.0 * static_cast<double>(field.log_sigma_y[i]));
    return -0.5 * (detail::quad_term(e1 * e1, inv_sx2) + detail::quad_term(e2 * e2, inv_sy2));
}

double range_log_weight(std::span<const float> g_p, std::span<const float> g_q, double sigma_r) {
    if (g_p.size() != g_q.size())
        throw InvalidInput("range_log_weight: guidance vectors differ in length");
    if (!(sigma_r > 0.0))
        throw InvalidInput("range_log_weight: sigma_r must be positive");
    double d2 = 0.0;
    for (std::size_t c = 0; c < g_p.size(); ++c) {
        double d = static_cast<double>(g_p[c]) - static_cast<double>(g_q[c]);
        d2 += d * d;
    }
    return -0.5 * detail::quad_term(d2, 1.0 / (sigma_r * sigma_r));
}

int support_radius(const KernelField& field, int qy, int qx, const RenderConfig& cfg) {
    cfg.validate();
    if (qy < 0 || qy >= field.lr_height || qx < 0 || qx >= field.lr_width)
        throw InvalidInput("support_radius: LR position outside field grid");
    std::size_t i = field.index(qy, qx);
    double sigma_eff = std::exp(static_cast<double>(std::max(field.log_sigma_x[i], field.log_sigma_y[i])));
    double r = std::ceil(cfg.alpha_dyn * sigma_eff / field.scale.value());
    if (!(r >= 1.0))
        return 1;
    return r >= cfg.r_max ? cfg.r_max : static_cast<int>(r);
}

namespace detail {

void validate_field_inputs(const KernelField& field, const PlanarMap& guidance_lr,
                           const PlanarMap& guidance_hr, const RenderConfig& cfg) {
    cfg.validate();
    if (field.lr_height < 1 || field.lr_width < 1 || field.pixel_count() != field.log_sigma_x.size() ||
        field.pixel_count() != field.log_sigma_y.size() || field.pixel_count() != field.theta.size() ||
        field.pixel_count() != field.log_sigma_r.size())
        throw InvalidInput("kernel field: parameter planes do not match the grid size");
    if (guidance_lr.height() != field.lr_height || guidance_lr.width() != field.lr_width)
        throw InvalidInput("guidance LR dims " + std::to_string(guidance_lr.height()) + "x" +
                           std::to_string(guidance_lr.width()) + " do not match field grid " +
                           std::to_string(field.lr_height) + "x" + std::to_string(field.lr_width));
    int s = field.scale.value();
    if (guidance_hr.height() != field.lr_height * s || guidance_hr.width() != field.lr_width * s)
        throw InvalidInput("guidance HR dims " + std::to_string(guidance_hr.height()) + "x" +
                           std::to_string(guidance_hr.width()) + " do not match field grid times scale " +
                           std::to_string(s));
    if (guidance_hr.channels() != guidance_lr.channels())
        throw InvalidInput("guidance HR/LR channel counts differ");
}

KernelTables build_tables(const KernelField& field, const RenderConfig& cfg) {
    std::size_t n = field.pixel_count();
    KernelTables t;
    t.cos_t.resize(n);
    t.sin_t.resize(n);
    t.inv_sx2.resize(n);
    t.inv_sy2.resize(n);
    t.inv_sr2.resize(n);
    t.radius.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double th = static_cast<double>(field.theta[i]);
        t.cos_t[i] = std::cos(th);
        t.sin_t[i] = std::sin(th);
        t.inv_sx2[i] = std::exp(-2.0 * static_cast<double>(field.log_sigma_x[i]));
        t.inv_sy2[i] = std::exp(-2.0 * static_cast<double>(field.log_sigma_y[i]));
        double sr = std::exp(static_cast<double>(field.log_sigma_r[i]));
        t.inv_sr2[i] = 1.0 / (sr * sr);
        double sigma_eff =
            std::exp(static_cast<double>(std::max(field.log_sigma_x[i], field.log_sigma_y[i])));
        double r = std::ceil(cfg.alpha_dyn * sigma_eff / field.scale.value());
        t.radius[i] = !(r >= 1.0) ? 1 : (r >= cfg.r_max ? cfg.r_max : static_cast<int>(r));
    }
    return t;
}

void compute_stencil(const KernelField& field, const KernelTables& tables, int py, int px,
                     const PlanarMap& guidance_lr, const PlanarMap& guidance_hr,
                     const RenderConfig& cfg, StencilWorkspace& ws) {
    ws.items.clear();
    const int s = field.scale.value();
    const int lh = field.lr_height, lw = field.lr_width;
    const int q0y = py / s, q0x = px / s; // nearest LR center under the half-pixel convention
    const int r = tables.radius[field.index(q0y, q0x)];
    const int c_count = guidance_hr.channels();

    const int ylo = std::max(0, q0y - r), yhi = std::min(lh - 1, q0y + r);
    const int xlo = std::max(0, q0x - r), xhi = std::min(lw - 1, q0x + r);

    double g_p[16];
    std::vector<double> g_p_big;
    const double* gp = g_p;
    if (c_count > 16) {
        g_p_big.resize(c_count);
        for (int ch = 0; ch < c_count; ++ch)
            g_p_big[ch] = guidance_hr.at(ch, py, px);
        gp = g_p_big.data();
    } else {
        for (int ch = 0; ch < c_count; ++ch)
            g_p[ch] = guidance_hr.at(ch, py, px);
    }

    for (int qy = ylo; qy <= yhi; ++qy) {
        double dy = py - center_hr_coord(qy, s);
        for (int qx = xlo; qx <= xhi; ++qx) {
            double dx = px - center_hr_coord(qx, s);
            std::size_t i = field.index(qy, qx);
            double c = tables.cos_t[i], sn = tables.sin_t[i];
            Contribution k;
            k.qy = qy;
            k.qx = qx;
            k.e1 = c * dx + sn * dy;
            k.e2 = -sn * dx + c * dy;
            k.inv_sx2 = tables.inv_sx2[i];
            k.inv_sy2 = tables.inv_sy2[i];
            k.inv_sr2 = tables.inv_sr2[i];
            double d2 = 0.0;
            for (int ch = 0; ch < c_count; ++ch) {
                double d = gp[ch] - static_cast<double>(guidance_lr.at(ch, qy, qx));
                d2 += d * d;
            }
            k.range_d2 = d2;
            double l_s = -0.5 * (quad_term(k.e1 * k.e1, k.inv_sx2) + quad_term(k.e2 * k.e2, k.inv_sy2));
            double l_r = -0.5 * quad_term(d2, k.inv_sr2);
            k.log_w = l_s + l_r;
            k.w = 0.0;
            if (qy == q0y && qx == q0x)
                ws.anchor = static_cast<int>(ws.items.size());
            ws.items.push_back(k);
        }
    }

    double m = -std::numeric_limits<double>::infinity();
    for (const auto& k : ws.items)
        m = std::max(m, k.log_w);
    if (!std::isfinite(m)) {
        // Every contributor underflowed to -inf: fall back to the anchor.
        ws.items[ws.anchor].w = 1.0;
        return;
    }
    double denom = 0.0;
    for (auto& k : ws.items) {
        k.w = std::exp(k.log_w - m);
        denom += k.w;
    }
    denom = std::max(denom, cfg.eps_denominator);
    for (auto& k : ws.items)
        k.w /= denom;
}

} // namespace detail

WeightStencil stencil(const KernelField& field, int py, int px, const PlanarMap& guidance_lr,
                      const PlanarMap& guidance_hr, const RenderConfig& cfg) {
    detail::validate_field_inputs(field, guidance_lr, guidance_hr, cfg);
    if (py < 0 || py >= guidance_hr.height() || px < 0 || px >= guidance_hr.width())
        throw InvalidInput("stencil: HR position (" + std::to_string(py) + ", " + std::to_string(px) +
                           ") out of bounds");
    detail::KernelTables tables = detail::build_tables(field, cfg);
    detail::StencilWorkspace ws;
    detail::compute_stencil(field, tables, py, px, guidance_lr, guidance_hr, cfg, ws);
    WeightStencil out;
    out.py = py;
    out.px = px;
    out.entries.reserve(ws.items.size());
    for (const auto& k : ws.items)
        out.entries.push_back({k.qy, k.qx, k.w});
    return out;
}

} // namespace gsjbu
