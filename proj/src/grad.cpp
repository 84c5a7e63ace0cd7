#include "gsjbu/grad.hpp"

#include <algorithm>
#include <cmath>

#include "gsjbu/parallel.hpp"

namespace gsjbu {

namespace {

// Partial results for one HR row: loss contribution plus gradient scatter
// restricted to the LR row band the row's stencils can reach.
struct RowPartial {
    int band_lo = 0;
    int band_hi = -1;
    double loss = 0.0;
    std::vector<double> g; // [param][band_row][qx], 4 params
};

constexpr int kChunkRows = 256; // fixed so results do not depend on thread count

void row_backward(const KernelField& field, const detail::KernelTables& tables, int py,
                  const PlanarMap& g_lr, const PlanarMap& g_hr, const RenderConfig& cfg,
                  double inv_nc, bool want_grad, RowPartial& rp, detail::StencilWorkspace& ws) {
    const int lw = field.lr_width;
    const int hw = g_hr.width();
    const int cc = g_hr.channels();
    const int s = field.scale.value();

    rp.loss = 0.0;
    if (want_grad) {
        rp.band_lo = std::max(0, py / s - cfg.r_max);
        rp.band_hi = std::min(field.lr_height - 1, py / s + cfg.r_max);
        rp.g.assign(static_cast<std::size_t>(4) * (rp.band_hi - rp.band_lo + 1) * lw, 0.0);
    }
    const std::size_t band_plane = want_grad ? static_cast<std::size_t>(rp.band_hi - rp.band_lo + 1) * lw : 0;

    std::vector<double> dres(cc);
    std::vector<double> gvals;
    for (int px = 0; px < hw; ++px) {
        detail::compute_stencil(field, tables, py, px, g_lr, g_hr, cfg, ws);

        // The loss lives on the double-precision reconstruction so that finite
        // differences of it are smooth down to double roundoff.
        for (int c = 0; c < cc; ++c) {
            double acc = 0.0;
            for (const auto& k : ws.items)
                acc += k.w * static_cast<double>(g_lr.at(c, k.qy, k.qx));
            double residual = acc - static_cast<double>(g_hr.at(c, py, px));
            rp.loss += std::abs(residual);
            // L1 subgradient, 0 at a zero residual.
            dres[c] = (residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0)) * inv_nc;
        }
        if (!want_grad || ws.items.size() <= 1)
            continue; // single contributor: its weight is constant 1

        // Softmax backward: dL/dlog_w_k = w_k (g_k - sum_j w_j g_j) where
        // g_k is the payload of contributor k dotted with dL/drecon.
        std::vector<double>& gs = rp.g;
        double gbar = 0.0;
        gvals.resize(ws.items.size());
        for (std::size_t i = 0; i < ws.items.size(); ++i) {
            const auto& k = ws.items[i];
            double g = 0.0;
            for (int c = 0; c < cc; ++c)
                g += dres[c] * static_cast<double>(g_lr.at(c, k.qy, k.qx));
            gvals[i] = g;
            gbar += k.w * g;
        }
        for (std::size_t i = 0; i < ws.items.size(); ++i) {
            const auto& k = ws.items[i];
            double dl = k.w * (gvals[i] - gbar);
            if (dl == 0.0)
                continue;
            std::size_t base = static_cast<std::size_t>(k.qy - rp.band_lo) * lw + k.qx;
            gs[0 * band_plane + base] += dl * detail::quad_term(k.e1 * k.e1, k.inv_sx2);
            gs[1 * band_plane + base] += dl * detail::quad_term(k.e2 * k.e2, k.inv_sy2);
            gs[2 * band_plane + base] += dl * k.e1 * k.e2 * (k.inv_sy2 - k.inv_sx2);
            gs[3 * band_plane + base] += dl * detail::quad_term(k.range_d2, k.inv_sr2);
        }
    }
}

double run(const KernelField& field, const PlanarMap& g_lr, const PlanarMap& g_hr,
           const RenderConfig& cfg, GradField* out) {
    detail::validate_field_inputs(field, g_lr, g_hr, cfg);
    const int hh = g_hr.height();
    const int lw = field.lr_width;
    const std::size_t n_lr = field.pixel_count();
    const double inv_nc =
        1.0 / (static_cast<double>(g_hr.height()) * g_hr.width() * g_hr.channels());

    std::vector<double> acc; // [param][LR pixel]
    if (out)
        acc.assign(4 * n_lr, 0.0);
    double loss = 0.0;

    const detail::KernelTables tables = detail::build_tables(field, cfg);
    std::vector<RowPartial> chunk(std::min(hh, kChunkRows));
    for (int chunk_lo = 0; chunk_lo < hh; chunk_lo += kChunkRows) {
        int rows = std::min(kChunkRows, hh - chunk_lo);
        parallel_for_rows(rows, [&](int r) {
            detail::StencilWorkspace ws;
            row_backward(field, tables, chunk_lo + r, g_lr, g_hr, cfg, inv_nc, out != nullptr,
                         chunk[r], ws);
        });
        // Merge in ascending row order: bitwise independent of the thread count.
        for (int r = 0; r < rows; ++r) {
            loss += chunk[r].loss;
            if (!out)
                continue;
            const RowPartial& rp = chunk[r];
            std::size_t band_plane = static_cast<std::size_t>(rp.band_hi - rp.band_lo + 1) * lw;
            for (int param = 0; param < 4; ++param)
                for (int qy = rp.band_lo; qy <= rp.band_hi; ++qy) {
                    const double* src = rp.g.data() + param * band_plane +
                                        static_cast<std::size_t>(qy - rp.band_lo) * lw;
                    double* dst = acc.data() + param * n_lr + static_cast<std::size_t>(qy) * lw;
                    for (int qx = 0; qx < lw; ++qx)
                        dst[qx] += src[qx];
                }
        }
    }

    loss *= inv_nc;
    if (out) {
        out->lr_height = field.lr_height;
        out->lr_width = field.lr_width;
        auto cast_plane = [&](int param, std::vector<float>& dst) {
            dst.resize(n_lr);
            for (std::size_t i = 0; i < n_lr; ++i)
                dst[i] = static_cast<float>(acc[param * n_lr + i]);
        };
        cast_plane(0, out->d_log_sigma_x);
        cast_plane(1, out->d_log_sigma_y);
        cast_plane(2, out->d_theta);
        cast_plane(3, out->d_log_sigma_r);
    }
    return loss;
}

} // namespace

double reconstruction_loss(const KernelField& field, const PlanarMap& guidance_lr,
                           const PlanarMap& guidance_hr, const RenderConfig& cfg) {
    return run(field, guidance_lr, guidance_hr, cfg, nullptr);
}

LossAndGrad loss_and_grad(const KernelField& field, const PlanarMap& guidance_lr,
                          const PlanarMap& guidance_hr, const RenderConfig& cfg) {
    LossAndGrad out;
    out.loss = run(field, guidance_lr, guidance_hr, cfg, &out.grads);
    return out;
}

double check_gradients(const KernelField& field, const PlanarMap& guidance_lr,
                       const PlanarMap& guidance_hr, const RenderConfig& cfg, double h) {
    if (!(h > 0.0))
        throw InvalidInput("check_gradients: step must be positive");
    LossAndGrad lg = loss_and_grad(field, guidance_lr, guidance_hr, cfg);

    double worst = 0.0;
    auto probe = [&](std::vector<float> KernelField::* plane, const std::vector<float>& analytic) {
        KernelField f = field;
        std::vector<float>& vals = f.*plane;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            float orig = vals[i];
            float plus = static_cast<float>(static_cast<double>(orig) + h);
            float minus = static_cast<float>(static_cast<double>(orig) - h);
            double h_eff = static_cast<double>(plus) - static_cast<double>(minus);
            if (!(h_eff > 0.0))
                throw NumericError("check_gradients: step underflowed at parameter " + std::to_string(i));
            vals[i] = plus;
            double lp = reconstruction_loss(f, guidance_lr, guidance_hr, cfg);
            vals[i] = minus;
            double lm = reconstruction_loss(f, guidance_lr, guidance_hr, cfg);
            vals[i] = orig;
            double fd = (lp - lm) / h_eff;
            double a = static_cast<double>(analytic[i]);
            double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
            worst = std::max(worst, rel);
        }
    };
    probe(&KernelField::log_sigma_x, lg.grads.d_log_sigma_x);
    probe(&KernelField::log_sigma_y, lg.grads.d_log_sigma_y);
    probe(&KernelField::theta, lg.grads.d_theta);
    probe(&KernelField::log_sigma_r, lg.grads.d_log_sigma_r);
    return worst;
}

} // namespace gsjbu
