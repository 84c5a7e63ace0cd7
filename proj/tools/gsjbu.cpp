#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsjbu/baselines.hpp"
#include "gsjbu/grad.hpp"
#include "gsjbu/io.hpp"
#include "gsjbu/optimize.hpp"
#include "gsjbu/parallel.hpp"
#include "gsjbu/render.hpp"
#include "gsjbu/resample.hpp"

using nlohmann::json;
using namespace gsjbu;

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

PlanarMap load_map(const std::string& path) {
    if (has_suffix(path, ".png"))
        return read_image(path);
    if (has_suffix(path, ".npy"))
        return read_array(path);
    throw InvalidInput("unrecognized file type (need .png or .npy): " + path);
}

// Returns the clamped-sample count for PNG targets, 0 for NPY.
long save_map(const PlanarMap& map, const std::string& path, int bits) {
    if (has_suffix(path, ".png")) {
        long clamped = write_image(map, path, bits).clamped;
        if (clamped > 0)
            std::cerr << "warning: " << clamped << " samples fell outside [0, 1] and were clamped in "
                      << path << "\n";
        return clamped;
    }
    if (has_suffix(path, ".npy")) {
        write_array(map, path);
        return 0;
    }
    throw InvalidInput("unrecognized output type (need .png or .npy): " + path);
}

PlanarMap center_crop_to_multiple(const PlanarMap& m, int tile_y, int tile_x) {
    int nh = (m.height() / tile_y) * tile_y;
    int nw = (m.width() / tile_x) * tile_x;
    if (nh == 0 || nw == 0)
        throw InvalidInput("image " + std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                           " is smaller than one tile of " + std::to_string(tile_y) + "x" +
                           std::to_string(tile_x));
    if (nh == m.height() && nw == m.width())
        return m;
    int oy = (m.height() - nh) / 2, ox = (m.width() - nw) / 2;
    PlanarMap out(m.channels(), nh, nw);
    for (int c = 0; c < m.channels(); ++c)
        for (int y = 0; y < nh; ++y)
            for (int x = 0; x < nw; ++x)
                out.at(c, y, x) = m.at(c, oy + y, ox + x);
    return out;
}

json num_or_null(double v) {
    if (std::isfinite(v))
        return v;
    return nullptr;
}

json metrics_json(const PlanarMap& pred, const PlanarMap& gt, const PlanarMap* mask, double peak) {
    json j;
    double p = psnr(pred, gt, peak);
    j["psnr_db"] = num_or_null(p); // null when infinite, see psnr_infinite
    j["psnr_infinite"] = !std::isfinite(p);
    bool gt_positive = true;
    for (int c = 0; c < gt.channels() && gt_positive; ++c)
        for (int y = 0; y < gt.height() && gt_positive; ++y)
            for (int x = 0; x < gt.width(); ++x) {
                if (mask && mask->at(0, y, x) == 0.f)
                    continue;
                if (!(gt.at(c, y, x) > 0.f)) {
                    gt_positive = false;
                    break;
                }
            }
    if (gt_positive) {
        MetricReport r = depth_metrics(pred, gt, mask);
        j["rmse"] = r.rmse;
        j["mae"] = r.mae;
        j["delta1"] = r.delta1;
    } else {
        // delta1 needs positive ground truth; report the plain errors.
        double se = 0.0, ae = 0.0;
        std::size_t n = 0;
        for (int c = 0; c < gt.channels(); ++c)
            for (int y = 0; y < gt.height(); ++y)
                for (int x = 0; x < gt.width(); ++x) {
                    if (mask && mask->at(0, y, x) == 0.f)
                        continue;
                    double d = static_cast<double>(pred.at(c, y, x)) - gt.at(c, y, x);
                    se += d * d;
                    ae += std::abs(d);
                    ++n;
                }
        if (n == 0)
            throw InvalidInput("no valid pixels to evaluate");
        j["rmse"] = std::sqrt(se / n);
        j["mae"] = ae / n;
        j["delta1"] = nullptr;
    }
    return j;
}

void print_metric_row(const std::string& name, const json& m) {
    auto fmt = [](const json& v) {
        char buf[32];
        if (v.is_null())
            return std::string("     -");
        std::snprintf(buf, sizeof(buf), "%10.4f", v.get<double>());
        return std::string(buf);
    };
    std::fprintf(stderr, "  %-10s %s %s %s %s\n", name.c_str(), fmt(m["psnr_db"]).c_str(),
                 fmt(m["rmse"]).c_str(), fmt(m["mae"]).c_str(), fmt(m["delta1"]).c_str());
}

struct FitArgs {
    std::string image, out, loss_csv;
    int scale = 0;
    int iters = 50;
    double lr = 1e-3;
    int rmax = 4;
    double alpha = 2.0;
    bool center_crop = false;
};

void add_fit_options(CLI::App* cmd, FitArgs& a, bool with_scale) {
    cmd->add_option("--image", a.image, "HR guidance image (.png or .npy)")
        ->required()
        ->check(CLI::ExistingFile);
    if (with_scale)
        cmd->add_option("--scale", a.scale, "integer upsampling factor")->required();
    cmd->add_option("--iters", a.iters, "optimization iterations")->capture_default_str();
    cmd->add_option("--lr", a.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--rmax", a.rmax, "window radius cap (LR pixels)")->capture_default_str();
    cmd->add_option("--alpha", a.alpha, "window reach in anchor sigmas")->capture_default_str();
    cmd->add_flag("--center-crop", a.center_crop, "crop the guidance to a size divisible by the scale");
}

// Shared by cmd_fit and cmd_upsample: fit a field and report the trace.
FitResult run_fit(const PlanarMap& guidance, int scale, const FitArgs& a, RenderConfig& rc, json& j) {
    rc.r_max = a.rmax;
    rc.alpha_dyn = a.alpha;
    OptimConfig oc;
    oc.iterations = a.iters;
    oc.learning_rate = a.lr;

    FitResult fr = fit(guidance, ScaleFactor(scale), rc, oc);
    const auto& hist = fr.state.loss_history;
    std::size_t best_it = 0;
    for (std::size_t i = 1; i < hist.size(); ++i)
        if (hist[i] < hist[best_it])
            best_it = i;

    j["scale"] = scale;
    j["height"] = guidance.height();
    j["width"] = guidance.width();
    j["iterations"] = a.iters;
    j["loss_first"] = hist.front();
    j["loss_best"] = fr.state.best_loss;
    j["best_iteration"] = best_it;

    if (!a.loss_csv.empty()) {
        std::ofstream csv(a.loss_csv, std::ios::trunc);
        if (!csv)
            throw InvalidInput("cannot open for writing: " + a.loss_csv);
        csv.precision(17);
        csv << "iteration,loss\n";
        for (std::size_t i = 0; i < hist.size(); ++i)
            csv << i << "," << hist[i] << "\n";
    }
    return fr;
}

int cmd_fit(const FitArgs& a) {
    PlanarMap guidance = load_map(a.image);
    if (a.center_crop)
        guidance = center_crop_to_multiple(guidance, a.scale, a.scale);

    json j;
    j["command"] = "fit";
    j["image"] = a.image;
    RenderConfig rc;
    FitResult fr = run_fit(guidance, a.scale, a, rc, j);

    // Reconstruction quality before and after, for the human summary.
    KernelField init = init_field(fr.field.lr_height, fr.field.lr_width, fr.field.scale);
    double psnr_init = psnr(reconstruct_guidance(init, guidance, rc).map, guidance);
    double psnr_best = psnr(reconstruct_guidance(fr.field, guidance, rc).map, guidance);
    j["psnr_init"] = num_or_null(psnr_init);
    j["psnr_best"] = num_or_null(psnr_best);

    write_kernel_field(fr.field, rc, a.out);
    j["field"] = a.out;

    std::fprintf(stderr, "fit: %dx%d guidance, scale %d -> %dx%d field\n", guidance.height(),
                 guidance.width(), a.scale, fr.field.lr_height, fr.field.lr_width);
    std::fprintf(stderr, "  loss %.6f -> %.6f (best at iteration %d of %d)\n",
                 j["loss_first"].get<double>(), j["loss_best"].get<double>(),
                 j["best_iteration"].get<int>(), a.iters);
    std::fprintf(stderr, "  reconstruction psnr %.2f dB -> %.2f dB\n", psnr_init, psnr_best);
    std::fprintf(stderr, "  wrote %s and %s.meta\n", a.out.c_str(), a.out.c_str());
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_render(const std::string& field_path, const std::string& payload_path,
               const std::string& image_path, const std::string& out_path, bool simplex, int bits) {
    RenderConfig rc;
    KernelField field = read_kernel_field(field_path, &rc);
    PlanarMap payload = load_map(payload_path);
    PlanarMap guidance = load_map(image_path);

    RenderOutput ro = simplex ? render_probability(payload, field, guidance, rc)
                              : render(payload, field, guidance, rc);
    long clamped = save_map(ro.map, out_path, bits);

    json j;
    j["command"] = "render";
    j["field"] = field_path;
    j["payload"] = payload_path;
    j["out"] = out_path;
    j["channels"] = ro.map.channels();
    j["height"] = ro.map.height();
    j["width"] = ro.map.width();
    j["channel_min"] = ro.stats.channel_min;
    j["channel_max"] = ro.stats.channel_max;
    j["clamped"] = clamped;
    j["seconds"] = ro.stats.seconds;
    std::fprintf(stderr, "render: %d channels at %dx%d in %.3f s -> %s\n", ro.map.channels(),
                 ro.map.height(), ro.map.width(), ro.stats.seconds, out_path.c_str());
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_upsample(const FitArgs& a, const std::string& payload_path, const std::string& out_path,
                 bool simplex, int bits) {
    PlanarMap guidance = load_map(a.image);
    PlanarMap payload = load_map(payload_path);

    int sy = guidance.height() / payload.height();
    int sx = guidance.width() / payload.width();
    if (a.center_crop) {
        int s = std::min(sy, sx);
        if (s < 1)
            throw InvalidInput("guidance is smaller than the payload");
        guidance = center_crop_to_multiple(guidance, payload.height() * s, payload.width() * s);
        sy = sx = s;
    }
    if (sy < 1 || sx < 1 || sy != sx || guidance.height() != payload.height() * sy ||
        guidance.width() != payload.width() * sx)
        throw InvalidInput("guidance " + std::to_string(guidance.height()) + "x" +
                           std::to_string(guidance.width()) + " is not an equal integer multiple of payload " +
                           std::to_string(payload.height()) + "x" + std::to_string(payload.width()));

    json j;
    j["command"] = "upsample";
    j["image"] = a.image;
    j["payload"] = payload_path;
    RenderConfig rc;
    FitResult fr = run_fit(guidance, sy, a, rc, j);

    RenderOutput ro = simplex ? render_probability(payload, fr.field, guidance, rc)
                              : render(payload, fr.field, guidance, rc);
    long clamped = save_map(ro.map, out_path, bits);
    j["out"] = out_path;
    j["channels"] = ro.map.channels();
    j["channel_min"] = ro.stats.channel_min;
    j["channel_max"] = ro.stats.channel_max;
    j["clamped"] = clamped;
    j["seconds"] = ro.stats.seconds;

    std::fprintf(stderr, "upsample: scale %d, loss %.6f -> %.6f, wrote %s\n", sy,
                 j["loss_first"].get<double>(), j["loss_best"].get<double>(), out_path.c_str());
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& mask_path,
             double peak) {
    PlanarMap pred = load_map(pred_path);
    PlanarMap gt = load_map(gt_path);
    PlanarMap mask;
    if (!mask_path.empty())
        mask = load_map(mask_path);

    json j = metrics_json(pred, gt, mask_path.empty() ? nullptr : &mask, peak);
    j["command"] = "eval";
    j["pred"] = pred_path;
    j["gt"] = gt_path;

    std::fprintf(stderr, "  %-10s %10s %10s %10s %10s\n", "", "psnr(db)", "rmse", "mae", "delta1");
    print_metric_row("eval", j);
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_compare(const FitArgs& a, const std::string& payload_path, const std::string& gt_path,
                const std::string& mask_path, double sigma_s, double sigma_r, int radius, double peak) {
    PlanarMap guidance = load_map(a.image);
    PlanarMap payload = load_map(payload_path);
    PlanarMap gt = load_map(gt_path);
    PlanarMap mask;
    const PlanarMap* mask_ptr = nullptr;
    if (!mask_path.empty()) {
        mask = load_map(mask_path);
        mask_ptr = &mask;
    }

    if (guidance.height() % payload.height() != 0 || guidance.width() % payload.width() != 0 ||
        guidance.height() / payload.height() != guidance.width() / payload.width())
        throw InvalidInput("guidance dims are not an equal integer multiple of payload dims");
    int s = guidance.height() / payload.height();

    json j;
    j["command"] = "compare";
    RenderConfig rc;
    FitResult fr = run_fit(guidance, s, a, rc, j);

    if (sigma_s <= 0.0)
        sigma_s = s; // match the fitted field's starting point
    if (radius < 0)
        radius = support_radius(init_field(payload.height(), payload.width(), ScaleFactor(s)), 0, 0, rc);

    PlanarMap up_bilinear = bilinear_upsample(payload, ScaleFactor(s));
    PlanarMap up_jbu = jbu_classic(payload, guidance, sigma_s, sigma_r, radius);
    PlanarMap up_gsjbu = render(payload, fr.field, guidance, rc).map;

    j["methods"]["bilinear"] = metrics_json(up_bilinear, gt, mask_ptr, peak);
    j["methods"]["jbu"] = metrics_json(up_jbu, gt, mask_ptr, peak);
    j["methods"]["gsjbu"] = metrics_json(up_gsjbu, gt, mask_ptr, peak);

    std::fprintf(stderr, "compare: scale %d, %d iterations\n", s, a.iters);
    std::fprintf(stderr, "  %-10s %10s %10s %10s %10s\n", "method", "psnr(db)", "rmse", "mae", "delta1");
    print_metric_row("bilinear", j["methods"]["bilinear"]);
    print_metric_row("jbu", j["methods"]["jbu"]);
    print_metric_row("gsjbu", j["methods"]["gsjbu"]);
    std::cout << j.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"guided upsampling with per-pixel fitted anisotropic kernels"};
    app.require_subcommand(1);
    app.fallthrough();

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = all cores)")
        ->envname("GSJBU_THREADS")
        ->check(CLI::NonNegativeNumber);

    FitArgs fit_args;
    CLI::App* fitc = app.add_subcommand("fit", "fit a kernel field to a guidance image");
    add_fit_options(fitc, fit_args, true);
    fitc->add_option("--out", fit_args.out, "output field file (.npy)")->required();
    fitc->add_option("--loss-csv", fit_args.loss_csv, "write the per-iteration loss here");

    std::string r_field, r_payload, r_image, r_out;
    bool r_simplex = false;
    int r_bits = 8;
    CLI::App* renderc = app.add_subcommand("render", "apply a saved field to an LR payload");
    renderc->add_option("--field", r_field, "kernel field file")->required()->check(CLI::ExistingFile);
    renderc->add_option("--payload", r_payload, "LR payload (.png or .npy)")
        ->required()
        ->check(CLI::ExistingFile);
    renderc->add_option("--image", r_image, "HR guidance image")->required()->check(CLI::ExistingFile);
    renderc->add_option("--out", r_out, "output map (.png or .npy)")->required();
    renderc->add_flag("--simplex", r_simplex, "validate the payload as per-pixel probabilities");
    renderc->add_option("--bits", r_bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));

    FitArgs up_args;
    std::string u_payload, u_out;
    bool u_simplex = false;
    int u_bits = 8;
    CLI::App* upc = app.add_subcommand("upsample", "fit to the guidance, then upsample the payload");
    add_fit_options(upc, up_args, false);
    upc->add_option("--payload", u_payload, "LR payload (.png or .npy)")
        ->required()
        ->check(CLI::ExistingFile);
    upc->add_option("--out", u_out, "output map (.png or .npy)")->required();
    upc->add_flag("--simplex", u_simplex, "validate the payload as per-pixel probabilities");
    upc->add_option("--bits", u_bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));

    std::string e_pred, e_gt, e_mask;
    double e_peak = 1.0;
    CLI::App* evalc = app.add_subcommand("eval", "compare a prediction against ground truth");
    evalc->add_option("--pred", e_pred, "predicted map")->required()->check(CLI::ExistingFile);
    evalc->add_option("--gt", e_gt, "ground-truth map")->required()->check(CLI::ExistingFile);
    evalc->add_option("--mask", e_mask, "validity mask (nonzero = valid)")->check(CLI::ExistingFile);
    evalc->add_option("--peak", e_peak, "PSNR peak value")->capture_default_str();

    FitArgs cmp_args;
    std::string c_payload, c_gt, c_mask;
    double c_sigma_s = 0.0, c_sigma_r = 0.12, c_peak = 1.0;
    int c_radius = -1;
    CLI::App* cmpc = app.add_subcommand("compare", "bilinear vs fixed jbu vs fitted kernels");
    add_fit_options(cmpc, cmp_args, false);
    cmpc->add_option("--payload", c_payload, "LR payload")->required()->check(CLI::ExistingFile);
    cmpc->add_option("--gt", c_gt, "HR ground truth")->required()->check(CLI::ExistingFile);
    cmpc->add_option("--mask", c_mask, "validity mask (nonzero = valid)")->check(CLI::ExistingFile);
    cmpc->add_option("--sigma-s", c_sigma_s, "jbu spatial sigma (default: the scale)");
    cmpc->add_option("--sigma-r", c_sigma_r, "jbu range sigma")->capture_default_str();
    cmpc->add_option("--radius", c_radius, "jbu window radius (default: matches gsjbu's)");
    cmpc->add_option("--peak", c_peak, "PSNR peak value")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        set_thread_count(threads);
        if (fitc->parsed())
            return cmd_fit(fit_args);
        if (renderc->parsed())
            return cmd_render(r_field, r_payload, r_image, r_out, r_simplex, r_bits);
        if (upc->parsed())
            return cmd_upsample(up_args, u_payload, u_out, u_simplex, u_bits);
        if (evalc->parsed())
            return cmd_eval(e_pred, e_gt, e_mask, e_peak);
        if (cmpc->parsed())
            return cmd_compare(cmp_args, c_payload, c_gt, c_mask, c_sigma_s, c_sigma_r, c_radius, c_peak);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
