#include "idcv/hyper.hpp"

#include <tuple>

#include "idcv/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>

#include "idcv/fcnn.hpp"
#include "idcv/parallel.hpp"
#include "idcv/rng.hpp"

namespace idcv {

namespace {
constexpr double kDenomFloor = 1e-12;
constexpr double kGammaFloor = 1e-6;
} // namespace

double loss_hyper(const Image& x, const Image& x0, int n) {
    if (!x.same_shape(x0)) throw std::invalid_argument("loss_hyper: shape mismatch");
    if (n < 1) throw std::invalid_argument("loss_hyper: n must be >= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x.data[i] - x0.data[i]);
    return acc / n;
}

RealField loss_hyper_subgradient(const Image& x, const Image& x0, int n) {
    if (!x.same_shape(x0)) throw std::invalid_argument("loss_hyper: shape mismatch");
    if (n < 1) throw std::invalid_argument("loss_hyper: n must be >= 1");
    RealField g(x.height, x.width);
    const double inv_n = 1.0 / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x.data[i] - x0.data[i];
        g.data[i] = r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0);
    }
    return g;
}

std::pair<GradientField, GradientField> grad_wrt_z(const DeconvPlan& plan, double gamma,
                                                   const RealField& delta_x) {
    if (delta_x.height != plan.height || delta_x.width != plan.width)
        throw std::invalid_argument("grad_wrt_z: shape mismatch");
    const FrequencyField dx_f = fft2(delta_x);
    FrequencyField num_h(plan.height, plan.width), num_w(plan.height, plan.width);
    for (std::size_t i = 0; i < dx_f.size(); ++i) {
        const double den = std::max(gamma * plan.data_spectrum[i] + plan.prior_spectrum[i],
                                    kDenomFloor);
        const std::complex<double> q = dx_f.data[i] / den;
        num_h.data[i] = plan.grad_h_otf.data[i] * q;
        num_w.data[i] = plan.grad_w_otf.data[i] * q;
    }
    return {ifft2(num_h), ifft2(num_w)};
}

HyperGradientWorkspace make_workspace(const DeconvPlan& plan, const Image& y,
                                      const GradientField* z_h, const GradientField* z_w,
                                      RealField delta_x) {
    if (y.height != plan.height || y.width != plan.width ||
        delta_x.height != plan.height || delta_x.width != plan.width)
        throw std::invalid_argument("make_workspace: shape mismatch");

    HyperGradientWorkspace ws;
    ws.plan = &plan;
    ws.data_term = fft2(y);
    for (std::size_t i = 0; i < ws.data_term.size(); ++i)
        ws.data_term.data[i] *= std::conj(plan.otf.data[i]);

    ws.prior_term = FrequencyField(plan.height, plan.width);
    if (z_h) {
        const FrequencyField zh_f = fft2(*z_h);
        const FrequencyField zw_f = fft2(*z_w);
        for (std::size_t i = 0; i < ws.prior_term.size(); ++i)
            ws.prior_term.data[i] = std::conj(plan.grad_h_otf.data[i]) * zh_f.data[i] +
                                    std::conj(plan.grad_w_otf.data[i]) * zw_f.data[i];
    }
    ws.delta_x = std::move(delta_x);
    return ws;
}

double grad_wrt_gamma(const HyperGradientWorkspace& ws, double gamma) {
    const DeconvPlan& plan = *ws.plan;
    FrequencyField s(plan.height, plan.width);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double den =
            std::max(gamma * plan.data_spectrum[i] + plan.prior_spectrum[i], kDenomFloor);
        s.data[i] = (ws.data_term.data[i] * plan.prior_spectrum[i] -
                     ws.prior_term.data[i] * plan.data_spectrum[i]) /
                    (den * den);
    }
    const RealField dxdg = ifft2(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < dxdg.size(); ++i) acc += dxdg.data[i] * ws.delta_x.data[i];
    return acc;
}

namespace {

// Cached per-entry state: everything that does not change across restarts.
struct EntryState {
    Image clean;
    Image y;
    const DeconvPlan* plan = nullptr;
};

struct PreparedData {
    std::vector<EntryState> entries;
    std::map<std::string, std::map<std::pair<int, int>, DeconvPlan>> plans;
};

PreparedData prepare_entries(const DatasetManifest& data) {
    PreparedData p;
    p.entries.reserve(data.size());
    for (const ManifestEntry& e : data) {
        EntryState s;
        s.clean = read_image(e.clean_path);
        const BlurKernel k = read_kernel(e.kernel_path);
        s.y = blur_synthesize(s.clean, k,
                              SynthesisConfig{e.sigma, e.seed, Boundary::kCircular});
        auto& by_size = p.plans[e.kernel_path];
        const std::pair<int, int> size{s.y.height, s.y.width};
        if (!by_size.count(size)) by_size.emplace(size, make_plan(k, s.y.height, s.y.width));
        p.entries.push_back(std::move(s));
    }
    // Resolve plan pointers after the maps stop moving.
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& e = data[i];
        const std::pair<int, int> size{p.entries[i].y.height, p.entries[i].y.width};
        p.entries[i].plan = &p.plans.at(e.kernel_path).at(size);
    }
    return p;
}

struct StageRecord {
    Image x_prev;           // input of the stage's denoiser
    GradientField zh, zw;   // denoised gradients fed to the deconvolution
};

// Forward pass through the whole pipeline for one entry, recording what the
// backward pass needs. Returns the final restored image.
Image forward_with_records(const EntryState& entry,
                           const std::vector<DenoiserWeights>& weights,
                           PipelineDomain domain, double gamma0,
                           const std::vector<double>& gammas,
                           std::vector<StageRecord>& records) {
    const DeconvPlan& plan = *entry.plan;
    Image x = initial_deconv(entry.y, plan, gamma0);
    records.clear();
    records.resize(gammas.size());
    for (std::size_t t = 0; t < gammas.size(); ++t) {
        StageRecord& rec = records[t];
        rec.x_prev = x;
        if (domain == PipelineDomain::kGradient) {
            auto [gh, gw] = grad_extract(x);
            std::tie(rec.zh, rec.zw) = denoise_gradients(weights[t], gh, gw);
        } else {
            const Image denoised = fcnn_forward(weights[t], x);
            std::tie(rec.zh, rec.zw) = grad_extract(denoised);
        }
        x = deconv_step(entry.y, plan, rec.zh, rec.zw, gammas[t]);
    }
    return x;
}

// Gradient of the loss w.r.t. the input of a frozen denoiser application.
GradientField denoiser_input_grad(const DenoiserWeights& w, const GradientField& input,
                                  const GradientField& upstream) {
    GradientField din;
    fcnn_backward(w, input, upstream, &din);
    return din;
}

// Backward pass for one entry; accumulates d loss / d gamma for gamma0 and
// every stage into `ggrad` (size T+1, index 0 = gamma0).
void backward_entry(const EntryState& entry, const std::vector<DenoiserWeights>& weights,
                    PipelineDomain domain, double gamma0, const std::vector<double>& gammas,
                    const std::vector<StageRecord>& records, const Image& x_final,
                    int loss_n, std::vector<double>& ggrad) {
    const DeconvPlan& plan = *entry.plan;
    RealField delta = loss_hyper_subgradient(x_final, entry.clean, loss_n);

    for (int t = static_cast<int>(gammas.size()) - 1; t >= 0; --t) {
        const StageRecord& rec = records[t];
        HyperGradientWorkspace ws =
            make_workspace(plan, entry.y, &rec.zh, &rec.zw, delta);
        ggrad[t + 1] += grad_wrt_gamma(ws, gammas[t]);

        auto [dzh, dzw] = grad_wrt_z(plan, gammas[t], delta);
        if (domain == PipelineDomain::kGradient) {
            auto [gh, gw] = grad_extract(rec.x_prev);
            const GradientField dgh = denoiser_input_grad(weights[t], gh, dzh);
            const GradientField dgw =
                transpose(denoiser_input_grad(weights[t], transpose(gw), transpose(dzw)));
            delta = grad_extract_adjoint(dgh, dgw);
        } else {
            const RealField d_denoised = grad_extract_adjoint(dzh, dzw);
            delta = denoiser_input_grad(weights[t], rec.x_prev, d_denoised);
        }
    }

    HyperGradientWorkspace ws0 = make_workspace(plan, entry.y, nullptr, nullptr, delta);
    ggrad[0] += grad_wrt_gamma(ws0, gamma0);
}

void project_monotone(std::vector<double>& g) {
    for (std::size_t t = 1; t < g.size(); ++t) g[t] = std::min(g[t], g[t - 1]);
}

double full_dataset_loss(const PreparedData& prep,
                         const std::vector<DenoiserWeights>& weights,
                         PipelineDomain domain, double gamma0,
                         const std::vector<double>& gammas) {
    const int n = static_cast<int>(prep.entries.size());
    std::vector<double> losses(n, 0.0);
    parallel_for(n, [&](int i) {
        std::vector<StageRecord> records;
        const Image x = forward_with_records(prep.entries[i], weights, domain, gamma0,
                                             gammas, records);
        losses[i] = loss_hyper(x, prep.entries[i].clean, n);
    });
    double total = 0.0;
    for (double v : losses) total += v;
    return total;
}

} // namespace

HyperTrainResult train_hyper(const DatasetManifest& data,
                             const std::vector<DenoiserWeights>& stage_weights,
                             PipelineDomain domain, const HyperTrainConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("train_hyper: empty dataset");
    if (stage_weights.empty())
        throw std::invalid_argument("train_hyper: no stage weights");
    if (cfg.lr_last <= 0.0 || cfg.lr_other <= 0.0 || cfg.restarts < 1 ||
        cfg.batch_size < 1 || cfg.init_min <= 0.0 || cfg.init_max < cfg.init_min)
        throw std::invalid_argument("train_hyper: bad config");

    const PreparedData prep = prepare_entries(data);
    const int T = static_cast<int>(stage_weights.size());
    const int n_entries = static_cast<int>(prep.entries.size());

    HyperTrainResult best;
    bool have_best = false;

    for (int restart = 0; restart < cfg.restarts; ++restart) {
        Rng rng = Rng::substream(cfg.seed, restart);

        // Log-uniform draws, reordered so later modules get smaller gammas.
        std::vector<double> g(T + 1);
        const double log_lo = std::log(cfg.init_min), log_hi = std::log(cfg.init_max);
        for (double& v : g) v = std::exp(rng.uniform(log_lo, log_hi));
        std::sort(g.begin(), g.end(), std::greater<>());

        std::vector<double> velocity(T + 1, 0.0);
        std::vector<double> loss_log;
        loss_log.reserve(cfg.iterations);

        for (int iter = 0; iter < cfg.iterations; ++iter) {
            std::vector<int> batch(cfg.batch_size);
            for (int& b : batch) b = static_cast<int>(rng.below(n_entries));

            const double gamma0 = g[0];
            const std::vector<double> gammas(g.begin() + 1, g.end());

            std::vector<std::vector<double>> partial(cfg.batch_size,
                                                     std::vector<double>(T + 1, 0.0));
            std::vector<double> partial_loss(cfg.batch_size, 0.0);
            parallel_for(cfg.batch_size, [&](int b) {
                const EntryState& entry = prep.entries[batch[b]];
                std::vector<StageRecord> records;
                const Image x = forward_with_records(entry, stage_weights, domain, gamma0,
                                                     gammas, records);
                partial_loss[b] = loss_hyper(x, entry.clean, cfg.batch_size);
                backward_entry(entry, stage_weights, domain, gamma0, gammas, records, x,
                               cfg.batch_size, partial[b]);
            });

            std::vector<double> grad(T + 1, 0.0);
            double batch_loss = 0.0;
            for (int b = 0; b < cfg.batch_size; ++b) {
                for (int t = 0; t <= T; ++t) grad[t] += partial[b][t];
                batch_loss += partial_loss[b];
            }
            loss_log.push_back(batch_loss);

            for (int t = 0; t <= T; ++t) {
                const double lr = (t == T) ? cfg.lr_last : cfg.lr_other;
                velocity[t] = cfg.momentum * velocity[t] - lr * grad[t];
                g[t] += velocity[t];
                if (g[t] <= 0.0) {
                    std::cerr << "train_hyper: gamma[" << t
                              << "] stepped non-positive; clamped to " << kGammaFloor
                              << "\n";
                    g[t] = kGammaFloor;
                    velocity[t] = 0.0;
                }
            }
            if (cfg.monotone_projection) project_monotone(g);
        }

        const std::vector<double> gammas(g.begin() + 1, g.end());
        const double final_loss =
            full_dataset_loss(prep, stage_weights, domain, g[0], gammas);
        if (!have_best || final_loss < best.final_loss) {
            best.gamma0 = g[0];
            best.gammas = gammas;
            best.final_loss = final_loss;
            best.loss_log = std::move(loss_log);
            have_best = true;
        }
    }
    return best;
}

} // namespace idcv
