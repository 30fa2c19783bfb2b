#include "idcv/pipeline.hpp"

#include <tuple>

#include "idcv/pgm.hpp"

#include <stdexcept>

namespace idcv {

namespace {

void validate_config(const PipelineConfig& cfg) {
    if (cfg.gammas.empty())
        throw std::invalid_argument("pipeline: at least one iteration required");
    if (cfg.gammas.size() != cfg.stage_weights.size())
        throw std::invalid_argument("pipeline: gamma list and weight list sizes differ");
    if (cfg.gamma0 <= 0.0)
        throw std::invalid_argument("pipeline: gamma0 must be > 0");
    double prev = cfg.gamma0;
    for (double g : cfg.gammas) {
        if (g <= 0.0) throw std::invalid_argument("pipeline: gammas must be > 0");
        if (cfg.monotone_gammas && g > prev * (1.0 + 1e-12))
            throw std::invalid_argument("pipeline: gamma sequence must be non-increasing");
        prev = g;
    }
    for (const DenoiserWeights& w : cfg.stage_weights)
        if (!matches_architecture(w))
            throw std::invalid_argument("pipeline: weights do not match the fixed architecture");
}

// One denoise-then-deconvolve round.
Image iterate_once(const Image& y, const DeconvPlan& plan, const PipelineConfig& cfg,
                   const Image& x_prev, int t) {
    GradientField zh, zw;
    if (cfg.domain == PipelineDomain::kGradient) {
        auto [gh, gw] = grad_extract(x_prev);
        std::tie(zh, zw) = denoise_gradients(cfg.stage_weights[t], gh, gw);
    } else {
        const Image denoised = fcnn_forward(cfg.stage_weights[t], x_prev);
        std::tie(zh, zw) = grad_extract(denoised);
    }
    return deconv_step(y, plan, zh, zw, cfg.gammas[t]);
}

} // namespace

PipelineConfig config_from_archive(const WeightArchive& archive, PipelineDomain domain) {
    PipelineConfig cfg;
    cfg.gamma0 = archive.gamma0;
    cfg.gammas = archive.gammas;
    cfg.stage_weights = archive.stages;
    cfg.domain = domain;
    return cfg;
}

Image run_pipeline(const Image& y, const BlurKernel& k, const PipelineConfig& cfg,
                   std::vector<Image>* intermediates) {
    validate_config(cfg);
    const DeconvPlan plan = make_plan(k, y.height, y.width);
    Image x = initial_deconv(y, plan, cfg.gamma0);
    if (intermediates) intermediates->push_back(x);
    for (std::size_t t = 0; t < cfg.gammas.size(); ++t) {
        x = iterate_once(y, plan, cfg, x, static_cast<int>(t));
        if (intermediates) intermediates->push_back(x);
    }
    return x;
}

Image run_prefix(const Image& y, const DeconvPlan& plan, const PipelineConfig& cfg,
                 int stage) {
    if (stage < 1 || static_cast<std::size_t>(stage) > cfg.gammas.size() + 1)
        throw std::invalid_argument("run_prefix: stage out of range");
    Image x = initial_deconv(y, plan, cfg.gamma0);
    for (int t = 0; t + 1 < stage; ++t) x = iterate_once(y, plan, cfg, x, t);
    return x;
}

std::vector<TrainSample> prepare_stage_samples(const DatasetManifest& manifest,
                                               const PipelineConfig& cfg, int stage) {
    if (manifest.empty())
        throw std::invalid_argument("prepare_stage_samples: empty dataset");
    if (stage > 1 && (cfg.stage_weights.size() < static_cast<std::size_t>(stage) - 1 ||
                      cfg.gammas.size() < static_cast<std::size_t>(stage) - 1))
        throw std::invalid_argument("prepare_stage_samples: missing earlier stage weights");

    std::vector<TrainSample> samples;
    samples.reserve(manifest.size() * (cfg.domain == PipelineDomain::kGradient ? 2 : 1));
    for (const ManifestEntry& e : manifest) {
        const Image clean = read_image(e.clean_path);
        const BlurKernel k = read_kernel(e.kernel_path);
        const Image y = blur_synthesize(clean, k,
                                        SynthesisConfig{e.sigma, e.seed, Boundary::kCircular});
        const DeconvPlan plan = make_plan(k, y.height, y.width);
        const Image x_in = run_prefix(y, plan, cfg, stage);

        if (cfg.domain == PipelineDomain::kGradient) {
            auto [gh, gw] = grad_extract(x_in);
            auto [th, tw] = grad_extract(clean);
            samples.push_back({std::move(gh), std::move(th)});
            samples.push_back({transpose(gw), transpose(tw)});
        } else {
            samples.push_back({x_in, clean});
        }
    }
    return samples;
}

} // namespace idcv
