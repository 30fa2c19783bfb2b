#ifndef IDCV_PIPELINE_HPP
#define IDCV_PIPELINE_HPP

#include <vector>

#include "idcv/blur.hpp"
#include "idcv/deconv.hpp"
#include "idcv/fcnn.hpp"
#include "idcv/field.hpp"
#include "idcv/kernel.hpp"
#include "idcv/manifest.hpp"
#include "idcv/weights_io.hpp"

namespace idcv {

// The denoiser normally runs on gradient fields; intensity mode feeds it
// the image itself and extracts gradients from the denoised image (the
// ablation variant).
enum class PipelineDomain { kGradient, kIntensity };

struct PipelineConfig {
    double gamma0 = 1.0;
    std::vector<double> gammas;                  // one per iteration
    std::vector<DenoiserWeights> stage_weights;  // one per iteration
    PipelineDomain domain = PipelineDomain::kGradient;
    bool monotone_gammas = true;  // require gamma0 >= gamma1 >= ... on entry
};

PipelineConfig config_from_archive(const WeightArchive& archive,
                                   PipelineDomain domain = PipelineDomain::kGradient);

// Full iterative restoration: initial deconvolution, then T rounds of
// gradient extraction, denoising and deconvolution with the denoised
// gradients. When `intermediates` is non-null it receives the initial
// result plus every refinement (T+1 images).
Image run_pipeline(const Image& y, const BlurKernel& k, const PipelineConfig& cfg,
                   std::vector<Image>* intermediates = nullptr);

// Runs the pipeline prefix up to the input of stage `stage` (1-based):
// stage 1 sees the initial deconvolution, stage t sees the output of
// iteration t-1. Used to prepare stage-wise training data with earlier
// stages frozen.
Image run_prefix(const Image& y, const DeconvPlan& plan, const PipelineConfig& cfg,
                 int stage);

// Builds (denoiser input, clean target) pairs for training stage `stage`.
// Gradient domain yields two samples per entry (horizontal, and vertical
// pre-transposed so one weight set serves both); intensity domain yields
// one. cfg must carry trained weights for stages 1..stage-1.
std::vector<TrainSample> prepare_stage_samples(const DatasetManifest& manifest,
                                               const PipelineConfig& cfg, int stage);

} // namespace idcv

#endif
