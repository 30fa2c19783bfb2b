#ifndef IDCV_HYPER_HPP
#define IDCV_HYPER_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "idcv/deconv.hpp"
#include "idcv/field.hpp"
#include "idcv/manifest.hpp"
#include "idcv/pipeline.hpp"

namespace idcv {

// (1/N) * sum |x - x0|, the restoration loss minimized during
// hyper-parameter training.
double loss_hyper(const Image& x, const Image& x0, int n);

// Per-pixel subgradient of loss_hyper: sign(x - x0)/N, 0 at zero residual.
RealField loss_hyper_subgradient(const Image& x, const Image& x0, int n);

// Adjoint of deconv_step with respect to the denoised gradients:
//   delta_z_l = ifft2( F(p_l) * fft2(delta_x) / (g*G + H) ).
// This is the exact adjoint of the solver's linear map (the denominator is
// real); validated against finite differences.
std::pair<GradientField, GradientField> grad_wrt_z(const DeconvPlan& plan, double gamma,
                                                   const RealField& delta_x);

// Spectra entering the gamma derivative of one deconvolution module:
// D = conj(F(k)) F(y) and E = sum_l conj(F(p_l)) F(z_l); G and H live in
// the plan. delta_x is the upstream gradient on the module output.
struct HyperGradientWorkspace {
    const DeconvPlan* plan = nullptr;
    FrequencyField data_term;   // D
    FrequencyField prior_term;  // E (zero spectrum when z = 0)
    RealField delta_x;
};

HyperGradientWorkspace make_workspace(const DeconvPlan& plan, const Image& y,
                                      const GradientField* z_h, const GradientField* z_w,
                                      RealField delta_x);

// d loss / d gamma for one module:
//   sum over pixels of ifft2( (D*H - E*G) / (g*G + H)^2 ) .* delta_x
// (the spectrum is conjugate symmetric, so the inverse transform is real).
double grad_wrt_gamma(const HyperGradientWorkspace& ws, double gamma);

struct HyperTrainConfig {
    double lr_last = 10.0;      // last deconvolution module
    double lr_other = 10000.0;  // every other module, including the initial one
    double momentum = 0.95;
    int iterations = 50;
    int batch_size = 2;
    int restarts = 4;
    std::uint64_t seed = 0;
    bool monotone_projection = true;
    double init_min = 10.0;  // log-uniform initialization range
    double init_max = 1e4;
};

struct HyperTrainResult {
    double gamma0 = 0.0;
    std::vector<double> gammas;
    double init_gamma0 = 0.0;            // where the selected restart started
    std::vector<double> init_gammas;
    double final_loss = 0.0;        // full-dataset loss of the selected restart
    std::vector<double> loss_log;   // per-iteration batch loss, selected restart
};

// End-to-end SGD over (gamma0, gamma_1..T) with the denoiser weights
// frozen. The backward pass chains the gamma and z adjoints through the
// (exactly differentiated) denoiser and the gradient extraction at every
// stage. Each restart draws gammas log-uniform in [init_min, init_max],
// reordered non-increasing; the restart with the lowest full-dataset loss
// wins. Gammas that step non-positive are clamped to 1e-6 with a warning.
HyperTrainResult train_hyper(const DatasetManifest& data,
                             const std::vector<DenoiserWeights>& stage_weights,
                             PipelineDomain domain, const HyperTrainConfig& cfg);

} // namespace idcv

#endif
