#ifndef IDCV_DECONV_HPP
#define IDCV_DECONV_HPP

#include <utility>

#include "idcv/fft.hpp"
#include "idcv/field.hpp"
#include "idcv/kernel.hpp"

namespace idcv {

// Fixed gradient operators: forward differences with circular wrap,
// p_h = [+1,-1] along the width and its transpose along the height.
// grad_h[i,j] = x[i,(j+1) mod W] - x[i,j], grad_w analogously down rows.
std::pair<GradientField, GradientField> grad_extract(const Image& x);

// Adjoint of grad_extract: given (dh, dw) accumulated on the gradient
// fields, returns the corresponding field on x. Used when backpropagating
// through the gradient extraction.
RealField grad_extract_adjoint(const GradientField& dh, const GradientField& dw);

// Kernel zero-embedded at h x w with its center tap circularly shifted to
// index [0,0], so multiplication in frequency equals centered circular
// convolution in space.
RealField embed_kernel(const RealField& k, int h, int w);
FrequencyField psf2otf(const RealField& k, int h, int w);
FrequencyField psf2otf(const BlurKernel& k, int h, int w);

// Everything fixed per (kernel, image size): the OTF, the gradient filter
// spectra, G = |F(k)|^2 and H = sum_l |F(p_l)|^2. Immutable after
// construction and shareable across threads.
struct DeconvPlan {
    int height = 0;
    int width = 0;
    FrequencyField otf;                 // F(k)
    FrequencyField grad_h_otf;          // F(p_h)
    FrequencyField grad_w_otf;          // F(p_w)
    std::vector<double> data_spectrum;  // G, real and >= 0, G[0,0] = 1
    std::vector<double> prior_spectrum; // H, real and >= 0, H[0,0] = 0
};

DeconvPlan make_plan(const BlurKernel& k, int h, int w);

// Closed-form minimizer of the quadratic deconvolution subproblem under
// circular boundary:
//   x = ifft2( (g * conj(F(k)) F(y) + sum_l conj(F(p_l)) F(z_l))
//              / (g * G + H) )
// The denominator is clamped below at 1e-12 to protect degenerate kernels;
// with a normalized kernel it is >= g at DC so well-posed systems are
// untouched and algebraic identities hold exactly.
Image deconv_step(const Image& y, const DeconvPlan& plan, const GradientField& z_h,
                  const GradientField& z_w, double gamma);

// deconv_step with z = 0: a Tikhonov-regularized inverse filter, the
// "initial result" fed to the first denoiser.
Image initial_deconv(const Image& y, const DeconvPlan& plan, double gamma0);

} // namespace idcv

#endif
