#ifndef IDCV_FFT_HPP
#define IDCV_FFT_HPP

#include "idcv/field.hpp"

namespace idcv {

// Unnormalized forward 2-D DFT, DC at [0,0]. Throws std::invalid_argument
// on empty or non-finite input. Any size >= 1 is supported (radix-2 plus
// Bluestein for the rest).
FrequencyField fft2(const RealField& f);

// Inverse 2-D DFT with 1/(HW) normalization. The input must be conjugate
// symmetric (it came from a real field); asymmetry larger than
// `sym_tol * max(1, max |F|)` throws, since it signals an upstream math
// error. The imaginary residue is discarded after the check.
RealField ifft2(const FrequencyField& F, double sym_tol = 1e-8);

// Periodic convolution computed directly in the spatial domain, O((HW)^2).
// Serves as the oracle for the convolution theorem; use the FFT route for
// anything large.
RealField circular_convolve(const RealField& a, const RealField& b);

namespace detail {
// In-place 1-D transform on n complex values, unnormalized, either sign.
void fft_1d(std::complex<double>* x, int n, bool inverse);
// 2-D complex transform used by the public wrappers; unnormalized.
void fft2_inplace(FrequencyField& f, bool inverse);
} // namespace detail

} // namespace idcv

#endif
