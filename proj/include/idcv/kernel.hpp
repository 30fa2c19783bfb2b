#ifndef IDCV_KERNEL_HPP
#define IDCV_KERNEL_HPP

#include <string>
#include <vector>

namespace idcv {

// Blur kernel (PSF): odd dimensions in [1,31], non-negative taps summing
// to 1. Odd sizes keep the center tap well-defined.
struct BlurKernel {
    int height = 1;
    int width = 1;
    std::vector<double> taps{1.0};

    double& at(int i, int j) { return taps[static_cast<std::size_t>(i) * width + j]; }
    double at(int i, int j) const { return taps[static_cast<std::size_t>(i) * width + j]; }
};

// Throws std::invalid_argument if the invariants above are violated.
// Taps in [-1e-12, 0) are clamped to zero first.
void validate_kernel(BlurKernel& k);

// Text format: "height width" then height*width row-major decimal taps,
// whitespace separated. A tap sum within 1e-6 of 1 is renormalized on
// read; a larger deviation is an error.
BlurKernel read_kernel(const std::string& path);
void write_kernel(const std::string& path, const BlurKernel& k);

} // namespace idcv

#endif
