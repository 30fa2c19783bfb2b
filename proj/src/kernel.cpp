#include "idcv/kernel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace idcv {

void validate_kernel(BlurKernel& k) {
    if (k.height < 1 || k.width < 1)
        throw std::invalid_argument("kernel: non-positive dimensions");
    if (k.height % 2 == 0 || k.width % 2 == 0)
        throw std::invalid_argument("kernel: dimensions must be odd");
    if (k.height > 31 || k.width > 31)
        throw std::invalid_argument("kernel: dimensions exceed 31");
    if (k.taps.size() != static_cast<std::size_t>(k.height) * k.width)
        throw std::invalid_argument("kernel: tap count does not match dimensions");

    double sum = 0.0;
    for (double& t : k.taps) {
        if (!std::isfinite(t)) throw std::invalid_argument("kernel: non-finite tap");
        if (t < 0.0) {
            if (t < -1e-12) throw std::invalid_argument("kernel: negative tap");
            t = 0.0;
        }
        sum += t;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("kernel: taps must sum to 1");
}

BlurKernel read_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("kernel: cannot open " + path);

    BlurKernel k;
    if (!(in >> k.height >> k.width))
        throw std::runtime_error("kernel: malformed dimensions in " + path);
    if (k.height < 1 || k.width < 1)
        throw std::runtime_error("kernel: non-positive dimensions in " + path);

    const std::size_t n = static_cast<std::size_t>(k.height) * k.width;
    k.taps.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(in >> k.taps[i]))
            throw std::runtime_error("kernel: truncated tap list in " + path);
    }

    double sum = 0.0;
    for (double t : k.taps) sum += t;
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::runtime_error("kernel: tap sum " + std::to_string(sum) +
                                 " is not 1 in " + path);
    for (double& t : k.taps) t /= sum;

    validate_kernel(k);
    return k;
}

void write_kernel(const std::string& path, const BlurKernel& k) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("kernel: cannot write " + path);
    out << k.height << " " << k.width << "\n";
    out << std::setprecision(17);
    for (int i = 0; i < k.height; ++i) {
        for (int j = 0; j < k.width; ++j) {
            out << k.at(i, j) << (j + 1 == k.width ? '\n' : ' ');
        }
    }
    if (!out) throw std::runtime_error("kernel: write failed for " + path);
}

} // namespace idcv
