#ifndef IDCV_FIELD_HPP
#define IDCV_FIELD_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace idcv {

// Dense row-major 2-D field of doubles. Images, gradient fields and blur
// kernels all live in this type; values of images are nominally in [0,1].
struct RealField {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    RealField() = default;
    RealField(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * width + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * width + j]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const RealField& o) const { return height == o.height && width == o.width; }
};

// Full-size complex spectrum, unshifted layout (DC at index [0,0]).
struct FrequencyField {
    int height = 0;
    int width = 0;
    std::vector<std::complex<double>> data;

    FrequencyField() = default;
    FrequencyField(int h, int w)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w) {}

    std::complex<double>& at(int i, int j) {
        return data[static_cast<std::size_t>(i) * width + j];
    }
    const std::complex<double>& at(int i, int j) const {
        return data[static_cast<std::size_t>(i) * width + j];
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const FrequencyField& o) const {
        return height == o.height && width == o.width;
    }
};

using Image = RealField;
using GradientField = RealField;

RealField transpose(const RealField& f);

bool all_finite(const RealField& f);
bool all_finite(const FrequencyField& f);

} // namespace idcv

#endif
