#include "idcv/field.hpp"

#include <cmath>

namespace idcv {

RealField transpose(const RealField& f) {
    RealField t(f.width, f.height);
    for (int i = 0; i < f.height; ++i)
        for (int j = 0; j < f.width; ++j)
            t.at(j, i) = f.at(i, j);
    return t;
}

bool all_finite(const RealField& f) {
    for (double v : f.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const FrequencyField& f) {
    for (const auto& v : f.data)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

} // namespace idcv
