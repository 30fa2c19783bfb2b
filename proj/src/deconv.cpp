#include "idcv/deconv.hpp"

#include <stdexcept>

namespace idcv {

namespace {
constexpr double kDenomFloor = 1e-12;
}

std::pair<GradientField, GradientField> grad_extract(const Image& x) {
    const int h = x.height, w = x.width;
    GradientField gh(h, w), gw(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            gh.at(i, j) = x.at(i, (j + 1) % w) - x.at(i, j);
            gw.at(i, j) = x.at((i + 1) % h, j) - x.at(i, j);
        }
    }
    return {std::move(gh), std::move(gw)};
}

RealField grad_extract_adjoint(const GradientField& dh, const GradientField& dw) {
    if (!dh.same_shape(dw))
        throw std::invalid_argument("grad_extract_adjoint: dimension mismatch");
    const int h = dh.height, w = dh.width;
    RealField out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            out.at(i, j) = dh.at(i, (j - 1 + w) % w) - dh.at(i, j) +
                           dw.at((i - 1 + h) % h, j) - dw.at(i, j);
        }
    }
    return out;
}

RealField embed_kernel(const RealField& k, int h, int w) {
    if (k.height > h || k.width > w)
        throw std::invalid_argument("embed_kernel: kernel larger than target size");
    const int ci = k.height / 2, cj = k.width / 2;
    RealField e(h, w);
    for (int i = 0; i < k.height; ++i) {
        for (int j = 0; j < k.width; ++j) {
            e.at(((i - ci) % h + h) % h, ((j - cj) % w + w) % w) = k.at(i, j);
        }
    }
    return e;
}

FrequencyField psf2otf(const RealField& k, int h, int w) {
    return fft2(embed_kernel(k, h, w));
}

FrequencyField psf2otf(const BlurKernel& k, int h, int w) {
    RealField f(k.height, k.width);
    f.data = k.taps;
    return psf2otf(f, h, w);
}

DeconvPlan make_plan(const BlurKernel& k, int h, int w) {
    if (h < 1 || w < 1) throw std::invalid_argument("make_plan: empty size");

    DeconvPlan plan;
    plan.height = h;
    plan.width = w;
    plan.otf = psf2otf(k, h, w);

    RealField ph(1, 2);
    ph.at(0, 0) = 1.0;
    ph.at(0, 1) = -1.0;
    RealField pw(2, 1);
    pw.at(0, 0) = 1.0;
    pw.at(1, 0) = -1.0;
    plan.grad_h_otf = psf2otf(ph, h, w);
    plan.grad_w_otf = psf2otf(pw, h, w);

    const std::size_t n = plan.otf.size();
    plan.data_spectrum.resize(n);
    plan.prior_spectrum.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        plan.data_spectrum[i] = std::norm(plan.otf.data[i]);
        plan.prior_spectrum[i] =
            std::norm(plan.grad_h_otf.data[i]) + std::norm(plan.grad_w_otf.data[i]);
    }
    return plan;
}

namespace {

Image solve(const Image& y, const DeconvPlan& plan, const GradientField* z_h,
            const GradientField* z_w, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("deconv_step: gamma must be > 0");
    if (y.height != plan.height || y.width != plan.width)
        throw std::invalid_argument("deconv_step: image does not match plan size");
    if (z_h && (!z_h->same_shape(y) || !z_w->same_shape(y)))
        throw std::invalid_argument("deconv_step: gradient field dimension mismatch");

    FrequencyField num = fft2(y);
    const std::size_t n = num.size();
    for (std::size_t i = 0; i < n; ++i)
        num.data[i] *= gamma * std::conj(plan.otf.data[i]);

    if (z_h) {
        const FrequencyField zh_f = fft2(*z_h);
        const FrequencyField zw_f = fft2(*z_w);
        for (std::size_t i = 0; i < n; ++i) {
            num.data[i] += std::conj(plan.grad_h_otf.data[i]) * zh_f.data[i] +
                           std::conj(plan.grad_w_otf.data[i]) * zw_f.data[i];
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const double den = gamma * plan.data_spectrum[i] + plan.prior_spectrum[i];
        num.data[i] /= std::max(den, kDenomFloor);
    }
    return ifft2(num);
}

} // namespace

Image deconv_step(const Image& y, const DeconvPlan& plan, const GradientField& z_h,
                  const GradientField& z_w, double gamma) {
    return solve(y, plan, &z_h, &z_w, gamma);
}

Image initial_deconv(const Image& y, const DeconvPlan& plan, double gamma0) {
    return solve(y, plan, nullptr, nullptr, gamma0);
}

} // namespace idcv
