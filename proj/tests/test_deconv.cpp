#include <doctest.h>

#include <cmath>

#include "idcv/blur.hpp"
#include "idcv/deconv.hpp"
#include "idcv/metrics.hpp"
#include "support/oracles.hpp"

using namespace idcv;

namespace {

double max_abs_diff(const RealField& a, const RealField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

BlurKernel gaussian_kernel(int size, double sigma) {
    BlurKernel k;
    k.height = k.width = size;
    k.taps.assign(static_cast<std::size_t>(size) * size, 0.0);
    const int r = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            const double d2 = static_cast<double>((i - r) * (i - r) + (j - r) * (j - r));
            k.at(i, j) = std::exp(-d2 / (2.0 * sigma * sigma));
            sum += k.at(i, j);
        }
    for (double& t : k.taps) t /= sum;
    return k;
}

// The half-quadratic deconvolution objective the solver minimizes.
double hq_objective(const Image& x, const Image& y, const BlurKernel& k,
                    const GradientField& zh, const GradientField& zw, double gamma) {
    const Image kx = blur_synthesize(x, k, {0.0, 0, Boundary::kCircular});
    double data = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y.data[i] - kx.data[i];
        data += d * d;
    }
    auto [gh, gw] = grad_extract(x);
    double prior = 0.0;
    for (std::size_t i = 0; i < gh.size(); ++i) {
        const double dh = zh.data[i] - gh.data[i];
        const double dw = zw.data[i] - gw.data[i];
        prior += dh * dh + dw * dw;
    }
    return gamma * data + prior;
}

} // namespace

TEST_CASE("grad_extract computes circular forward differences") {
    const Image c(6, 6, 0.3);
    auto [gh0, gw0] = grad_extract(c);
    for (double v : gh0.data) CHECK(v == 0.0);
    for (double v : gw0.data) CHECK(v == 0.0);

    const int w = 5;
    const double step = 0.1;
    Image ramp(3, w);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < w; ++j) ramp.at(i, j) = step * j;
    auto [gh, gw] = grad_extract(ramp);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < w - 1; ++j)
            CHECK(gh.at(i, j) == doctest::Approx(step).epsilon(1e-12));
        CHECK(gh.at(i, w - 1) == doctest::Approx(-(w - 1) * step).epsilon(1e-12));
    }
    for (double v : gw.data) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("grad_extract agrees with embedded-filter convolution") {
    Rng rng(3);
    const Image x = test::random_field(rng, 5, 5);
    auto [gh, gw] = grad_extract(x);

    RealField ph(1, 2);
    ph.at(0, 0) = 1.0;
    ph.at(0, 1) = -1.0;
    const RealField gh_conv = circular_convolve(x, embed_kernel(ph, 5, 5));
    CHECK(max_abs_diff(gh, gh_conv) < 1e-12);

    RealField pw(2, 1);
    pw.at(0, 0) = 1.0;
    pw.at(1, 0) = -1.0;
    const RealField gw_conv = circular_convolve(x, embed_kernel(pw, 5, 5));
    CHECK(max_abs_diff(gw, gw_conv) < 1e-12);
}

TEST_CASE("grad_extract_adjoint satisfies the inner-product identity") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const Image x = test::random_field(rng, 6, 7);
        const GradientField dh = test::random_field(rng, 6, 7);
        const GradientField dw = test::random_field(rng, 6, 7);
        auto [gh, gw] = grad_extract(x);
        double lhs = 0.0;
        for (std::size_t i = 0; i < gh.size(); ++i)
            lhs += gh.data[i] * dh.data[i] + gw.data[i] * dw.data[i];
        const RealField adj = grad_extract_adjoint(dh, dw);
        double rhs = 0.0;
        for (std::size_t i = 0; i < adj.size(); ++i) rhs += adj.data[i] * x.data[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("psf2otf of the identity kernel is all ones") {
    BlurKernel id;
    const FrequencyField otf = psf2otf(id, 6, 6);
    for (const auto& v : otf.data) {
        CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(v.imag()) < 1e-12);
    }
}

TEST_CASE("otf at DC equals the tap sum") {
    for (std::uint64_t seed : {10ULL, 11ULL}) {
        const BlurKernel k = generate_kernel(seed, 13);
        const FrequencyField otf = psf2otf(k, 32, 32);
        CHECK(otf.at(0, 0).real() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(otf.at(0, 0).imag()) < 1e-12);
    }
}

TEST_CASE("frequency-domain kernel application matches the spatial oracle") {
    Rng rng(23);
    const Image x = test::random_field(rng, 6, 6);
    BlurKernel k;
    k.height = k.width = 3;
    k.taps = {0.0, 0.1, 0.0, 0.2, 0.4, 0.1, 0.0, 0.2, 0.0};

    FrequencyField prod = fft2(x);
    const FrequencyField otf = psf2otf(k, 6, 6);
    for (std::size_t i = 0; i < prod.size(); ++i) prod.data[i] *= otf.data[i];
    const RealField via_fft = ifft2(prod);

    RealField kf(3, 3);
    kf.data = k.taps;
    const RealField direct = circular_convolve(x, embed_kernel(kf, 6, 6));
    CHECK(max_abs_diff(via_fft, direct) < 1e-10);
}

TEST_CASE("plan spectra satisfy their invariants") {
    const BlurKernel k = generate_kernel(5, 15);
    const DeconvPlan plan = make_plan(k, 32, 32);
    CHECK(plan.data_spectrum[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(plan.prior_spectrum[0]) < 1e-12);
    for (std::size_t i = 0; i < plan.data_spectrum.size(); ++i) {
        CHECK(plan.data_spectrum[i] >= -1e-15);
        CHECK(plan.prior_spectrum[i] >= -1e-15);
    }
}

TEST_CASE("identity kernel with z = grad(y) returns y exactly") {
    Rng rng(29);
    const Image y = test::random_field(rng, 6, 6);
    BlurKernel id;
    const DeconvPlan plan = make_plan(id, 6, 6);
    auto [zh, zw] = grad_extract(y);
    for (double gamma : {0.5, 1.0, 100.0}) {
        const Image x = deconv_step(y, plan, zh, zw, gamma);
        CHECK(max_abs_diff(x, y) < 1e-12);
    }
}

TEST_CASE("high-gamma noiseless deconvolution recovers the input sharply") {
    Rng rng(31);
    const Image x0 = test::make_scene(rng, 32, 32);
    const BlurKernel k = gaussian_kernel(7, 1.2);
    const Image y = blur_synthesize(x0, k, {0.0, 0, Boundary::kCircular});
    const DeconvPlan plan = make_plan(k, 32, 32);
    GradientField zero(32, 32);
    const Image x = deconv_step(y, plan, zero, zero, 1e8);
    CHECK(psnr(x, x0) > 60.0);
}

TEST_CASE("deconv_step matches the dense normal-equations solve") {
    Rng rng(37);
    for (int trial = 0; trial < 5; ++trial) {
        const int h = 4 + static_cast<int>(rng.below(3));
        const int w = 4 + static_cast<int>(rng.below(3));
        const Image y = test::random_field(rng, h, w);
        BlurKernel k;
        k.height = k.width = 3;
        k.taps.resize(9);
        double sum = 0.0;
        for (double& t : k.taps) {
            t = rng.uniform01();
            sum += t;
        }
        for (double& t : k.taps) t /= sum;
        const GradientField zh = test::random_field(rng, h, w);
        const GradientField zw = test::random_field(rng, h, w);
        const double gamma = rng.uniform(0.1, 10.0);

        const DeconvPlan plan = make_plan(k, h, w);
        const Image fast = deconv_step(y, plan, zh, zw, gamma);
        const Image dense = test::dense_deconv(y, k, zh, zw, gamma);
        CHECK(max_abs_diff(fast, dense) < 1e-8);
    }
}

TEST_CASE("returned minimizer cannot be improved by random perturbations") {
    Rng rng(41);
    const Image y = test::random_field(rng, 6, 6);
    const BlurKernel k = gaussian_kernel(3, 0.8);
    const GradientField zh = test::random_field(rng, 6, 6);
    const GradientField zw = test::random_field(rng, 6, 6);
    const double gamma = 2.0;
    const DeconvPlan plan = make_plan(k, 6, 6);
    const Image x = deconv_step(y, plan, zh, zw, gamma);
    const double fx = hq_objective(x, y, k, zh, zw, gamma);
    for (int d = 0; d < 20; ++d) {
        Image xp = x;
        for (double& v : xp.data) v += 1e-4 * (rng.uniform01() - 0.5);
        CHECK(hq_objective(xp, y, k, zh, zw, gamma) >= fx - 1e-12);
    }
}

TEST_CASE("DC is preserved when z fields have zero mean") {
    Rng rng(43);
    const Image y = test::random_field(rng, 8, 8);
    const BlurKernel k = gaussian_kernel(5, 1.0);
    const DeconvPlan plan = make_plan(k, 8, 8);
    // grad_extract output always has zero mean under circular wrap.
    auto [zh, zw] = grad_extract(test::random_field(rng, 8, 8));
    const Image x = deconv_step(y, plan, zh, zw, 3.0);
    double my = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y.data[i];
        mx += x.data[i];
    }
    CHECK(mx == doctest::Approx(my).epsilon(1e-10));
}

TEST_CASE("deconv_step is jointly linear in y and z") {
    Rng rng(47);
    const BlurKernel k = gaussian_kernel(3, 0.7);
    const DeconvPlan plan = make_plan(k, 6, 6);
    const double gamma = 1.7;
    const Image y1 = test::random_field(rng, 6, 6), y2 = test::random_field(rng, 6, 6);
    const GradientField zh1 = test::random_field(rng, 6, 6), zh2 = test::random_field(rng, 6, 6);
    const GradientField zw1 = test::random_field(rng, 6, 6), zw2 = test::random_field(rng, 6, 6);
    const double a = 0.7, b = -1.3;

    Image ylin(6, 6);
    GradientField zhlin(6, 6), zwlin(6, 6);
    for (std::size_t i = 0; i < ylin.size(); ++i) {
        ylin.data[i] = a * y1.data[i] + b * y2.data[i];
        zhlin.data[i] = a * zh1.data[i] + b * zh2.data[i];
        zwlin.data[i] = a * zw1.data[i] + b * zw2.data[i];
    }
    const Image x1 = deconv_step(y1, plan, zh1, zw1, gamma);
    const Image x2 = deconv_step(y2, plan, zh2, zw2, gamma);
    const Image xlin = deconv_step(ylin, plan, zhlin, zwlin, gamma);
    for (std::size_t i = 0; i < xlin.size(); ++i)
        CHECK(xlin.data[i] == doctest::Approx(a * x1.data[i] + b * x2.data[i]).epsilon(1e-10));
}

TEST_CASE("initial_deconv limit cases") {
    Rng rng(53);
    const Image y = test::random_field(rng, 8, 8);
    BlurKernel id;
    const DeconvPlan plan = make_plan(id, 8, 8);
    const Image x = initial_deconv(y, plan, 1e8);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(std::abs(x.data[i] - y.data[i]) < 1e-6);

    const Image c(8, 8, 0.25);
    const BlurKernel k = gaussian_kernel(5, 1.0);
    const DeconvPlan plan2 = make_plan(k, 8, 8);
    const Image xc = initial_deconv(c, plan2, 17.0);
    for (double v : xc.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("initial_deconv improves a blurred noisy observation") {
    Rng rng(59);
    const Image x0 = test::make_scene(rng, 64, 64);
    const BlurKernel k = generate_kernel(21, 13);
    const Image y = blur_synthesize(x0, k, {0.01, 5, Boundary::kCircular});
    const DeconvPlan plan = make_plan(k, 64, 64);
    // gamma tuned on a coarse grid for this fixture
    double best = -1.0;
    for (double gamma : {30.0, 100.0, 300.0, 1000.0, 3000.0}) {
        const Image x = initial_deconv(y, plan, gamma);
        best = std::max(best, psnr(x, x0));
    }
    CHECK(best > psnr(y, x0));
}

TEST_CASE("deconv argument validation") {
    Rng rng(61);
    const Image y = test::random_field(rng, 6, 6);
    BlurKernel id;
    const DeconvPlan plan = make_plan(id, 6, 6);
    GradientField z(6, 6), bad(6, 5);
    CHECK_THROWS_AS(deconv_step(y, plan, z, bad, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(deconv_step(y, plan, z, z, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(deconv_step(y, plan, z, z, -2.0), std::invalid_argument);
    CHECK_THROWS_AS(initial_deconv(test::random_field(rng, 5, 6), plan, 1.0),
                    std::invalid_argument);
}
