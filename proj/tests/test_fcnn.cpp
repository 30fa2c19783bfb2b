#include <doctest.h>

#include <cmath>

#include "idcv/fcnn.hpp"
#include "idcv/parallel.hpp"
#include "support/oracles.hpp"

using namespace idcv;

namespace {

Tensor3 random_tensor(Rng& rng, int ch, int h, int w, double amp = 1.0) {
    Tensor3 t(ch, h, w);
    for (double& v : t.data) v = amp * (rng.uniform01() - 0.5);
    return t;
}

// Scalar probe loss: inner product of the net output with a fixed field.
double probe_loss(const std::vector<ConvLayer>& layers, const Tensor3& in,
                  const Tensor3& probe) {
    const Tensor3 out = net_forward(layers, in);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * probe.data[i];
    return acc;
}

// Noisy step-edge corpus for the toy training runs.
std::vector<TrainSample> toy_gradient_corpus(int count, int size, std::uint64_t seed) {
    std::vector<TrainSample> data;
    Rng rng(seed);
    for (int s = 0; s < count; ++s) {
        const Image scene = idcv::test::make_scene(rng, size, size);
        GradientField target(size, size);
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j)
                target.at(i, j) = scene.at(i, (j + 1) % size) - scene.at(i, j);
        GradientField input = target;
        for (double& v : input.data) v += 0.05 * rng.gaussian();
        data.push_back({std::move(input), std::move(target)});
    }
    return data;
}

} // namespace

TEST_CASE("zero weights produce zero output") {
    const DenoiserWeights w = make_denoiser_weights();
    Rng rng(1);
    const GradientField g = test::random_field(rng, 8, 8);
    const GradientField out = fcnn_forward(w, g);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("zero input with zero biases gives zero output for any weights") {
    DenoiserWeights w = make_denoiser_weights();
    xavier_init(w, 5);
    const GradientField zero(10, 10);
    const GradientField out = fcnn_forward(w, zero);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("centered-delta conv1 filter reproduces the input pre-ReLU") {
    ConvLayer conv1("conv1", 64, 1, 5, 2);
    conv1.kernel(0, 0)[2 * 5 + 2] = 1.0;  // identity into channel 0
    Rng rng(2);
    const Tensor3 in = random_tensor(rng, 1, 8, 8);
    const Tensor3 out = conv_forward(conv1, in);
    REQUIRE(out.ch == 64);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            CHECK(out.at(0, i, j) == doctest::Approx(in.at(0, i, j)).epsilon(1e-15));
            CHECK(out.at(1, i, j) == 0.0);
        }
}

TEST_CASE("forward output keeps the input spatial size") {
    DenoiserWeights w = make_denoiser_weights();
    xavier_init(w, 3);
    Rng rng(4);
    const GradientField g = test::random_field(rng, 13, 9);
    const GradientField out = fcnn_forward(w, g);
    CHECK(out.height == 13);
    CHECK(out.width == 9);
    CHECK_THROWS_AS(fcnn_forward(w, GradientField(4, 8)), std::invalid_argument);
}

TEST_CASE("denoise_gradients transposes the vertical path") {
    DenoiserWeights w = make_denoiser_weights();
    xavier_init(w, 6);
    Rng rng(7);
    const GradientField g = test::random_field(rng, 9, 9);
    auto [fh, fw] = denoise_gradients(w, g, transpose(g));
    const GradientField direct = fcnn_forward(w, g);
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(fh.data[i] == direct.data[i]);
    const GradientField fw_t = transpose(fw);
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(fw_t.data[i] == direct.data[i]);
}

TEST_CASE("l1 loss basics") {
    GradientField a(8, 8, 0.3), b(8, 8, 0.3);
    CHECK(l1_loss(a, b, a, b, 1) == 0.0);

    GradientField ph(8, 8, 0.1), pw(8, 8, 0.1), th(8, 8, 0.0), tw(8, 8, 0.0);
    CHECK(l1_loss(ph, pw, th, tw, 1) == doctest::Approx(12.8).epsilon(1e-12));
    CHECK_THROWS_AS(l1_loss(ph, pw, th, GradientField(8, 7), 1), std::invalid_argument);
}

TEST_CASE("l1 subgradient matches finite differences away from zero") {
    // d/dp (1/N) sum |p - t| = sign(p - t)/N when p != t.
    const int n = 4;
    GradientField p(3, 3, 0.5), t(3, 3, 0.2);
    const double step = 1e-6;
    const double base = l1_loss(p, p, t, t, n);
    p.at(1, 1) += step;
    const double up = l1_loss(p, p, t, t, n);
    p.at(1, 1) -= 2 * step;
    const double dn = l1_loss(p, p, t, t, n);
    CHECK((up - dn) / (2 * step) == doctest::Approx(1.0 / n).epsilon(1e-6));
    CHECK(base > 0.0);
}

TEST_CASE("two-layer truncation passes finite-difference gradient checks") {
    std::vector<ConvLayer> layers;
    layers.emplace_back("a", 4, 1, 3, 1);
    layers.emplace_back("b", 1, 4, 3, 1);
    Rng rng(11);
    for (ConvLayer& l : layers) xavier_init(l, rng);
    // Nonzero biases so their gradients are exercised too.
    for (ConvLayer& l : layers)
        for (double& b : l.bias) b = 0.1 * (rng.uniform01() - 0.5);

    const Tensor3 in = random_tensor(rng, 1, 8, 8);
    const Tensor3 probe = random_tensor(rng, 1, 8, 8);

    ForwardTrace trace;
    net_forward(layers, in, &trace);
    std::vector<ConvLayer> grads = layers;
    for (ConvLayer& g : grads) {
        std::fill(g.weights.begin(), g.weights.end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
    }
    const Tensor3 din = net_backward(layers, trace, probe, grads);

    const double step = 1e-6;
    int checked = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t wi = 0; wi < layers[l].weights.size(); wi += 7) {
            auto f = [&](double v) {
                std::vector<ConvLayer> pert = layers;
                pert[l].weights[wi] = v;
                return probe_loss(pert, in, probe);
            };
            const double fd = test::central_diff(f, layers[l].weights[wi], step);
            const double an = grads[l].weights[wi];
            if (std::abs(fd) > 1e-8)
                CHECK(std::abs(an - fd) / std::abs(fd) < 1e-4);
            else
                CHECK(std::abs(an - fd) < 1e-6);
            ++checked;
        }
        for (std::size_t bi = 0; bi < layers[l].bias.size(); ++bi) {
            auto f = [&](double v) {
                std::vector<ConvLayer> pert = layers;
                pert[l].bias[bi] = v;
                return probe_loss(pert, in, probe);
            };
            const double fd = test::central_diff(f, layers[l].bias[bi], step);
            CHECK(std::abs(grads[l].bias[bi] - fd) / std::max(1e-8, std::abs(fd)) < 1e-4);
            ++checked;
        }
    }
    CHECK(checked > 30);

    // Input gradient against finite differences on a few pixels.
    for (std::size_t pi = 0; pi < in.data.size(); pi += 11) {
        auto f = [&](double v) {
            Tensor3 pin = in;
            pin.data[pi] = v;
            return probe_loss(layers, pin, probe);
        };
        const double fd = test::central_diff(f, in.data[pi], step);
        if (std::abs(fd) > 1e-8)
            CHECK(std::abs(din.data[pi] - fd) / std::abs(fd) < 1e-4);
    }
}

TEST_CASE("full architecture passes spot finite-difference checks") {
    DenoiserWeights w = make_denoiser_weights();
    xavier_init(w, 13);
    Rng rng(17);
    const GradientField g = test::random_field(rng, 8, 8);
    GradientField probe(8, 8);
    for (double& v : probe.data) v = rng.uniform01() - 0.5;

    GradientField din;
    const std::vector<ConvLayer> grads = fcnn_backward(w, g, probe, &din);

    auto loss = [&](const DenoiserWeights& ww) {
        const GradientField out = fcnn_forward(ww, g);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out.data[i] * probe.data[i];
        return acc;
    };

    const double step = 1e-6;
    Rng pick(19);
    for (int c = 0; c < 12; ++c) {
        const int l = static_cast<int>(pick.below(w.layers.size()));
        const std::size_t wi = pick.below(w.layers[l].weights.size());
        auto f = [&](double v) {
            DenoiserWeights pert = w;
            pert.layers[l].weights[wi] = v;
            return loss(pert);
        };
        const double fd = test::central_diff(f, w.layers[l].weights[wi], step);
        const double an = grads[l].weights[wi];
        if (std::abs(fd) > 1e-7)
            CHECK(std::abs(an - fd) / std::abs(fd) < 1e-4);
    }
}

TEST_CASE("zero upstream produces zero gradients") {
    DenoiserWeights w = make_denoiser_weights();
    xavier_init(w, 23);
    Rng rng(29);
    const GradientField g = test::random_field(rng, 8, 8);
    const GradientField zero(8, 8);
    GradientField din;
    const std::vector<ConvLayer> grads = fcnn_backward(w, g, zero, &din);
    for (const ConvLayer& gl : grads) {
        for (double v : gl.weights) CHECK(v == 0.0);
        for (double v : gl.bias) CHECK(v == 0.0);
    }
    for (double v : din.data) CHECK(v == 0.0);
}

TEST_CASE("identity single-layer net passes upstream through") {
    std::vector<ConvLayer> layers;
    layers.emplace_back("only", 1, 1, 3, 1);
    layers[0].kernel(0, 0)[4] = 1.0;  // centered delta
    Rng rng(31);
    Tensor3 in = random_tensor(rng, 1, 6, 6);
    const Tensor3 up = random_tensor(rng, 1, 6, 6);

    ForwardTrace trace;
    net_forward(layers, in, &trace);
    std::vector<ConvLayer> grads = layers;
    std::fill(grads[0].weights.begin(), grads[0].weights.end(), 0.0);
    std::fill(grads[0].bias.begin(), grads[0].bias.end(), 0.0);
    const Tensor3 din = net_backward(layers, trace, up, grads);
    for (std::size_t i = 0; i < din.data.size(); ++i)
        CHECK(din.data[i] == doctest::Approx(up.data[i]).epsilon(1e-15));
}

TEST_CASE("sgd_step arithmetic") {
    std::vector<ConvLayer> w, g, v;
    w.emplace_back("t", 1, 1, 1, 0);
    w[0].weights[0] = 1.0;
    g = w;
    g[0].weights[0] = 1.0;
    g[0].bias[0] = 0.0;
    v = w;
    v[0].weights[0] = 0.0;

    SUBCASE("no momentum: plain descent") {
        sgd_step(w, g, v, 0.01, 0.0);
        CHECK(w[0].weights[0] == doctest::Approx(0.99).epsilon(1e-15));
    }

    SUBCASE("momentum 0.95 velocity sequence") {
        w[0].weights[0] = 1.0;
        g[0].weights[0] = 0.5;
        sgd_step(w, g, v, 0.1, 0.95);
        CHECK(v[0].weights[0] == doctest::Approx(-0.05).epsilon(1e-14));
        CHECK(w[0].weights[0] == doctest::Approx(0.95).epsilon(1e-14));
        sgd_step(w, g, v, 0.1, 0.95);
        CHECK(v[0].weights[0] == doctest::Approx(-0.0975).epsilon(1e-14));
        CHECK(w[0].weights[0] == doctest::Approx(0.8525).epsilon(1e-14));
    }

    SUBCASE("zero gradients leave weights fixed after velocity decays") {
        v[0].weights[0] = -0.1;
        g[0].weights[0] = 0.0;
        for (int i = 0; i < 2000; ++i) sgd_step(w, g, v, 0.1, 0.95);
        const double settled = w[0].weights[0];
        sgd_step(w, g, v, 0.1, 0.95);
        CHECK(std::abs(w[0].weights[0] - settled) < 1e-12);
    }
}

TEST_CASE("xavier samples respect the bound, variance and determinism") {
    ConvLayer l("conv2", 64, 64, 3, 1);
    Rng rng(37);
    xavier_init(l, rng);
    const double fan = 64.0 * 9 + 64.0 * 9;
    const double bound = std::sqrt(6.0 / fan);
    double mean = 0.0, var = 0.0;
    int n = 0;
    for (double v : l.weights) {
        CHECK(std::abs(v) <= bound);
        mean += v;
        ++n;
        if (n == 10000) break;
    }
    mean /= n;
    n = 0;
    for (double v : l.weights) {
        var += (v - mean) * (v - mean);
        if (++n == 10000) break;
    }
    var /= n - 1;
    CHECK(std::abs(var - 2.0 / fan) / (2.0 / fan) < 0.05);
    for (double b : l.bias) CHECK(b == 0.0);

    DenoiserWeights w1 = make_denoiser_weights(), w2 = make_denoiser_weights();
    xavier_init(w1, 99);
    xavier_init(w2, 99);
    for (std::size_t i = 0; i < w1.layers.size(); ++i)
        CHECK(w1.layers[i].weights == w2.layers[i].weights);
}

TEST_CASE("toy training reduces the loss and is deterministic across threads") {
    const std::vector<TrainSample> data = toy_gradient_corpus(20, 16, 808);
    TrainConfig cfg;
    cfg.iterations = 200;
    cfg.batch_size = 8;
    cfg.seed = 4242;

    std::vector<double> log1;
    set_thread_cap(1);
    const DenoiserWeights w1 = train_denoiser(data, cfg, &log1);
    std::vector<double> log2;
    set_thread_cap(2);
    const DenoiserWeights w2 = train_denoiser(data, cfg, &log2);
    set_thread_cap(0);

    REQUIRE(log1.size() == 200);
    CHECK(log1 == log2);
    for (std::size_t l = 0; l < w1.layers.size(); ++l)
        CHECK(w1.layers[l].weights == w2.layers[l].weights);

    // >= 30% reduction from the initial loss, on smoothed endpoints.
    const auto window_mean = [&](std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += log1[i];
        return acc / (hi - lo);
    };
    const double head = window_mean(0, 10);
    const double tail = window_mean(log1.size() - 10, log1.size());
    CHECK(tail < 0.7 * head);

    // The monotone-smoothed trend decreases: quarter means are ordered.
    const double q1 = window_mean(0, 50);
    const double q4 = window_mean(150, 200);
    CHECK(q4 < q1);

    CHECK_THROWS_AS(train_denoiser({}, cfg), std::invalid_argument);
}

TEST_CASE("trained weights denoise a held-out step edge by at least 30 percent") {
    const std::vector<TrainSample> data = toy_gradient_corpus(20, 16, 909);
    TrainConfig cfg;
    cfg.iterations = 250;
    cfg.batch_size = 8;
    cfg.seed = 777;
    const DenoiserWeights w = train_denoiser(data, cfg);

    // Held-out noisy step-edge gradient.
    const std::vector<TrainSample> held = toy_gradient_corpus(4, 16, 11111);
    double before = 0.0, after = 0.0;
    for (const TrainSample& s : held) {
        const GradientField out = fcnn_forward(w, s.input);
        for (std::size_t i = 0; i < out.size(); ++i) {
            before += std::abs(s.input.data[i] - s.target.data[i]);
            after += std::abs(out.data[i] - s.target.data[i]);
        }
    }
    CHECK(after < 0.7 * before);
}

TEST_CASE("L1-trained model reaches a lower L1 objective than L2-trained") {
    const std::vector<TrainSample> data = toy_gradient_corpus(12, 16, 606);
    TrainConfig cfg;
    cfg.iterations = 150;
    cfg.batch_size = 8;
    cfg.seed = 3131;

    const DenoiserWeights wl1 = train_denoiser(data, cfg);
    cfg.l2_loss = true;
    const DenoiserWeights wl2 = train_denoiser(data, cfg);

    // Both models scored under the reference (L1) objective.
    double l1_of = 0.0, l2_of = 0.0;
    for (const TrainSample& s : data) {
        const GradientField o1 = fcnn_forward(wl1, s.input);
        const GradientField o2 = fcnn_forward(wl2, s.input);
        for (std::size_t i = 0; i < o1.size(); ++i) {
            l1_of += std::abs(o1.data[i] - s.target.data[i]);
            l2_of += std::abs(o2.data[i] - s.target.data[i]);
        }
    }
    CHECK(l1_of <= l2_of);
}
