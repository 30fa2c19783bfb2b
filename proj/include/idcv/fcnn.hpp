#ifndef IDCV_FCNN_HPP
#define IDCV_FCNN_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "idcv/field.hpp"
#include "idcv/rng.hpp"

namespace idcv {

// Channel-major dense activation tensor, [ch][h][w] row-major.
struct Tensor3 {
    int ch = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int c, int hh, int ww)
        : ch(c), h(hh), w(ww), data(static_cast<std::size_t>(c) * hh * ww, 0.0) {}

    double* plane(int c) { return data.data() + static_cast<std::size_t>(c) * h * w; }
    const double* plane(int c) const {
        return data.data() + static_cast<std::size_t>(c) * h * w;
    }
    double& at(int c, int i, int j) {
        return data[(static_cast<std::size_t>(c) * h + i) * w + j];
    }
    double at(int c, int i, int j) const {
        return data[(static_cast<std::size_t>(c) * h + i) * w + j];
    }
};

// One convolution layer, stride 1, constant-zero padding.
// Weights are [out][in][kh][kw] row-major.
struct ConvLayer {
    std::string name;
    int out_ch = 0, in_ch = 0, kh = 0, kw = 0, pad = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    ConvLayer() = default;
    ConvLayer(std::string n, int oc, int ic, int k, int p)
        : name(std::move(n)), out_ch(oc), in_ch(ic), kh(k), kw(k), pad(p),
          weights(static_cast<std::size_t>(oc) * ic * k * k, 0.0), bias(oc, 0.0) {}

    double* kernel(int oc, int ic) {
        return weights.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * kh * kw;
    }
    const double* kernel(int oc, int ic) const {
        return weights.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * kh * kw;
    }
};

// The 6-layer denoiser: conv1 5x5 1->64 pad 2, conv2..conv5 3x3 64->64
// pad 1, conv6 3x3 64->1 pad 1, ReLU after every layer except the last.
struct DenoiserWeights {
    std::vector<ConvLayer> layers;
};

// Zero-valued weights with the fixed architecture above.
DenoiserWeights make_denoiser_weights();

// True iff the layer list matches the fixed architecture exactly.
bool matches_architecture(const DenoiserWeights& w);

// Uniform Xavier fill, bound sqrt(6/(fan_in+fan_out)) with
// fan_in = in*kh*kw and fan_out = out*kh*kw; biases zero.
void xavier_init(ConvLayer& layer, Rng& rng);
void xavier_init(DenoiserWeights& w, std::uint64_t seed);

// Plain convolution; output spatial size equals input (pad = (k-1)/2).
Tensor3 conv_forward(const ConvLayer& layer, const Tensor3& in);

// Accumulates dL/dweights and dL/dbias into `grad` (same shape as layer)
// and returns dL/dinput.
Tensor3 conv_backward(const ConvLayer& layer, const Tensor3& in, const Tensor3& upstream,
                      ConvLayer& grad);

// Forward pass through a layer chain with ReLU between layers (none after
// the last). When `trace` is non-null the input and every pre-activation
// are recorded for the backward pass.
struct ForwardTrace {
    Tensor3 input;
    std::vector<Tensor3> pre;  // pre-activation output of each layer
};
Tensor3 net_forward(const std::vector<ConvLayer>& layers, const Tensor3& in,
                    ForwardTrace* trace = nullptr);

// Exact reverse-mode gradients of net_forward. `grads` must hold
// zero-or-accumulated layers of matching shapes; returns dL/dinput.
Tensor3 net_backward(const std::vector<ConvLayer>& layers, const ForwardTrace& trace,
                     const Tensor3& upstream, std::vector<ConvLayer>& grads);

// Single-channel convenience wrappers over the 6-layer denoiser.
GradientField fcnn_forward(const DenoiserWeights& w, const GradientField& g);
std::vector<ConvLayer> fcnn_backward(const DenoiserWeights& w, const GradientField& g,
                                     const GradientField& upstream,
                                     GradientField* input_grad = nullptr);

// Horizontal gradients pass through f directly; vertical gradients are
// transposed, passed through the same weights, and transposed back.
std::pair<GradientField, GradientField> denoise_gradients(const DenoiserWeights& w,
                                                          const GradientField& gh,
                                                          const GradientField& gw);

// Mean-per-sample L1 loss of Eq-style gradient pairs:
// (1/N) * sum(|pred_h - true_h|) + (1/N) * sum(|pred_w - true_w|).
double l1_loss(const GradientField& pred_h, const GradientField& pred_w,
               const GradientField& true_h, const GradientField& true_w, int n);

// Classical momentum: v <- momentum*v - lr*grad; w <- w + v.
void sgd_step(std::vector<ConvLayer>& layers, const std::vector<ConvLayer>& grads,
              std::vector<ConvLayer>& velocity, double lr, double momentum);

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.95;
    int batch_size = 16;
    int iterations = 100;
    std::uint64_t seed = 0;
    int crop = 0;         // optional square crop per draw; 0 = full field
    bool l2_loss = false; // ablation switch; the reference loss is L1
};

// One training pair, one orientation (vertical fields already transposed).
struct TrainSample {
    GradientField input;
    GradientField target;
};

// Mini-batch SGD over (input, target) gradient pairs. Per-draw gradients
// are computed in parallel and reduced in draw order, so the result is
// identical for any thread count. Returns the trained weights; appends
// the per-iteration training loss to loss_log when given.
DenoiserWeights train_denoiser(const std::vector<TrainSample>& data, const TrainConfig& cfg,
                               std::vector<double>* loss_log = nullptr,
                               DenoiserWeights init = {});

} // namespace idcv

#endif
