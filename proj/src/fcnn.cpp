#include "idcv/fcnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "idcv/parallel.hpp"

namespace idcv {

DenoiserWeights make_denoiser_weights() {
    DenoiserWeights w;
    w.layers.emplace_back("conv1", 64, 1, 5, 2);
    w.layers.emplace_back("conv2", 64, 64, 3, 1);
    w.layers.emplace_back("conv3", 64, 64, 3, 1);
    w.layers.emplace_back("conv4", 64, 64, 3, 1);
    w.layers.emplace_back("conv5", 64, 64, 3, 1);
    w.layers.emplace_back("conv6", 1, 64, 3, 1);
    return w;
}

bool matches_architecture(const DenoiserWeights& w) {
    const DenoiserWeights ref = make_denoiser_weights();
    if (w.layers.size() != ref.layers.size()) return false;
    for (std::size_t l = 0; l < ref.layers.size(); ++l) {
        const ConvLayer& a = w.layers[l];
        const ConvLayer& b = ref.layers[l];
        if (a.name != b.name || a.out_ch != b.out_ch || a.in_ch != b.in_ch ||
            a.kh != b.kh || a.kw != b.kw || a.pad != b.pad)
            return false;
        if (a.weights.size() != b.weights.size() || a.bias.size() != b.bias.size())
            return false;
    }
    return true;
}

void xavier_init(ConvLayer& layer, Rng& rng) {
    const double fan_in = static_cast<double>(layer.in_ch) * layer.kh * layer.kw;
    const double fan_out = static_cast<double>(layer.out_ch) * layer.kh * layer.kw;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : layer.weights) v = rng.uniform(-bound, bound);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

void xavier_init(DenoiserWeights& w, std::uint64_t seed) {
    Rng rng(seed);
    for (ConvLayer& layer : w.layers) xavier_init(layer, rng);
}

Tensor3 conv_forward(const ConvLayer& layer, const Tensor3& in) {
    if (in.ch != layer.in_ch)
        throw std::invalid_argument("conv_forward: channel mismatch");
    const int oh = in.h + 2 * layer.pad - layer.kh + 1;
    const int ow = in.w + 2 * layer.pad - layer.kw + 1;
    if (oh < 1 || ow < 1) throw std::invalid_argument("conv_forward: undersized input");

    Tensor3 out(layer.out_ch, oh, ow);
    parallel_for(layer.out_ch, [&](int oc) {
        double* outp = out.plane(oc);
        const double b = layer.bias[oc];
        for (int i = 0; i < oh * ow; ++i) outp[i] = b;
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            const double* inp = in.plane(ic);
            const double* ker = layer.kernel(oc, ic);
            for (int a = 0; a < layer.kh; ++a) {
                const int i_lo = std::max(0, layer.pad - a);
                const int i_hi = std::min(oh, in.h + layer.pad - a);
                for (int bb = 0; bb < layer.kw; ++bb) {
                    const double wv = ker[a * layer.kw + bb];
                    if (wv == 0.0) continue;
                    const int j_lo = std::max(0, layer.pad - bb);
                    const int j_hi = std::min(ow, in.w + layer.pad - bb);
                    const int dj = bb - layer.pad;
                    for (int i = i_lo; i < i_hi; ++i) {
                        const double* src = inp + (i + a - layer.pad) * in.w + dj;
                        double* dst = outp + i * ow;
                        for (int j = j_lo; j < j_hi; ++j) dst[j] += wv * src[j];
                    }
                }
            }
        }
    });
    return out;
}

Tensor3 conv_backward(const ConvLayer& layer, const Tensor3& in, const Tensor3& upstream,
                      ConvLayer& grad) {
    const int oh = in.h + 2 * layer.pad - layer.kh + 1;
    const int ow = in.w + 2 * layer.pad - layer.kw + 1;
    if (upstream.ch != layer.out_ch || upstream.h != oh || upstream.w != ow)
        throw std::invalid_argument("conv_backward: upstream shape mismatch");
    if (grad.weights.size() != layer.weights.size() ||
        grad.bias.size() != layer.bias.size())
        throw std::invalid_argument("conv_backward: gradient buffer shape mismatch");

    // Weight and bias gradients, one output channel per task.
    parallel_for(layer.out_ch, [&](int oc) {
        const double* up = upstream.plane(oc);
        double bsum = 0.0;
        for (int i = 0; i < oh * ow; ++i) bsum += up[i];
        grad.bias[oc] += bsum;
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            const double* inp = in.plane(ic);
            double* gker = grad.kernel(oc, ic);
            for (int a = 0; a < layer.kh; ++a) {
                const int i_lo = std::max(0, layer.pad - a);
                const int i_hi = std::min(oh, in.h + layer.pad - a);
                for (int bb = 0; bb < layer.kw; ++bb) {
                    const int j_lo = std::max(0, layer.pad - bb);
                    const int j_hi = std::min(ow, in.w + layer.pad - bb);
                    const int dj = bb - layer.pad;
                    double acc = 0.0;
                    for (int i = i_lo; i < i_hi; ++i) {
                        const double* src = inp + (i + a - layer.pad) * in.w + dj;
                        const double* u = up + i * ow;
                        for (int j = j_lo; j < j_hi; ++j) acc += u[j] * src[j];
                    }
                    gker[a * layer.kw + bb] += acc;
                }
            }
        }
    });

    // Input gradient, one input channel per task.
    Tensor3 din(in.ch, in.h, in.w);
    parallel_for(layer.in_ch, [&](int ic) {
        double* dst_plane = din.plane(ic);
        for (int oc = 0; oc < layer.out_ch; ++oc) {
            const double* up = upstream.plane(oc);
            const double* ker = layer.kernel(oc, ic);
            for (int a = 0; a < layer.kh; ++a) {
                const int i_lo = std::max(0, layer.pad - a);
                const int i_hi = std::min(oh, in.h + layer.pad - a);
                for (int bb = 0; bb < layer.kw; ++bb) {
                    const double wv = ker[a * layer.kw + bb];
                    if (wv == 0.0) continue;
                    const int j_lo = std::max(0, layer.pad - bb);
                    const int j_hi = std::min(ow, in.w + layer.pad - bb);
                    const int dj = bb - layer.pad;
                    for (int i = i_lo; i < i_hi; ++i) {
                        double* dst = dst_plane + (i + a - layer.pad) * in.w + dj;
                        const double* u = up + i * ow;
                        for (int j = j_lo; j < j_hi; ++j) dst[j] += wv * u[j];
                    }
                }
            }
        }
    });
    return din;
}

namespace {

Tensor3 relu(const Tensor3& t) {
    Tensor3 out = t;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

} // namespace

Tensor3 net_forward(const std::vector<ConvLayer>& layers, const Tensor3& in,
                    ForwardTrace* trace) {
    if (layers.empty()) throw std::invalid_argument("net_forward: no layers");
    if (trace) {
        trace->input = in;
        trace->pre.clear();
        trace->pre.reserve(layers.size());
    }
    Tensor3 x = in;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Tensor3 pre = conv_forward(layers[l], x);
        const bool last = l + 1 == layers.size();
        if (!last)
            x = relu(pre);
        else
            x = pre;
        if (trace) trace->pre.push_back(std::move(pre));
    }
    return x;
}

Tensor3 net_backward(const std::vector<ConvLayer>& layers, const ForwardTrace& trace,
                     const Tensor3& upstream, std::vector<ConvLayer>& grads) {
    if (grads.size() != layers.size())
        throw std::invalid_argument("net_backward: gradient buffer count mismatch");
    Tensor3 up = upstream;
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        const Tensor3 input_l = l == 0 ? trace.input : relu(trace.pre[l - 1]);
        Tensor3 din = conv_backward(layers[l], input_l, up, grads[l]);
        if (l > 0) {
            const Tensor3& pre_prev = trace.pre[l - 1];
            for (std::size_t i = 0; i < din.data.size(); ++i)
                if (pre_prev.data[i] <= 0.0) din.data[i] = 0.0;
        }
        up = std::move(din);
    }
    return up;
}

namespace {

Tensor3 field_to_tensor(const GradientField& g) {
    Tensor3 t(1, g.height, g.width);
    t.data = g.data;
    return t;
}

GradientField tensor_to_field(const Tensor3& t) {
    GradientField g(t.h, t.w);
    g.data = t.data;
    return g;
}

void check_fcnn_input(const DenoiserWeights& w, const GradientField& g) {
    if (!matches_architecture(w))
        throw std::invalid_argument("fcnn: weights do not match the fixed architecture");
    if (g.height < 5 || g.width < 5)
        throw std::invalid_argument("fcnn: input smaller than 5x5");
}

std::vector<ConvLayer> zero_grads(const std::vector<ConvLayer>& layers) {
    std::vector<ConvLayer> grads = layers;
    for (ConvLayer& g : grads) {
        std::fill(g.weights.begin(), g.weights.end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
    }
    return grads;
}

} // namespace

GradientField fcnn_forward(const DenoiserWeights& w, const GradientField& g) {
    check_fcnn_input(w, g);
    return tensor_to_field(net_forward(w.layers, field_to_tensor(g)));
}

std::vector<ConvLayer> fcnn_backward(const DenoiserWeights& w, const GradientField& g,
                                     const GradientField& upstream,
                                     GradientField* input_grad) {
    check_fcnn_input(w, g);
    if (!upstream.same_shape(g))
        throw std::invalid_argument("fcnn_backward: upstream shape mismatch");
    ForwardTrace trace;
    net_forward(w.layers, field_to_tensor(g), &trace);
    std::vector<ConvLayer> grads = zero_grads(w.layers);
    Tensor3 din = net_backward(w.layers, trace, field_to_tensor(upstream), grads);
    if (input_grad) *input_grad = tensor_to_field(din);
    return grads;
}

std::pair<GradientField, GradientField> denoise_gradients(const DenoiserWeights& w,
                                                          const GradientField& gh,
                                                          const GradientField& gw) {
    GradientField fh = fcnn_forward(w, gh);
    GradientField fw = transpose(fcnn_forward(w, transpose(gw)));
    return {std::move(fh), std::move(fw)};
}

double l1_loss(const GradientField& pred_h, const GradientField& pred_w,
               const GradientField& true_h, const GradientField& true_w, int n) {
    if (!pred_h.same_shape(true_h) || !pred_w.same_shape(true_w))
        throw std::invalid_argument("l1_loss: shape mismatch");
    if (n < 1) throw std::invalid_argument("l1_loss: n must be >= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred_h.size(); ++i)
        acc += std::abs(pred_h.data[i] - true_h.data[i]);
    for (std::size_t i = 0; i < pred_w.size(); ++i)
        acc += std::abs(pred_w.data[i] - true_w.data[i]);
    return acc / n;
}

void sgd_step(std::vector<ConvLayer>& layers, const std::vector<ConvLayer>& grads,
              std::vector<ConvLayer>& velocity, double lr, double momentum) {
    if (grads.size() != layers.size() || velocity.size() != layers.size())
        throw std::invalid_argument("sgd_step: shape mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        ConvLayer& w = layers[l];
        const ConvLayer& g = grads[l];
        ConvLayer& v = velocity[l];
        for (std::size_t i = 0; i < w.weights.size(); ++i) {
            v.weights[i] = momentum * v.weights[i] - lr * g.weights[i];
            w.weights[i] += v.weights[i];
        }
        for (std::size_t i = 0; i < w.bias.size(); ++i) {
            v.bias[i] = momentum * v.bias[i] - lr * g.bias[i];
            w.bias[i] += v.bias[i];
        }
    }
}

DenoiserWeights train_denoiser(const std::vector<TrainSample>& data, const TrainConfig& cfg,
                               std::vector<double>* loss_log, DenoiserWeights init) {
    if (data.empty()) throw std::invalid_argument("train_denoiser: empty dataset");
    if (cfg.batch_size < 1 || cfg.learning_rate <= 0.0 || cfg.momentum < 0.0 ||
        cfg.momentum >= 1.0)
        throw std::invalid_argument("train_denoiser: bad config");

    DenoiserWeights w = std::move(init);
    if (w.layers.empty()) {
        w = make_denoiser_weights();
        xavier_init(w, Rng::substream(cfg.seed, 1).next_u64());
    }
    if (!matches_architecture(w))
        throw std::invalid_argument("train_denoiser: init weights do not match architecture");

    std::vector<ConvLayer> velocity = zero_grads(w.layers);
    Rng rng = Rng::substream(cfg.seed, 0);

    struct Draw {
        int sample;
        int i0, j0, size;
    };

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        // Draws come from the single stream up front; the heavy math then
        // runs in parallel with per-draw buffers and a fixed-order reduce.
        std::vector<Draw> draws(cfg.batch_size);
        for (Draw& d : draws) {
            d.sample = static_cast<int>(rng.below(data.size()));
            const GradientField& f = data[d.sample].input;
            int c = cfg.crop > 0 ? std::min({cfg.crop, f.height, f.width}) : 0;
            if (c > 0 && (c < f.height || c < f.width)) {
                d.i0 = static_cast<int>(rng.below(f.height - c + 1));
                d.j0 = static_cast<int>(rng.below(f.width - c + 1));
                d.size = c;
            } else {
                d.i0 = d.j0 = 0;
                d.size = 0;  // full field
            }
        }

        std::vector<std::vector<ConvLayer>> partial(cfg.batch_size);
        std::vector<double> partial_loss(cfg.batch_size, 0.0);
        const double inv_n = 1.0 / cfg.batch_size;

        parallel_for(cfg.batch_size, [&](int b) {
            const Draw& d = draws[b];
            const TrainSample& s = data[d.sample];
            GradientField in, tgt;
            if (d.size > 0) {
                in = GradientField(d.size, d.size);
                tgt = GradientField(d.size, d.size);
                for (int i = 0; i < d.size; ++i)
                    for (int j = 0; j < d.size; ++j) {
                        in.at(i, j) = s.input.at(d.i0 + i, d.j0 + j);
                        tgt.at(i, j) = s.target.at(d.i0 + i, d.j0 + j);
                    }
            } else {
                in = s.input;
                tgt = s.target;
            }

            ForwardTrace trace;
            Tensor3 out = net_forward(w.layers, field_to_tensor(in), &trace);

            Tensor3 up(1, out.h, out.w);
            double loss = 0.0;
            for (std::size_t i = 0; i < out.data.size(); ++i) {
                const double r = out.data[i] - tgt.data[i];
                if (cfg.l2_loss) {
                    loss += r * r;
                    up.data[i] = 2.0 * r * inv_n;
                } else {
                    loss += std::abs(r);
                    up.data[i] = r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0);
                }
            }
            partial_loss[b] = loss;

            partial[b] = zero_grads(w.layers);
            net_backward(w.layers, trace, up, partial[b]);
        });

        std::vector<ConvLayer> grads = std::move(partial[0]);
        for (int b = 1; b < cfg.batch_size; ++b) {
            for (std::size_t l = 0; l < grads.size(); ++l) {
                const ConvLayer& p = partial[b][l];
                for (std::size_t i = 0; i < grads[l].weights.size(); ++i)
                    grads[l].weights[i] += p.weights[i];
                for (std::size_t i = 0; i < grads[l].bias.size(); ++i)
                    grads[l].bias[i] += p.bias[i];
            }
        }

        double loss = 0.0;
        for (double v : partial_loss) loss += v;
        if (loss_log) loss_log->push_back(loss * inv_n);

        sgd_step(w.layers, grads, velocity, cfg.learning_rate, cfg.momentum);
    }
    return w;
}

} // namespace idcv
