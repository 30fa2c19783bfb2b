#ifndef IDCV_WEIGHTS_IO_HPP
#define IDCV_WEIGHTS_IO_HPP

#include <string>
#include <vector>

#include "idcv/fcnn.hpp"

namespace idcv {

// Persistent form of a trained pipeline: one denoiser weight set and one
// gamma per iteration, plus the initial deconvolution's gamma0.
//
// Binary layout (all integers and floats little-endian):
//   magic "IDCV", u32 version=1, u32 iteration count, f64 gamma0,
//   then per iteration:
//     u32 layer count, per layer (u8 name length, name bytes, u32 out
//     channels, u32 in channels, u32 kernel height, u32 kernel width,
//     u32 stride, u32 pad),
//     per layer f64 weights [out][in][kh][kw] then f64 biases [out],
//     f64 gamma.
struct WeightArchive {
    double gamma0 = 1.0;
    std::vector<DenoiserWeights> stages;
    std::vector<double> gammas;  // one per stage
};

// Byte-exact round trip. Load rejects unknown versions, layer lists that
// deviate from the fixed 6-layer architecture, and truncated or oversized
// payloads.
void save_weights(const std::string& path, const WeightArchive& archive);
WeightArchive load_weights(const std::string& path);

} // namespace idcv

#endif
