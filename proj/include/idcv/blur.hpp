#ifndef IDCV_BLUR_HPP
#define IDCV_BLUR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "idcv/field.hpp"
#include "idcv/kernel.hpp"
#include "idcv/manifest.hpp"

namespace idcv {

enum class Boundary { kCircular, kReplicateTaper };

struct SynthesisConfig {
    double noise_sigma = 0.0;  // std dev as a fraction of the [0,1] range
    std::uint64_t seed = 0;
    Boundary boundary = Boundary::kCircular;
};

// Forward observation model: y = k (*) x + n with i.i.d. Gaussian noise,
// deterministic given the seed. Circular boundary matches the FFT solver
// exactly; replicate-taper pads with edge replication for realistic
// images. Throws if the kernel does not fit inside the image.
Image blur_synthesize(const Image& x, const BlurKernel& k, const SynthesisConfig& cfg);

// Simulated camera-shake kernel: a random-walk trajectory with inertia,
// bilinearly splatted, smoothed with a small Gaussian, clipped to >= 0 and
// normalized to sum 1. Deterministic per seed. Size must be odd in [11,31].
BlurKernel generate_kernel(std::uint64_t seed, int size);

struct SynthSpec {
    std::vector<std::string> clean_paths;
    int kernel_count = 1;
    std::vector<int> kernel_sizes{15};  // cycled across kernels
    double noise_sigma = 0.01;
    int patch = 64;
    std::uint64_t seed = 0;
    std::string out_dir;
};

// Crops one random patch per (image, kernel) pair, writes clean patches,
// kernels and blurred previews under out_dir, and returns the manifest
// (also written as out_dir/manifest.tsv). Entry e of a run with seed S
// draws from substream (S, e), so the result does not depend on execution
// order.
DatasetManifest synthesize_dataset(const SynthSpec& spec);

// Regenerates the blurry observation for a manifest entry at full double
// precision (circular boundary, the synthesis default).
Image manifest_observation(const ManifestEntry& e);

} // namespace idcv

#endif
