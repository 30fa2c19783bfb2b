#include "idcv/blur.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "idcv/pgm.hpp"
#include "idcv/rng.hpp"

namespace idcv {

Image blur_synthesize(const Image& x, const BlurKernel& k, const SynthesisConfig& cfg) {
    if (cfg.noise_sigma < 0.0)
        throw std::invalid_argument("blur_synthesize: negative noise sigma");
    if (k.height > x.height || k.width > x.width)
        throw std::invalid_argument("blur_synthesize: kernel larger than image");

    const int h = x.height, w = x.width;
    const int ch = k.height / 2, cw = k.width / 2;
    Image y(h, w);

    if (cfg.boundary == Boundary::kCircular) {
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                double acc = 0.0;
                for (int a = 0; a < k.height; ++a) {
                    const int ii = (i - (a - ch) % h + h) % h;
                    for (int b = 0; b < k.width; ++b) {
                        const int jj = (j - (b - cw) % w + w) % w;
                        acc += k.at(a, b) * x.at(ii, jj);
                    }
                }
                y.at(i, j) = acc;
            }
        }
    } else {
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                double acc = 0.0;
                for (int a = 0; a < k.height; ++a) {
                    const int ii = std::clamp(i - (a - ch), 0, h - 1);
                    for (int b = 0; b < k.width; ++b) {
                        const int jj = std::clamp(j - (b - cw), 0, w - 1);
                        acc += k.at(a, b) * x.at(ii, jj);
                    }
                }
                y.at(i, j) = acc;
            }
        }
    }

    if (cfg.noise_sigma > 0.0) {
        Rng rng(cfg.seed);
        for (double& v : y.data) v += cfg.noise_sigma * rng.gaussian();
    }
    return y;
}

BlurKernel generate_kernel(std::uint64_t seed, int size) {
    if (size % 2 == 0 || size < 11 || size > 31)
        throw std::invalid_argument("generate_kernel: size must be odd in [11,31]");

    Rng rng(seed);
    const int steps = 120 + static_cast<int>(rng.below(81));
    const double inertia = 0.9;
    const double accel = 0.25;

    std::vector<double> px(steps), py(steps);
    double vx = 0.0, vy = 0.0, x = 0.0, y = 0.0;
    double mx = 0.0, my = 0.0;
    for (int t = 0; t < steps; ++t) {
        vx = inertia * vx + accel * rng.gaussian();
        vy = inertia * vy + accel * rng.gaussian();
        x += vx;
        y += vy;
        px[t] = x;
        py[t] = y;
        mx += x;
        my += y;
    }
    mx /= steps;
    my /= steps;

    double maxdev = 0.0;
    for (int t = 0; t < steps; ++t)
        maxdev = std::max(maxdev, std::max(std::abs(px[t] - mx), std::abs(py[t] - my)));

    const double radius = (size - 1) / 2.0;
    const double extent = 0.35 + 0.65 * rng.uniform01();  // vary blur extent
    const double scale = maxdev > 1e-9 ? std::min(1.0, (radius - 1.0) / maxdev) * extent : 0.0;

    BlurKernel k;
    k.height = k.width = size;
    k.taps.assign(static_cast<std::size_t>(size) * size, 0.0);
    const double center = radius;
    const double weight = 1.0 / steps;
    for (int t = 0; t < steps; ++t) {
        const double fx = std::clamp(center + (px[t] - mx) * scale, 0.0, size - 1.000001);
        const double fy = std::clamp(center + (py[t] - my) * scale, 0.0, size - 1.000001);
        const int i0 = static_cast<int>(fy), j0 = static_cast<int>(fx);
        const double di = fy - i0, dj = fx - j0;
        k.at(i0, j0) += weight * (1 - di) * (1 - dj);
        k.at(i0, j0 + 1) += weight * (1 - di) * dj;
        k.at(i0 + 1, j0) += weight * di * (1 - dj);
        k.at(i0 + 1, j0 + 1) += weight * di * dj;
    }

    // 3-tap Gaussian smoothing (sigma 0.5), separable, zero border.
    const double g0 = 1.0, g1 = std::exp(-2.0);
    const double gn = g0 + 2.0 * g1;
    const double w0 = g0 / gn, w1 = g1 / gn;
    std::vector<double> tmp(k.taps.size(), 0.0);
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            double acc = w0 * k.at(i, j);
            if (j > 0) acc += w1 * k.at(i, j - 1);
            if (j + 1 < size) acc += w1 * k.at(i, j + 1);
            tmp[static_cast<std::size_t>(i) * size + j] = acc;
        }
    }
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            double acc = w0 * tmp[static_cast<std::size_t>(i) * size + j];
            if (i > 0) acc += w1 * tmp[static_cast<std::size_t>(i - 1) * size + j];
            if (i + 1 < size) acc += w1 * tmp[static_cast<std::size_t>(i + 1) * size + j];
            k.at(i, j) = acc;
        }
    }

    double sum = 0.0;
    for (double& t : k.taps) {
        if (t < 0.0) t = 0.0;
        sum += t;
    }
    for (double& t : k.taps) t /= sum;
    validate_kernel(k);
    return k;
}

DatasetManifest synthesize_dataset(const SynthSpec& spec) {
    namespace fs = std::filesystem;
    if (spec.clean_paths.empty())
        throw std::invalid_argument("synthesize_dataset: no clean images");
    if (spec.kernel_count < 1)
        throw std::invalid_argument("synthesize_dataset: kernel_count must be >= 1");
    if (spec.patch < 1)
        throw std::invalid_argument("synthesize_dataset: patch must be >= 1");
    fs::create_directories(spec.out_dir);

    std::vector<std::string> kernel_paths(spec.kernel_count);
    for (int j = 0; j < spec.kernel_count; ++j) {
        const int size = spec.kernel_sizes[j % spec.kernel_sizes.size()];
        const std::uint64_t kseed = Rng::substream(spec.seed, 1000000 + j).next_u64();
        BlurKernel k = generate_kernel(kseed, size);
        kernel_paths[j] = (fs::path(spec.out_dir) / ("kernel_" + std::to_string(j) + ".txt")).string();
        write_kernel(kernel_paths[j], k);
    }

    DatasetManifest manifest;
    const int n_img = static_cast<int>(spec.clean_paths.size());
    for (int i = 0; i < n_img; ++i) {
        const Image full = read_image(spec.clean_paths[i]);
        if (full.height < spec.patch || full.width < spec.patch)
            throw std::invalid_argument("synthesize_dataset: image smaller than patch: " +
                                        spec.clean_paths[i]);
        for (int j = 0; j < spec.kernel_count; ++j) {
            const int e = i * spec.kernel_count + j;
            Rng rng = Rng::substream(spec.seed, e);
            const int i0 = static_cast<int>(rng.below(full.height - spec.patch + 1));
            const int j0 = static_cast<int>(rng.below(full.width - spec.patch + 1));
            const std::uint64_t noise_seed = rng.next_u64();

            Image patch(spec.patch, spec.patch);
            for (int a = 0; a < spec.patch; ++a)
                for (int b = 0; b < spec.patch; ++b)
                    patch.at(a, b) = full.at(i0 + a, j0 + b);

            const std::string stem = std::to_string(i) + "_" + std::to_string(j);
            const std::string clean_path =
                (fs::path(spec.out_dir) / ("clean_" + stem + ".pgm")).string();
            write_image(clean_path, patch);

            ManifestEntry entry{clean_path, kernel_paths[j], spec.noise_sigma, noise_seed};
            // Preview of the observation; training regenerates it from the entry.
            const Image y = manifest_observation(entry);
            write_image((fs::path(spec.out_dir) / ("blur_" + stem + ".pgm")).string(), y);
            manifest.push_back(std::move(entry));
        }
    }

    save_manifest((fs::path(spec.out_dir) / "manifest.tsv").string(), manifest);
    return manifest;
}

Image manifest_observation(const ManifestEntry& e) {
    const Image clean = read_image(e.clean_path);
    const BlurKernel k = read_kernel(e.kernel_path);
    return blur_synthesize(clean, k, SynthesisConfig{e.sigma, e.seed, Boundary::kCircular});
}

} // namespace idcv
