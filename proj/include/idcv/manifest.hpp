#ifndef IDCV_MANIFEST_HPP
#define IDCV_MANIFEST_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace idcv {

// One synthesized observation: the blurry input is regenerated on demand
// from (clean, kernel, sigma, seed), which keeps training data at full
// double precision and bit-reproducible.
struct ManifestEntry {
    std::string clean_path;
    std::string kernel_path;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

using DatasetManifest = std::vector<ManifestEntry>;

// Line-oriented, tab-separated: clean<TAB>kernel<TAB>sigma<TAB>seed.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& m);

} // namespace idcv

#endif
