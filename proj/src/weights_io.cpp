#include "idcv/weights_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace idcv {

namespace {

constexpr char kMagic[4] = {'I', 'D', 'C', 'V'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("weights: truncated archive");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw std::runtime_error("weights: truncated archive");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

void validate_archive(const WeightArchive& a) {
    if (a.stages.empty())
        throw std::invalid_argument("weights: archive has no iterations");
    if (a.gammas.size() != a.stages.size())
        throw std::invalid_argument("weights: gamma count does not match iterations");
    for (const DenoiserWeights& w : a.stages)
        if (!matches_architecture(w))
            throw std::invalid_argument("weights: layer list deviates from the fixed architecture");
}

} // namespace

void save_weights(const std::string& path, const WeightArchive& archive) {
    validate_archive(archive);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("weights: cannot write " + path);

    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(archive.stages.size()));
    put_f64(out, archive.gamma0);

    for (std::size_t t = 0; t < archive.stages.size(); ++t) {
        const DenoiserWeights& w = archive.stages[t];
        put_u32(out, static_cast<std::uint32_t>(w.layers.size()));
        for (const ConvLayer& l : w.layers) {
            out.put(static_cast<char>(l.name.size()));
            out.write(l.name.data(), static_cast<std::streamsize>(l.name.size()));
            put_u32(out, static_cast<std::uint32_t>(l.out_ch));
            put_u32(out, static_cast<std::uint32_t>(l.in_ch));
            put_u32(out, static_cast<std::uint32_t>(l.kh));
            put_u32(out, static_cast<std::uint32_t>(l.kw));
            put_u32(out, 1);  // stride
            put_u32(out, static_cast<std::uint32_t>(l.pad));
        }
        for (const ConvLayer& l : w.layers) {
            for (double v : l.weights) put_f64(out, v);
            for (double v : l.bias) put_f64(out, v);
        }
        put_f64(out, archive.gammas[t]);
    }
    if (!out) throw std::runtime_error("weights: write failed for " + path);
}

WeightArchive load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("weights: cannot open " + path);

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("weights: bad magic in " + path);
    const std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw std::runtime_error("weights: unsupported version " + std::to_string(version));
    const std::uint32_t iterations = get_u32(in);
    if (iterations == 0 || iterations > 64)
        throw std::runtime_error("weights: implausible iteration count");

    WeightArchive a;
    a.gamma0 = get_f64(in);
    a.stages.resize(iterations);
    a.gammas.resize(iterations);

    for (std::uint32_t t = 0; t < iterations; ++t) {
        const std::uint32_t layer_count = get_u32(in);
        DenoiserWeights& w = a.stages[t];
        w.layers.clear();
        for (std::uint32_t l = 0; l < layer_count; ++l) {
            const int name_len = in.get();
            if (name_len < 0) throw std::runtime_error("weights: truncated archive");
            std::string name(static_cast<std::size_t>(name_len), '\0');
            if (!in.read(name.data(), name_len))
                throw std::runtime_error("weights: truncated archive");
            const auto oc = static_cast<int>(get_u32(in));
            const auto ic = static_cast<int>(get_u32(in));
            const auto kh = static_cast<int>(get_u32(in));
            const auto kw = static_cast<int>(get_u32(in));
            const auto stride = get_u32(in);
            const auto pad = static_cast<int>(get_u32(in));
            if (stride != 1)
                throw std::runtime_error("weights: stride must be 1");
            if (kh != kw || oc < 1 || ic < 1 || kh < 1)
                throw std::runtime_error("weights: malformed layer header");
            ConvLayer layer(name, oc, ic, kh, pad);
            w.layers.push_back(std::move(layer));
        }
        if (!matches_architecture(w))
            throw std::runtime_error(
                "weights: iteration " + std::to_string(t + 1) +
                " deviates from the fixed 6-layer architecture");
        for (ConvLayer& l : w.layers) {
            for (double& v : l.weights) v = get_f64(in);
            for (double& v : l.bias) v = get_f64(in);
        }
        a.gammas[t] = get_f64(in);
    }

    if (in.peek() != EOF)
        throw std::runtime_error("weights: trailing bytes after declared payload");
    return a;
}

} // namespace idcv
