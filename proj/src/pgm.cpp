#include "idcv/pgm.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace idcv {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int parse_positive(const std::string& tok, const char* what) {
    try {
        std::size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size() || v <= 0 || v > 65535)
            throw std::invalid_argument(tok);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("pgm: bad ") + what + " '" + tok + "'");
    }
}

} // namespace

Image read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);

    std::string magic = next_token(in);
    if (magic != "P5")
        throw std::runtime_error("pgm: unsupported format '" + magic +
                                 "' in " + path + " (binary P5 required)");

    const int width = parse_positive(next_token(in), "width");
    const int height = parse_positive(next_token(in), "height");
    const int maxval = parse_positive(next_token(in), "maxval");
    // next_token consumed exactly the single whitespace after maxval

    const bool wide = maxval > 255;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<unsigned char> raw(n * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw std::runtime_error("pgm: truncated payload in " + path);

    Image img(height, width);
    const double scale = 1.0 / maxval;
    if (wide) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint16_t s =
                static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
            img.data[i] = s * scale;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) img.data[i] = raw[i] * scale;
    }
    return img;
}

void write_image(const std::string& path, const Image& img, int bits) {
    if (bits != 8 && bits != 16)
        throw std::invalid_argument("pgm: bits must be 8 or 16");
    if (img.height < 1 || img.width < 1)
        throw std::invalid_argument("pgm: empty image");

    const int maxval = bits == 8 ? 255 : 65535;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";

    std::vector<unsigned char> raw;
    raw.reserve(img.size() * (bits == 16 ? 2 : 1));
    for (double v : img.data) {
        double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        const auto s = static_cast<std::uint32_t>(std::lround(c * maxval));
        if (bits == 16) {
            raw.push_back(static_cast<unsigned char>(s >> 8));
            raw.push_back(static_cast<unsigned char>(s & 0xff));
        } else {
            raw.push_back(static_cast<unsigned char>(s));
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

} // namespace idcv
