#ifndef IDCV_PGM_HPP
#define IDCV_PGM_HPP

#include <string>

#include "idcv/field.hpp"

namespace idcv {

// Binary PGM (P5) I/O, 8- or 16-bit. Pixel values map linearly to [0,1]:
// v = sample / maxval. 16-bit samples are big-endian per the format.
// Throws std::runtime_error on malformed headers or truncated payloads;
// ASCII PGM (P2) is rejected.
Image read_image(const std::string& path);

// Writes with maxval 255 (bits=8) or 65535 (bits=16, default). Values are
// clamped to [0,1] and rounded to the nearest level, so write followed by
// read differs from the original by at most half a quantization step.
void write_image(const std::string& path, const Image& img, int bits = 16);

} // namespace idcv

#endif
